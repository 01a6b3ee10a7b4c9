// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ASRKIT_TYING_HPP
#define ASRKIT_TYING_HPP

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "asrkit/frontend.hpp"
#include "asrkit/gmm.hpp"

namespace asrkit {

// Triphone context of a speech HMM state. "#" marks a word boundary;
// silence never enters the tree.
struct TriphoneContext {
  std::string left;
  std::string center;
  std::string right;
  int hmm_position = 0;

  auto operator<=>(const TriphoneContext&) const = default;
};

enum class QuestionField { kLeft, kCenter, kRight, kPosition };

std::string question_field_name(QuestionField f);
QuestionField parse_question_field(const std::string& s);

struct Question {
  std::string name;
  QuestionField field = QuestionField::kCenter;
  std::set<std::string> values;  // phone set, or positions as "0","1","2"

  // Boundary "#" is a member of no phone set, so it answers "no".
  bool answer(const TriphoneContext& ctx) const;
};

struct QuestionSet {
  std::vector<Question> questions;

  void validate() const;
};

// Question set file: `name<TAB>field<TAB>value,value,...`
QuestionSet load_questions(const std::string& path);
void save_questions(const QuestionSet& questions, const std::string& path);

// Small built-in phonetic-category set over a given inventory; user-provided
// sets are the normal path.
QuestionSet default_questions(const std::set<std::string>& phones);

struct ContextOccupancy {
  double count = 0;
  std::vector<double> sum;
  std::vector<double> sumsq;
};

struct ContextStats {
  std::size_t dim = 0;
  std::map<TriphoneContext, ContextOccupancy> stats;

  void add_frame(const TriphoneContext& ctx, std::span<const double> x);
  void merge(const ContextStats& other);
};

// First/second-order accumulation per observed triphone context. The
// composed chains supply each frame's context; silence frames are skipped.
ContextStats collect_stats(const std::vector<Alignment>& alignments,
                           const std::vector<HmmChain>& chains,
                           const std::vector<FeatureMatrix>& features);

struct TreeNode {
  bool is_leaf = true;
  int question = -1;   // index into the QuestionSet
  int yes_child = -1;  // node indices
  int no_child = -1;
  int leaf_id = -1;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // node 0 is the root
  QuestionSet questions;
  int leaf_count = 0;

  int classify(const TriphoneContext& ctx) const;
};

struct TreeGrowConfig {
  double min_split_occupancy = 100;
  double min_gain = 0;
};

// Greedy best-first growth under a single-Gaussian diagonal-covariance
// log-likelihood criterion; stops at exactly `leaf_budget` leaves (or when no
// candidate split is feasible, which is an error if the budget is not met).
DecisionTree grow_tree(const ContextStats& stats, const QuestionSet& questions,
                       int leaf_budget, const TreeGrowConfig& config = {});

// L(S) = -1/2 * n * sum_d (1 + log 2pi + log var_d); the split criterion.
double cluster_loglik(const ContextOccupancy& occ, std::size_t dim);

// StateMapper over the tree: speech states classify through the tree,
// silence occupies dedicated ids appended after the leaves.
StateMapper tree_mapper(const DecisionTree& tree,
                        const std::string& silence_symbol,
                        int silence_states);

// Preorder text serialization: `node <question-id>` / `leaf <id>` lines.
void save_tree(const DecisionTree& tree, const std::string& path);
DecisionTree load_tree(const std::string& path);

}  // namespace asrkit

#endif  // ASRKIT_TYING_HPP
