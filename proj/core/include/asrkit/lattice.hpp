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

#ifndef ASRKIT_LATTICE_HPP
#define ASRKIT_LATTICE_HPP

#include <string>
#include <vector>

#include "asrkit/common.hpp"

namespace asrkit {

// word label for non-emitting arcs (sentence end, silence)
inline constexpr const char* kEpsilonWord = "@eps";

struct LatticeNode {
  int id = 0;
  int frame = 0;
};

struct LatticeArc {
  int from = 0;
  int to = 0;
  std::string word;        // kEpsilonWord for label-free arcs
  double am = 0;           // acoustic score, natural log
  double lm = 0;           // language model score, log10
  std::vector<int> states;  // per-frame tied states; may be empty
  double accuracy = 0;      // filled by sequence-training annotation
};

struct Lattice {
  std::string utterance_id;
  std::vector<LatticeNode> nodes;
  std::vector<LatticeArc> arcs;
  int start = 0;
  int end = 0;

  void validate() const;
  // node ids in topological order (by frame, ties by id)
  std::vector<int> topological_order() const;
  std::vector<std::vector<int>> arcs_from() const;  // arc indices per node
  std::vector<std::vector<int>> arcs_into() const;
};

// Relative weights for combining arc scores into one log-domain cost.
struct LatticeScales {
  double am_scale = 1.0;
  double lm_scale = 12.0;
  double word_penalty = 0.0;  // added per non-epsilon arc
};

// natural-log combined weight of one arc
double arc_weight(const LatticeArc& arc, const LatticeScales& scales);

struct BestPath {
  std::vector<std::string> words;
  double score = 0;  // combined, natural log
  std::vector<int> arc_indices;
};

BestPath lattice_best_path(const Lattice& lattice,
                           const LatticeScales& scales);

// Minimum WER over all lattice paths against a reference word sequence.
struct OracleResult {
  int errors = 0;
  std::vector<std::string> words;  // the path achieving the minimum
};
OracleResult oracle_path(const Lattice& lattice,
                         const std::vector<std::string>& reference);

struct ForwardBackward {
  std::vector<double> alpha;          // per node, natural log
  std::vector<double> beta;
  std::vector<double> arc_posterior;  // linear, per arc
  double total = 0;                   // log partition
};

ForwardBackward lattice_forward_backward(const Lattice& lattice,
                                         const LatticeScales& scales);

// Text format: `lattice <utt> <nodes> <arcs> <start> <end>` header,
// `node <id> <frame>` and `arc <from> <to> <word> <am> <lm> [states...]`.
void save_lattices(const std::vector<Lattice>& lattices,
                   const std::string& path);
std::vector<Lattice> load_lattices(const std::string& path);

}  // namespace asrkit

#endif  // ASRKIT_LATTICE_HPP
