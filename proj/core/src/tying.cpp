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

#include "asrkit/tying.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace asrkit {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

std::string question_field_name(QuestionField f) {
  switch (f) {
    case QuestionField::kLeft: return "left";
    case QuestionField::kCenter: return "center";
    case QuestionField::kRight: return "right";
    case QuestionField::kPosition: return "position";
  }
  return "?";
}

QuestionField parse_question_field(const std::string& s) {
  if (s == "left") return QuestionField::kLeft;
  if (s == "center") return QuestionField::kCenter;
  if (s == "right") return QuestionField::kRight;
  if (s == "position") return QuestionField::kPosition;
  throw DataError("unknown question field: " + s);
}

bool Question::answer(const TriphoneContext& ctx) const {
  switch (field) {
    case QuestionField::kLeft: return values.count(ctx.left) > 0;
    case QuestionField::kCenter: return values.count(ctx.center) > 0;
    case QuestionField::kRight: return values.count(ctx.right) > 0;
    case QuestionField::kPosition:
      return values.count(std::to_string(ctx.hmm_position)) > 0;
  }
  return false;
}

void QuestionSet::validate() const {
  std::set<std::string> names;
  for (const auto& q : questions) {
    if (!names.insert(q.name).second)
      throw DataError("duplicate question name: " + q.name);
    if (q.values.empty())
      throw DataError("question '" + q.name + "' has an empty value set");
  }
}

QuestionSet load_questions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open question set: " + path);
  QuestionSet qs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream iss(line);
    Question q;
    std::string values;
    if (!std::getline(iss, q.name, '\t'))
      throw DataError(path + ":" + std::to_string(lineno) + ": bad line");
    std::string field;
    if (!std::getline(iss, field, '\t') || !std::getline(iss, values))
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected `name<TAB>field<TAB>values`");
    q.field = parse_question_field(field);
    std::istringstream vss(values);
    std::string v;
    while (std::getline(vss, v, ','))
      if (!v.empty()) q.values.insert(v);
    qs.questions.push_back(std::move(q));
  }
  qs.validate();
  return qs;
}

void save_questions(const QuestionSet& questions, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write question set: " + path);
  for (const auto& q : questions.questions) {
    out << q.name << '\t' << question_field_name(q.field) << '\t';
    bool first = true;
    for (const auto& v : q.values) {
      if (!first) out << ',';
      out << v;
      first = false;
    }
    out << '\n';
  }
}

QuestionSet default_questions(const std::set<std::string>& phones) {
  // Coarse phonetic categories restricted to the given inventory, plus
  // singleton and position questions.
  static const std::vector<std::pair<std::string, std::set<std::string>>>
      categories = {
          {"vowel", {"a", "e", "i", "o", "u", "aa", "ae", "ah", "ao", "aw",
                     "ax", "ay", "eh", "er", "ey", "ih", "iy", "ow", "oy",
                     "uh", "uw"}},
          {"nasal", {"m", "n", "ng"}},
          {"fricative", {"f", "v", "s", "z", "sh", "zh", "th", "dh", "h",
                         "hh"}},
          {"stop", {"p", "b", "t", "d", "k", "g"}},
          {"liquid", {"l", "r", "w", "y"}},
      };
  QuestionSet qs;
  for (auto field : {QuestionField::kLeft, QuestionField::kRight,
                     QuestionField::kCenter}) {
    for (const auto& [name, members] : categories) {
      Question q;
      q.field = field;
      q.name = question_field_name(field) + "-" + name;
      for (const auto& ph : members)
        if (phones.count(ph)) q.values.insert(ph);
      if (!q.values.empty()) qs.questions.push_back(std::move(q));
    }
    for (const auto& ph : phones) {
      Question q;
      q.field = field;
      q.name = question_field_name(field) + "-is-" + ph;
      q.values = {ph};
      qs.questions.push_back(std::move(q));
    }
  }
  for (int p = 0; p < 3; ++p) {
    Question q;
    q.field = QuestionField::kPosition;
    q.name = "position-is-" + std::to_string(p);
    q.values = {std::to_string(p)};
    qs.questions.push_back(std::move(q));
  }
  qs.validate();
  return qs;
}

void ContextStats::add_frame(const TriphoneContext& ctx,
                             std::span<const double> x) {
  if (dim == 0) dim = x.size();
  if (x.size() != dim) throw DataError("context stats dimension mismatch");
  auto& occ = stats[ctx];
  if (occ.sum.empty()) {
    occ.sum.assign(dim, 0.0);
    occ.sumsq.assign(dim, 0.0);
  }
  occ.count += 1;
  for (std::size_t i = 0; i < dim; ++i) {
    occ.sum[i] += x[i];
    occ.sumsq[i] += x[i] * x[i];
  }
}

void ContextStats::merge(const ContextStats& other) {
  if (dim == 0) dim = other.dim;
  if (other.dim != 0 && other.dim != dim)
    throw DataError("context stats dimension mismatch in merge");
  for (const auto& [ctx, occ] : other.stats) {
    auto& mine = stats[ctx];
    if (mine.sum.empty()) {
      mine.sum.assign(dim, 0.0);
      mine.sumsq.assign(dim, 0.0);
    }
    mine.count += occ.count;
    for (std::size_t i = 0; i < dim; ++i) {
      mine.sum[i] += occ.sum[i];
      mine.sumsq[i] += occ.sumsq[i];
    }
  }
}

ContextStats collect_stats(const std::vector<Alignment>& alignments,
                           const std::vector<HmmChain>& chains,
                           const std::vector<FeatureMatrix>& features) {
  if (alignments.size() != features.size() ||
      alignments.size() != chains.size())
    throw DataError("collect_stats: alignments/chains/features mismatch");
  ContextStats stats;
  for (std::size_t u = 0; u < alignments.size(); ++u) {
    Alignment ali = alignments[u];
    if (ali.size() != features[u].frames())
      throw DataError("collect_stats: alignment length mismatch");
    if (!ali.empty() && ali.front().chain_index < 0)
      reconstruct_chain_indices(ali, chains[u]);
    for (std::size_t t = 0; t < ali.size(); ++t) {
      const ChainState& cs = chains[u].at(ali[t].chain_index);
      if (cs.is_silence) continue;
      TriphoneContext ctx{cs.left_context, cs.phone, cs.right_context,
                          cs.hmm_position};
      stats.add_frame(ctx, features[u].values.row(t));
    }
  }
  return stats;
}

double cluster_loglik(const ContextOccupancy& occ, std::size_t dim) {
  if (occ.count <= 0) return 0;
  double ll = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double mean = occ.sum[i] / occ.count;
    const double var =
        std::max(occ.sumsq[i] / occ.count - mean * mean, 1e-8);
    ll += 1.0 + kLog2Pi + std::log(var);
  }
  return -0.5 * occ.count * ll;
}

int DecisionTree::classify(const TriphoneContext& ctx) const {
  int node = 0;
  while (!nodes[node].is_leaf) {
    const auto& q = questions.questions[nodes[node].question];
    node = q.answer(ctx) ? nodes[node].yes_child : nodes[node].no_child;
  }
  return nodes[node].leaf_id;
}

DecisionTree grow_tree(const ContextStats& stats, const QuestionSet& questions,
                       int leaf_budget, const TreeGrowConfig& config) {
  questions.validate();
  if (leaf_budget < 1) throw DataError("leaf budget must be >= 1");

  std::vector<std::pair<TriphoneContext, ContextOccupancy>> contexts;
  for (const auto& [ctx, occ] : stats.stats)
    if (occ.count > 0) contexts.push_back({ctx, occ});
  if (static_cast<std::size_t>(leaf_budget) > contexts.size())
    throw DataError("leaf budget " + std::to_string(leaf_budget) +
                    " exceeds " + std::to_string(contexts.size()) +
                    " distinct observed contexts");

  struct Leaf {
    int node = -1;
    std::vector<std::size_t> members;  // indices into `contexts`
    ContextOccupancy occ;
  };

  auto pooled = [&](const std::vector<std::size_t>& members) {
    ContextOccupancy occ;
    occ.sum.assign(stats.dim, 0.0);
    occ.sumsq.assign(stats.dim, 0.0);
    for (auto i : members) {
      occ.count += contexts[i].second.count;
      for (std::size_t j = 0; j < stats.dim; ++j) {
        occ.sum[j] += contexts[i].second.sum[j];
        occ.sumsq[j] += contexts[i].second.sumsq[j];
      }
    }
    return occ;
  };

  DecisionTree tree;
  tree.questions = questions;
  tree.nodes.push_back({});
  std::vector<Leaf> leaves(1);
  leaves[0].node = 0;
  leaves[0].members.resize(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) leaves[0].members[i] = i;
  leaves[0].occ = pooled(leaves[0].members);

  struct Candidate {
    double gain = kNegInf;
    std::size_t leaf = 0;
    int question = -1;
    std::vector<std::size_t> yes, no;
  };

  auto evaluate = [&](const Leaf& leaf, int qi) {
    Candidate cand;
    cand.question = qi;
    const auto& q = questions.questions[qi];
    for (auto i : leaf.members)
      (q.answer(contexts[i].first) ? cand.yes : cand.no).push_back(i);
    if (cand.yes.empty() || cand.no.empty()) return cand;
    ContextOccupancy yes_occ = pooled(cand.yes), no_occ = pooled(cand.no);
    if (yes_occ.count < config.min_split_occupancy ||
        no_occ.count < config.min_split_occupancy)
      return cand;
    cand.gain = cluster_loglik(yes_occ, stats.dim) +
                cluster_loglik(no_occ, stats.dim) -
                cluster_loglik(leaf.occ, stats.dim);
    return cand;
  };

  while (static_cast<int>(leaves.size()) < leaf_budget) {
    Candidate best;
    for (std::size_t li = 0; li < leaves.size(); ++li)
      for (std::size_t qi = 0; qi < questions.questions.size(); ++qi) {
        Candidate cand = evaluate(leaves[li], static_cast<int>(qi));
        cand.leaf = li;
        // ties: lowest question id, then lowest leaf id (scan order)
        if (cand.gain > best.gain) best = std::move(cand);
      }
    if (best.gain == kNegInf || best.gain < config.min_gain)
      throw DataError(
          "no feasible split left; achievable leaf count is " +
          std::to_string(leaves.size()) + " (requested " +
          std::to_string(leaf_budget) + ")");

    const int node_idx = leaves[best.leaf].node;
    // index, not reference: push_back may reallocate the node vector
    tree.nodes[node_idx].is_leaf = false;
    tree.nodes[node_idx].question = best.question;
    tree.nodes[node_idx].leaf_id = -1;
    tree.nodes[node_idx].yes_child = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[node_idx].no_child = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});

    Leaf yes_leaf, no_leaf;
    yes_leaf.node = tree.nodes[node_idx].yes_child;
    yes_leaf.members = std::move(best.yes);
    yes_leaf.occ = pooled(yes_leaf.members);
    no_leaf.node = tree.nodes[node_idx].no_child;
    no_leaf.members = std::move(best.no);
    no_leaf.occ = pooled(no_leaf.members);
    leaves[best.leaf] = std::move(yes_leaf);
    leaves.push_back(std::move(no_leaf));
  }

  // dense leaf ids in node order for serialization stability
  std::vector<int> leaf_nodes;
  for (const auto& leaf : leaves) leaf_nodes.push_back(leaf.node);
  std::sort(leaf_nodes.begin(), leaf_nodes.end());
  for (std::size_t i = 0; i < leaf_nodes.size(); ++i)
    tree.nodes[leaf_nodes[i]].leaf_id = static_cast<int>(i);
  tree.leaf_count = static_cast<int>(leaf_nodes.size());
  return tree;
}

StateMapper tree_mapper(const DecisionTree& tree,
                        const std::string& silence_symbol,
                        int silence_states) {
  DecisionTree copy = tree;
  std::string silence = silence_symbol;
  int leaves = tree.leaf_count;
  (void)silence_states;
  return [copy, silence, leaves](const std::string& left,
                                 const std::string& center,
                                 const std::string& right, int pos) {
    if (center == silence) return leaves + pos;
    TriphoneContext ctx{left, center, right, pos};
    return copy.classify(ctx);
  };
}

void save_tree(const DecisionTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write tree file: " + path);
  out << "CART 1 leaves " << tree.leaf_count << '\n';
  // questions inline so the tree file is self-contained
  out << "questions " << tree.questions.questions.size() << '\n';
  for (const auto& q : tree.questions.questions) {
    out << q.name << '\t' << question_field_name(q.field) << '\t';
    bool first = true;
    for (const auto& v : q.values) {
      if (!first) out << ',';
      out << v;
      first = false;
    }
    out << '\n';
  }
  // preorder
  std::function<void(int)> emit = [&](int n) {
    const auto& node = tree.nodes[n];
    if (node.is_leaf) {
      out << "leaf " << node.leaf_id << '\n';
    } else {
      out << "node " << node.question << '\n';
      emit(node.yes_child);
      emit(node.no_child);
    }
  };
  emit(0);
}

DecisionTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tree file: " + path);
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  std::string magic, leaves_tag;
  int version = 0, leaf_count = 0;
  header >> magic >> version >> leaves_tag >> leaf_count;
  if (magic != "CART" || version != 1)
    throw DataError(path + ": not a tree file");

  DecisionTree tree;
  tree.leaf_count = leaf_count;
  std::getline(in, line);
  std::istringstream qheader(line);
  std::string qtag;
  std::size_t num_questions = 0;
  qheader >> qtag >> num_questions;
  if (qtag != "questions") throw DataError(path + ": missing question block");
  for (std::size_t i = 0; i < num_questions; ++i) {
    if (!std::getline(in, line))
      throw DataError(path + ": truncated question block");
    std::istringstream iss(line);
    Question q;
    std::string field, values;
    std::getline(iss, q.name, '\t');
    std::getline(iss, field, '\t');
    std::getline(iss, values);
    q.field = parse_question_field(field);
    std::istringstream vss(values);
    std::string v;
    while (std::getline(vss, v, ','))
      if (!v.empty()) q.values.insert(v);
    tree.questions.questions.push_back(std::move(q));
  }

  std::function<int()> parse = [&]() -> int {
    if (!std::getline(in, line))
      throw DataError(path + ": truncated tree serialization");
    std::istringstream iss(line);
    std::string tag;
    iss >> tag;
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    if (tag == "leaf") {
      iss >> tree.nodes[idx].leaf_id;
    } else if (tag == "node") {
      tree.nodes[idx].is_leaf = false;
      iss >> tree.nodes[idx].question;
      tree.nodes[idx].yes_child = parse();
      tree.nodes[idx].no_child = parse();
    } else {
      throw DataError(path + ": unexpected tree line '" + line + "'");
    }
    return idx;
  };
  parse();
  return tree;
}

}  // namespace asrkit
