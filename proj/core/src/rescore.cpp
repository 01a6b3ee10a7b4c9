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

#include <algorithm>
#include <deque>
#include <unordered_map>

#include "asrkit/search.hpp"

namespace asrkit {

namespace {

struct Hyp {
  LmState state;
  std::vector<std::string> history;  // last recombination_order-1 words
  double score = 0;                  // combined, for pruning
  int new_node = 0;                  // node in the rescored lattice
};

std::size_t hyp_key(const Hyp& h) {
  std::size_t k = h.state.hash();
  for (const auto& w : h.history) {
    k ^= fnv1a(w.data(), w.size());
    k *= 1099511628211ull;
  }
  return k;
}

}  // namespace

Lattice rescore_pushforward(const Lattice& lattice, const LmScorer& scorer,
                            const RescoreConfig& config) {
  lattice.validate();
  if (config.recombination_order < 1)
    throw DataError("recombination order must be at least 1");
  const std::size_t max_hist = config.recombination_order - 1;
  const auto order = lattice.topological_order();
  const auto outgoing = lattice.arcs_from();
  std::vector<int> frame(lattice.nodes.size());
  for (const auto& n : lattice.nodes) frame[n.id] = n.frame;

  Lattice out;
  out.utterance_id = lattice.utterance_id;
  out.start = 0;
  out.nodes.push_back({0, frame[lattice.start]});
  const int end_frame = frame[lattice.end];
  out.end = 1;
  out.nodes.push_back({1, end_frame});

  // surviving hypotheses per original node
  std::vector<std::vector<Hyp>> hyps(lattice.nodes.size());
  {
    Hyp h;
    h.state = scorer.initial_state();
    h.score = 0;
    h.new_node = out.start;
    hyps[lattice.start].push_back(std::move(h));
  }

  bool reached_end = false;
  for (int node : order) {
    auto& here = hyps[node];
    if (here.empty()) continue;
    // recombine, then prune to the strongest
    std::unordered_map<std::size_t, std::size_t> best;  // key -> index
    std::vector<Hyp> merged;
    for (auto& h : here) {
      const std::size_t key = hyp_key(h);
      auto it = best.find(key);
      if (it == best.end()) {
        best[key] = merged.size();
        merged.push_back(std::move(h));
      } else if (h.score > merged[it->second].score) {
        merged[it->second] = std::move(h);
      }
    }
    if (config.max_hyps_per_node > 0 &&
        merged.size() > static_cast<std::size_t>(config.max_hyps_per_node)) {
      std::sort(merged.begin(), merged.end(),
                [](const Hyp& a, const Hyp& b) { return a.score > b.score; });
      merged.resize(config.max_hyps_per_node);
    }
    here = std::move(merged);

    if (node == lattice.end) {
      reached_end = true;
      continue;
    }
    for (const auto& h : here) {
      for (int ai : outgoing[node]) {
        const auto& arc = lattice.arcs[ai];
        Hyp next = h;
        double lm = 0;
        if (arc.word != kEpsilonWord) {
          auto [ns, lp] = scorer.score(h.state, arc.word);
          next.state = std::move(ns);
          lm = lp;
          next.history.push_back(arc.word);
          while (next.history.size() > max_hist)
            next.history.erase(next.history.begin());
        } else if (arc.to == lattice.end) {
          auto [ns, lp] = scorer.score(h.state, kSentenceEnd);
          next.state = std::move(ns);
          lm = lp;
        }
        LatticeArc copy = arc;
        copy.lm = lm;
        copy.from = h.new_node;
        next.score = h.score + arc_weight(copy, config.scales);
        if (arc.to == lattice.end) {
          copy.to = out.end;
        } else {
          // same surviving hypothesis = same rescored node; match by key
          const std::size_t key = hyp_key(next);
          int target = -1;
          for (const auto& existing : hyps[arc.to])
            if (hyp_key(existing) == key) {
              target = existing.new_node;
              break;
            }
          if (target == -1) {
            target = static_cast<int>(out.nodes.size());
            out.nodes.push_back({target, frame[arc.to]});
          }
          copy.to = target;
          next.new_node = target;
        }
        out.arcs.push_back(std::move(copy));
        if (arc.to != lattice.end) hyps[arc.to].push_back(std::move(next));
        else hyps[lattice.end].push_back(std::move(next));
      }
    }
    here.clear();  // free as we go
  }
  if (!reached_end && hyps[lattice.end].empty())
    throw SearchError("rescoring reached no complete path");

  // pruning may strand nodes/arcs; drop anything off the surviving graph
  std::vector<bool> fwd(out.nodes.size(), false), bwd(out.nodes.size(), false);
  fwd[out.start] = true;
  {
    auto of = out.arcs_from();
    std::deque<int> q{out.start};
    while (!q.empty()) {
      int n = q.front();
      q.pop_front();
      for (int ai : of[n])
        if (!fwd[out.arcs[ai].to]) {
          fwd[out.arcs[ai].to] = true;
          q.push_back(out.arcs[ai].to);
        }
    }
    auto oi = out.arcs_into();
    bwd[out.end] = true;
    std::deque<int> r{out.end};
    while (!r.empty()) {
      int n = r.front();
      r.pop_front();
      for (int ai : oi[n])
        if (!bwd[out.arcs[ai].from]) {
          bwd[out.arcs[ai].from] = true;
          r.push_back(out.arcs[ai].from);
        }
    }
  }
  Lattice pruned;
  pruned.utterance_id = out.utterance_id;
  std::vector<int> remap(out.nodes.size(), -1);
  for (const auto& n : out.nodes)
    if (fwd[n.id] && bwd[n.id]) {
      remap[n.id] = static_cast<int>(pruned.nodes.size());
      pruned.nodes.push_back({remap[n.id], n.frame});
    }
  for (const auto& a : out.arcs)
    if (remap[a.from] >= 0 && remap[a.to] >= 0) {
      LatticeArc copy = a;
      copy.from = remap[a.from];
      copy.to = remap[a.to];
      pruned.arcs.push_back(std::move(copy));
    }
  pruned.start = remap[out.start];
  pruned.end = remap[out.end];
  if (pruned.start < 0 || pruned.end < 0)
    throw SearchError("rescoring reached no complete path");
  pruned.validate();
  return pruned;
}

}  // namespace asrkit
