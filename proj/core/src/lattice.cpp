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

#include "asrkit/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace asrkit {

void Lattice::validate() const {
  if (nodes.empty()) throw DataError("lattice has no nodes");
  std::vector<bool> seen(nodes.size(), false);
  for (const auto& n : nodes) {
    if (n.id < 0 || n.id >= static_cast<int>(nodes.size()) || seen[n.id])
      throw DataError("lattice node ids must be dense and unique");
    seen[n.id] = true;
  }
  std::vector<int> frame(nodes.size());
  for (const auto& n : nodes) frame[n.id] = n.frame;
  for (const auto& a : arcs) {
    if (a.from < 0 || a.from >= static_cast<int>(nodes.size()) || a.to < 0 ||
        a.to >= static_cast<int>(nodes.size()))
      throw DataError("lattice arc references unknown node");
    if (frame[a.to] < frame[a.from])
      throw DataError("lattice arc goes backwards in time");
    if (a.word.empty()) throw DataError("lattice arc with empty word label");
  }
  if (start < 0 || start >= static_cast<int>(nodes.size()) || end < 0 ||
      end >= static_cast<int>(nodes.size()))
    throw DataError("lattice start/end out of range");
}

std::vector<int> Lattice::topological_order() const {
  // Kahn's algorithm; arcs may connect nodes at the same frame (sentence-end
  // epsilons), so sorting by frame alone is not enough
  std::vector<int> indegree(nodes.size(), 0);
  for (const auto& a : arcs) ++indegree[a.to];
  std::vector<int> frame(nodes.size());
  for (const auto& n : nodes) frame[n.id] = n.frame;
  auto from = arcs_from();
  std::vector<int> ready, order;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (indegree[i] == 0) ready.push_back(static_cast<int>(i));
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end(), [&](int a, int b) {
      return std::pair(frame[a], a) < std::pair(frame[b], b);
    });
    const int n = *it;
    ready.erase(it);
    order.push_back(n);
    for (int ai : from[n])
      if (--indegree[arcs[ai].to] == 0) ready.push_back(arcs[ai].to);
  }
  if (order.size() != nodes.size())
    throw DataError("lattice contains a cycle");
  return order;
}

std::vector<std::vector<int>> Lattice::arcs_from() const {
  std::vector<std::vector<int>> out(nodes.size());
  for (std::size_t i = 0; i < arcs.size(); ++i)
    out[arcs[i].from].push_back(static_cast<int>(i));
  return out;
}

std::vector<std::vector<int>> Lattice::arcs_into() const {
  std::vector<std::vector<int>> out(nodes.size());
  for (std::size_t i = 0; i < arcs.size(); ++i)
    out[arcs[i].to].push_back(static_cast<int>(i));
  return out;
}

double arc_weight(const LatticeArc& arc, const LatticeScales& scales) {
  double w = scales.am_scale * arc.am + scales.lm_scale * kLn10 * arc.lm;
  if (arc.word != kEpsilonWord) w += scales.word_penalty;
  return w;
}

BestPath lattice_best_path(const Lattice& lattice,
                           const LatticeScales& scales) {
  lattice.validate();
  const auto order = lattice.topological_order();
  const auto incoming = lattice.arcs_into();
  std::vector<double> best(lattice.nodes.size(), kNegInf);
  std::vector<int> back(lattice.nodes.size(), -1);
  best[lattice.start] = 0;
  for (int node : order) {
    for (int ai : incoming[node]) {
      const auto& a = lattice.arcs[ai];
      const double s = best[a.from] + arc_weight(a, scales);
      if (s > best[node]) {
        best[node] = s;
        back[node] = ai;
      }
    }
  }
  if (best[lattice.end] == kNegInf)
    throw SearchError("lattice end node unreachable");
  BestPath path;
  path.score = best[lattice.end];
  for (int node = lattice.end; back[node] != -1;
       node = lattice.arcs[back[node]].from)
    path.arc_indices.push_back(back[node]);
  std::reverse(path.arc_indices.begin(), path.arc_indices.end());
  for (int ai : path.arc_indices)
    if (lattice.arcs[ai].word != kEpsilonWord)
      path.words.push_back(lattice.arcs[ai].word);
  return path;
}

OracleResult oracle_path(const Lattice& lattice,
                         const std::vector<std::string>& reference) {
  lattice.validate();
  const auto order = lattice.topological_order();
  const auto incoming = lattice.arcs_into();
  const std::size_t r = reference.size();
  const int inf = std::numeric_limits<int>::max() / 2;

  // dist[node][j]: fewest edits over any partial path reaching `node`
  // having consumed j reference words
  std::vector<std::vector<int>> dist(lattice.nodes.size(),
                                     std::vector<int>(r + 1, inf));
  struct Back {
    int node = -1, j = -1, arc = -1;
  };
  std::vector<std::vector<Back>> back(lattice.nodes.size(),
                                      std::vector<Back>(r + 1));
  // deletions at the start
  for (std::size_t j = 0; j <= r; ++j) {
    dist[lattice.start][j] = static_cast<int>(j);
    if (j > 0) back[lattice.start][j] = {lattice.start, static_cast<int>(j) - 1,
                                         -1};
  }
  for (int node : order) {
    for (int ai : incoming[node]) {
      const auto& a = lattice.arcs[ai];
      const bool eps = a.word == kEpsilonWord;
      for (std::size_t j = 0; j <= r; ++j) {
        if (dist[a.from][j] == inf) continue;
        if (eps) {
          if (dist[a.from][j] < dist[node][j]) {
            dist[node][j] = dist[a.from][j];
            back[node][j] = {a.from, static_cast<int>(j), ai};
          }
          continue;
        }
        // insertion: hypothesis word without consuming reference
        if (dist[a.from][j] + 1 < dist[node][j]) {
          dist[node][j] = dist[a.from][j] + 1;
          back[node][j] = {a.from, static_cast<int>(j), ai};
        }
        // match or substitution
        if (j < r) {
          const int cost = a.word == reference[j] ? 0 : 1;
          if (dist[a.from][j] + cost < dist[node][j + 1]) {
            dist[node][j + 1] = dist[a.from][j] + cost;
            back[node][j + 1] = {a.from, static_cast<int>(j), ai};
          }
        }
      }
    }
    // deletions: consume reference words without moving
    for (std::size_t j = 1; j <= r; ++j)
      if (dist[node][j - 1] != inf && dist[node][j - 1] + 1 < dist[node][j]) {
        dist[node][j] = dist[node][j - 1] + 1;
        back[node][j] = {node, static_cast<int>(j) - 1, -1};
      }
  }
  if (dist[lattice.end][r] == inf)
    throw SearchError("lattice end node unreachable");

  OracleResult result;
  result.errors = dist[lattice.end][r];
  int node = lattice.end, j = static_cast<int>(r);
  std::vector<int> arcs;
  while (!(node == lattice.start && j == 0)) {
    const Back& b = back[node][j];
    if (b.arc >= 0) arcs.push_back(b.arc);
    node = b.node;
    j = b.j;
  }
  std::reverse(arcs.begin(), arcs.end());
  for (int ai : arcs)
    if (lattice.arcs[ai].word != kEpsilonWord)
      result.words.push_back(lattice.arcs[ai].word);
  return result;
}

ForwardBackward lattice_forward_backward(const Lattice& lattice,
                                         const LatticeScales& scales) {
  lattice.validate();
  const auto order = lattice.topological_order();
  const auto incoming = lattice.arcs_into();
  const auto outgoing = lattice.arcs_from();

  ForwardBackward fb;
  fb.alpha.assign(lattice.nodes.size(), kNegInf);
  fb.beta.assign(lattice.nodes.size(), kNegInf);
  fb.alpha[lattice.start] = 0;
  for (int node : order)
    for (int ai : incoming[node]) {
      const auto& a = lattice.arcs[ai];
      fb.alpha[node] =
          log_add(fb.alpha[node], fb.alpha[a.from] + arc_weight(a, scales));
    }
  fb.beta[lattice.end] = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    for (int ai : outgoing[*it]) {
      const auto& a = lattice.arcs[ai];
      fb.beta[*it] =
          log_add(fb.beta[*it], fb.beta[a.to] + arc_weight(a, scales));
    }
  fb.total = fb.alpha[lattice.end];
  if (fb.total == kNegInf) throw SearchError("lattice end node unreachable");
  fb.arc_posterior.resize(lattice.arcs.size());
  for (std::size_t i = 0; i < lattice.arcs.size(); ++i) {
    const auto& a = lattice.arcs[i];
    fb.arc_posterior[i] = std::exp(fb.alpha[a.from] + arc_weight(a, scales) +
                                   fb.beta[a.to] - fb.total);
  }
  return fb;
}

void save_lattices(const std::vector<Lattice>& lattices,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write lattice file: " + path);
  out.precision(17);
  for (const auto& lat : lattices) {
    out << "lattice " << lat.utterance_id << ' ' << lat.nodes.size() << ' '
        << lat.arcs.size() << ' ' << lat.start << ' ' << lat.end << '\n';
    for (const auto& n : lat.nodes) out << "node " << n.id << ' ' << n.frame
                                        << '\n';
    for (const auto& a : lat.arcs) {
      out << "arc " << a.from << ' ' << a.to << ' ' << a.word << ' ' << a.am
          << ' ' << a.lm;
      for (int s : a.states) out << ' ' << s;
      out << '\n';
    }
  }
}

std::vector<Lattice> load_lattices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lattice file: " + path);
  std::vector<Lattice> lattices;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream head(line);
    std::string tag;
    head >> tag;
    if (tag != "lattice")
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected lattice header");
    Lattice lat;
    std::size_t num_nodes = 0, num_arcs = 0;
    if (!(head >> lat.utterance_id >> num_nodes >> num_arcs >> lat.start >>
          lat.end))
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed lattice header");
    for (std::size_t i = 0; i < num_nodes; ++i) {
      if (!std::getline(in, line))
        throw DataError(path + ": truncated lattice " + lat.utterance_id);
      ++lineno;
      std::istringstream ss(line);
      LatticeNode n;
      if (!(ss >> tag >> n.id >> n.frame) || tag != "node")
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": expected node line");
      lat.nodes.push_back(n);
    }
    for (std::size_t i = 0; i < num_arcs; ++i) {
      if (!std::getline(in, line))
        throw DataError(path + ": truncated lattice " + lat.utterance_id);
      ++lineno;
      std::istringstream ss(line);
      LatticeArc a;
      if (!(ss >> tag >> a.from >> a.to >> a.word >> a.am >> a.lm) ||
          tag != "arc")
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": expected arc line");
      int s;
      while (ss >> s) a.states.push_back(s);
      lat.arcs.push_back(std::move(a));
    }
    lat.validate();
    lattices.push_back(std::move(lat));
  }
  return lattices;
}

}  // namespace asrkit
