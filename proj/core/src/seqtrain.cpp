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

#include "asrkit/seqtrain.hpp"

#include <cmath>

namespace asrkit {

void set_arc_acoustic_scores(Lattice& lattice, const Matrix& loglik) {
  std::vector<int> frame(lattice.nodes.size());
  for (const auto& n : lattice.nodes) frame[n.id] = n.frame;
  for (auto& arc : lattice.arcs) {
    if (arc.states.empty()) continue;
    const int t0 = frame[arc.from];
    if (frame[arc.to] - t0 != static_cast<int>(arc.states.size()))
      throw DataError("arc state sequence does not span its frames");
    double am = 0;
    for (std::size_t i = 0; i < arc.states.size(); ++i) {
      const int s = arc.states[i];
      if (t0 + static_cast<int>(i) >= static_cast<int>(loglik.rows()) ||
          s < 0 || s >= static_cast<int>(loglik.cols()))
        throw DataError("arc state outside the score matrix");
      am += loglik.at(t0 + i, s);
    }
    arc.am = am;
  }
}

void annotate_accuracy(Lattice& lattice, const std::vector<int>& ref_states,
                       const std::set<int>* exclude) {
  std::vector<int> frame(lattice.nodes.size());
  for (const auto& n : lattice.nodes) frame[n.id] = n.frame;
  for (auto& arc : lattice.arcs) {
    arc.accuracy = 0;
    const int t0 = frame[arc.from];
    for (std::size_t i = 0; i < arc.states.size(); ++i) {
      const int t = t0 + static_cast<int>(i);
      if (t >= static_cast<int>(ref_states.size()))
        throw DataError("arc frames extend past the reference alignment");
      if (exclude && exclude->count(ref_states[t])) continue;
      if (arc.states[i] == ref_states[t]) arc.accuracy += 1;
    }
  }
}

double lattice_expected_accuracy(const Lattice& lattice,
                                 const LatticeScales& scales) {
  const auto fb = lattice_forward_backward(lattice, scales);
  double acc = 0;
  for (std::size_t i = 0; i < lattice.arcs.size(); ++i)
    acc += fb.arc_posterior[i] * lattice.arcs[i].accuracy;
  return acc;
}

SmbrStats smbr_statistics(const Lattice& lattice, const LatticeScales& scales,
                          std::size_t num_frames, std::size_t num_states) {
  const auto fb = lattice_forward_backward(lattice, scales);
  const auto order = lattice.topological_order();
  const auto incoming = lattice.arcs_into();
  const auto outgoing = lattice.arcs_from();
  std::vector<int> frame(lattice.nodes.size());
  for (const auto& n : lattice.nodes) frame[n.id] = n.frame;

  // posterior-weighted mean accumulated accuracy before/after each node
  std::vector<double> alpha_acc(lattice.nodes.size(), 0.0);
  for (int node : order) {
    double mass = 0, acc = 0;
    for (int ai : incoming[node]) {
      const auto& a = lattice.arcs[ai];
      const double w =
          std::exp(fb.alpha[a.from] + arc_weight(a, scales) - fb.alpha[node]);
      mass += w;
      acc += w * (alpha_acc[a.from] + a.accuracy);
    }
    if (mass > 0) alpha_acc[node] = acc / mass;
  }
  std::vector<double> beta_acc(lattice.nodes.size(), 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    double mass = 0, acc = 0;
    for (int ai : outgoing[*it]) {
      const auto& a = lattice.arcs[ai];
      const double w =
          std::exp(arc_weight(a, scales) + fb.beta[a.to] - fb.beta[*it]);
      mass += w;
      acc += w * (a.accuracy + beta_acc[a.to]);
    }
    if (mass > 0) beta_acc[*it] = acc / mass;
  }

  SmbrStats stats;
  stats.expected_accuracy = alpha_acc[lattice.end];
  stats.gradient = Matrix(num_frames, num_states);
  for (std::size_t i = 0; i < lattice.arcs.size(); ++i) {
    const auto& a = lattice.arcs[i];
    if (a.states.empty()) continue;
    const double e_arc = alpha_acc[a.from] + a.accuracy + beta_acc[a.to];
    const double coeff = scales.am_scale * fb.arc_posterior[i] *
                         (e_arc - stats.expected_accuracy);
    const int t0 = frame[a.from];
    for (std::size_t j = 0; j < a.states.size(); ++j)
      stats.gradient.at(t0 + j, a.states[j]) += coeff;
  }
  return stats;
}

Matrix smbr_training_gradient(const SmbrStats& stats,
                              const std::vector<int>& ref_states,
                              double ce_smoothing) {
  if (ce_smoothing < 0 || ce_smoothing > 1)
    throw DataError("CE smoothing weight must be in [0, 1]");
  if (ref_states.size() != stats.gradient.rows())
    throw DataError("reference length does not match the gradient");
  Matrix g(stats.gradient.rows(), stats.gradient.cols());
  for (std::size_t t = 0; t < g.rows(); ++t) {
    for (std::size_t k = 0; k < g.cols(); ++k)
      g.at(t, k) = (1 - ce_smoothing) * -stats.gradient.at(t, k);
    const int r = ref_states[t];
    if (r < 0 || r >= static_cast<int>(g.cols()))
      throw DataError("reference state out of range");
    g.at(t, r) += ce_smoothing * -1.0;
  }
  return g;
}

}  // namespace asrkit
