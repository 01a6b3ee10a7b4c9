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

#ifndef ASRKIT_SEQTRAIN_HPP
#define ASRKIT_SEQTRAIN_HPP

#include <set>
#include <vector>

#include "asrkit/lattice.hpp"

namespace asrkit {

// Rebuilds arc acoustic scores from a frame/state score matrix using each
// arc's per-frame state sequence; arcs without states keep their score.
void set_arc_acoustic_scores(Lattice& lattice, const Matrix& loglik);

// Frame-state accuracy per arc against a reference state sequence. Frames
// whose reference state is in `exclude` contribute nothing (silence
// exclusion); pass nullptr to count all frames.
void annotate_accuracy(Lattice& lattice, const std::vector<int>& ref_states,
                       const std::set<int>* exclude = nullptr);

// sum over arcs of posterior * accuracy
double lattice_expected_accuracy(const Lattice& lattice,
                                 const LatticeScales& scales);

struct SmbrStats {
  double expected_accuracy = 0;
  // d(expected accuracy)/d loglik(t, k); includes the am_scale factor
  Matrix gradient;
};

// MPE-style double forward-backward over an accuracy-annotated lattice.
SmbrStats smbr_statistics(const Lattice& lattice, const LatticeScales& scales,
                          std::size_t num_frames, std::size_t num_states);

// Gradient of the smoothed sMBR criterion w.r.t. frame log-posteriors:
// (1-f) * (-dAcc) + f * dCE, with f the cross-entropy smoothing weight.
// Feed the result to backprop_logpost_gradient.
Matrix smbr_training_gradient(const SmbrStats& stats,
                              const std::vector<int>& ref_states,
                              double ce_smoothing = 0.1);

}  // namespace asrkit

#endif  // ASRKIT_SEQTRAIN_HPP
