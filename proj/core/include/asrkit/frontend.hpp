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

#ifndef ASRKIT_FRONTEND_HPP
#define ASRKIT_FRONTEND_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "asrkit/common.hpp"
#include "asrkit/wav.hpp"

namespace asrkit {

enum class FeatureKind {
  kStaticMfcc,
  kMfccDerivEnergy,
  kSpliced,
  kLda,
  kAdapted
};

std::string feature_kind_name(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& s);

struct FeatureMatrix {
  Matrix values;  // T x D
  double frame_shift = 0.010;
  FeatureKind kind = FeatureKind::kStaticMfcc;

  std::size_t frames() const { return values.rows(); }
  std::size_t dim() const { return values.cols(); }
};

struct FrontendConfig {
  double window_ms = 25.0;
  double shift_ms = 10.0;
  double preemphasis = 0.97;
  int num_mel_filters = 20;
  int num_cepstra = 16;
  double log_floor = 1e-10;
  double warp_alpha = 1.0;
  double warp_breakpoint = 0.8;  // fraction of Nyquist
  bool mean_normalize = false;

  int window_samples(int sample_rate) const;
  int shift_samples(int sample_rate) const;
};

// Static cepstra; T = floor((samples - window)/shift) + 1.
FeatureMatrix mfcc(const Waveform& waveform, const FrontendConfig& config);

// Per-frame log energy of the raw frame, same framing as mfcc().
std::vector<double> frame_log_energy(const Waveform& waveform,
                                     const FrontendConfig& config);

// 16 static + 16 delta + 16 delta-delta + log energy = 49 dims.
// Deltas by +/-2-frame linear regression with edge replication.
FeatureMatrix add_derivatives(const FeatureMatrix& features,
                              const std::vector<double>& energies);

// Concatenation of frames t-context..t+context with boundary replication.
FeatureMatrix splice(const FeatureMatrix& features, int context = 4);

struct LdaTransform {
  Matrix projection;  // out_dim x in_dim
  std::vector<double> eigenvalues;
  int input_dim = 0;
  int output_dim = 0;
};

// Rows are top generalized eigenvectors of (between, within) class scatter.
LdaTransform estimate_lda(const std::vector<FeatureMatrix>& features,
                          const std::vector<std::vector<int>>& labels,
                          int out_dim);

FeatureMatrix apply_lda(const LdaTransform& transform,
                        const FeatureMatrix& features);

struct WarpFactor {
  std::string speaker_id;
  double alpha = 1.0;
};

// Piecewise-linear warp: f' = alpha*f below breakpoint*Nyquist, then linear
// to map Nyquist to Nyquist. alpha = 1 is bit-identical to no warp.
FrontendConfig apply_warp(const FrontendConfig& config, double alpha);
double warp_frequency(double freq, double alpha, double nyquist,
                      double breakpoint_frac);

std::vector<double> warp_grid(double lo = 0.88, double hi = 1.12,
                              double step = 0.02);

using FrameScorer =
    std::function<double(int tied_state, std::span<const double> feature)>;

// Grid search over warp factors maximizing total aligned-frame log-likelihood.
// `features_for_alpha` recomputes a speaker utterance's features under alpha;
// `frame_states` gives the aligned tied state per frame. Ties break toward 1.
WarpFactor estimate_warp(
    const std::string& speaker_id,
    const std::vector<std::vector<int>>& frame_states,
    const std::function<FeatureMatrix(double alpha, std::size_t utt)>&
        features_for_alpha,
    const FrameScorer& scorer, const std::vector<double>& grid);

// Feature archive: little-endian binary, header + per-utterance blocks.
void write_feature_archive(
    const std::string& path,
    const std::vector<std::pair<std::string, FeatureMatrix>>& entries);
std::vector<std::pair<std::string, FeatureMatrix>> read_feature_archive(
    const std::string& path);
void dump_feature_archive_text(const std::string& path, std::ostream& out);

}  // namespace asrkit

#endif  // ASRKIT_FRONTEND_HPP
