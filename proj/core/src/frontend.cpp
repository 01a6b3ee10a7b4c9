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

#include "asrkit/frontend.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>

namespace asrkit {

namespace {

constexpr double kPi = std::numbers::pi;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 FFT.
void fft(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        auto u = x[i + k];
        auto v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Triangular mel filterbank weights over FFT power-spectrum bins, with the
// filter edge frequencies passed through the VTLN warp.
std::vector<std::vector<double>> build_filterbank(const FrontendConfig& cfg,
                                                  int sample_rate,
                                                  std::size_t nfft) {
  const double nyquist = sample_rate / 2.0;
  const int m = cfg.num_mel_filters;
  std::vector<double> edges(m + 2);
  const double mel_max = hz_to_mel(nyquist);
  for (int i = 0; i < m + 2; ++i) {
    double hz = mel_to_hz(mel_max * i / (m + 1));
    edges[i] = warp_frequency(hz, cfg.warp_alpha, nyquist, cfg.warp_breakpoint);
  }
  const std::size_t nbins = nfft / 2 + 1;
  std::vector<std::vector<double>> filters(m, std::vector<double>(nbins, 0.0));
  for (int f = 0; f < m; ++f) {
    double lo = edges[f], mid = edges[f + 1], hi = edges[f + 2];
    for (std::size_t k = 0; k < nbins; ++k) {
      double freq = static_cast<double>(k) * sample_rate /
                    static_cast<double>(nfft);
      if (freq > lo && freq < mid)
        filters[f][k] = (freq - lo) / (mid - lo);
      else if (freq >= mid && freq < hi)
        filters[f][k] = (hi - freq) / (hi - mid);
    }
  }
  return filters;
}

}  // namespace

std::string feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kStaticMfcc: return "static-mfcc";
    case FeatureKind::kMfccDerivEnergy: return "mfcc+deriv+energy";
    case FeatureKind::kSpliced: return "spliced";
    case FeatureKind::kLda: return "lda";
    case FeatureKind::kAdapted: return "adapted";
  }
  return "?";
}

FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "static-mfcc") return FeatureKind::kStaticMfcc;
  if (s == "mfcc+deriv+energy") return FeatureKind::kMfccDerivEnergy;
  if (s == "spliced") return FeatureKind::kSpliced;
  if (s == "lda") return FeatureKind::kLda;
  if (s == "adapted") return FeatureKind::kAdapted;
  throw DataError("unknown feature kind: " + s);
}

int FrontendConfig::window_samples(int sample_rate) const {
  return static_cast<int>(std::lround(sample_rate * window_ms / 1000.0));
}

int FrontendConfig::shift_samples(int sample_rate) const {
  return static_cast<int>(std::lround(sample_rate * shift_ms / 1000.0));
}

double warp_frequency(double freq, double alpha, double nyquist,
                      double breakpoint_frac) {
  const double fb = breakpoint_frac * nyquist;
  if (freq <= fb) return alpha * freq;
  // linear continuation through (fb, alpha*fb) and (nyquist, nyquist)
  const double slope = (nyquist - alpha * fb) / (nyquist - fb);
  return alpha * fb + slope * (freq - fb);
}

FrontendConfig apply_warp(const FrontendConfig& config, double alpha) {
  if (alpha <= 0) throw DataError("warp factor must be positive");
  FrontendConfig warped = config;
  warped.warp_alpha = alpha;
  return warped;
}

std::vector<double> warp_grid(double lo, double hi, double step) {
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    double a = lo + i * step;
    if (a > hi + 1e-9) break;
    grid.push_back(a);
  }
  return grid;
}

FeatureMatrix mfcc(const Waveform& waveform, const FrontendConfig& config) {
  const int window = config.window_samples(waveform.sample_rate);
  const int shift = config.shift_samples(waveform.sample_rate);
  const std::size_t n = waveform.samples.size();
  if (n < static_cast<std::size_t>(window))
    throw DataError("waveform shorter than one analysis window");
  const std::size_t num_frames = (n - window) / shift + 1;

  // pre-emphasis over the whole signal, y[0] = x[0]
  std::vector<double> emph(n);
  emph[0] = waveform.samples[0];
  for (std::size_t i = 1; i < n; ++i)
    emph[i] = waveform.samples[i] - config.preemphasis * waveform.samples[i - 1];

  std::vector<double> hamming(window);
  for (int i = 0; i < window; ++i)
    hamming[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (window - 1));

  const std::size_t nfft = next_pow2(window);
  const auto filters = build_filterbank(config, waveform.sample_rate, nfft);
  const int m = config.num_mel_filters;
  const int c = config.num_cepstra;

  FeatureMatrix out;
  out.kind = FeatureKind::kStaticMfcc;
  out.frame_shift = config.shift_ms / 1000.0;
  out.values = Matrix(num_frames, c);

  std::vector<std::complex<double>> spec(nfft);
  std::vector<double> fbank(m);
  for (std::size_t t = 0; t < num_frames; ++t) {
    const std::size_t off = t * shift;
    for (std::size_t k = 0; k < nfft; ++k)
      spec[k] = k < static_cast<std::size_t>(window)
                    ? emph[off + k] * hamming[k]
                    : 0.0;
    fft(spec);
    for (int f = 0; f < m; ++f) {
      double e = 0;
      const auto& w = filters[f];
      for (std::size_t k = 0; k < w.size(); ++k)
        if (w[k] != 0.0) e += w[k] * std::norm(spec[k]);
      fbank[f] = std::log(std::max(e, config.log_floor));
    }
    // orthonormal DCT-II
    for (int i = 0; i < c; ++i) {
      double s = 0;
      for (int f = 0; f < m; ++f)
        s += fbank[f] * std::cos(kPi * i * (f + 0.5) / m);
      s *= std::sqrt(2.0 / m);
      if (i == 0) s /= std::sqrt(2.0);
      out.values.at(t, i) = s;
    }
  }

  if (config.mean_normalize && num_frames > 0) {
    for (int i = 0; i < c; ++i) {
      double mean = 0;
      for (std::size_t t = 0; t < num_frames; ++t) mean += out.values.at(t, i);
      mean /= static_cast<double>(num_frames);
      for (std::size_t t = 0; t < num_frames; ++t) out.values.at(t, i) -= mean;
    }
  }
  return out;
}

std::vector<double> frame_log_energy(const Waveform& waveform,
                                     const FrontendConfig& config) {
  const int window = config.window_samples(waveform.sample_rate);
  const int shift = config.shift_samples(waveform.sample_rate);
  const std::size_t n = waveform.samples.size();
  if (n < static_cast<std::size_t>(window))
    throw DataError("waveform shorter than one analysis window");
  const std::size_t num_frames = (n - window) / shift + 1;
  std::vector<double> energy(num_frames);
  for (std::size_t t = 0; t < num_frames; ++t) {
    double e = 0;
    for (int i = 0; i < window; ++i) {
      double s = waveform.samples[t * shift + i];
      e += s * s;
    }
    energy[t] = std::log(std::max(e, config.log_floor));
  }
  return energy;
}

FeatureMatrix add_derivatives(const FeatureMatrix& features,
                              const std::vector<double>& energies) {
  if (features.kind != FeatureKind::kStaticMfcc)
    throw DataError("add_derivatives expects static MFCC input");
  if (energies.size() != features.frames())
    throw DataError("energy vector length does not match frame count");
  const std::size_t num_frames = features.frames();
  const std::size_t d = features.dim();

  auto clamp_frame = [&](long t) {
    return static_cast<std::size_t>(
        std::clamp<long>(t, 0, static_cast<long>(num_frames) - 1));
  };
  // regression over +/-2 frames: sum_k k*(c(t+k)-c(t-k)) / (2*sum_k k^2)
  auto delta = [&](const Matrix& src, std::size_t t, std::size_t i) {
    double num = 0;
    for (int k = 1; k <= 2; ++k)
      num += k * (src.at(clamp_frame(static_cast<long>(t) + k), i) -
                  src.at(clamp_frame(static_cast<long>(t) - k), i));
    return num / 10.0;
  };

  Matrix d1(num_frames, d), d2(num_frames, d);
  for (std::size_t t = 0; t < num_frames; ++t)
    for (std::size_t i = 0; i < d; ++i) d1.at(t, i) = delta(features.values, t, i);
  for (std::size_t t = 0; t < num_frames; ++t)
    for (std::size_t i = 0; i < d; ++i) d2.at(t, i) = delta(d1, t, i);

  FeatureMatrix out;
  out.kind = FeatureKind::kMfccDerivEnergy;
  out.frame_shift = features.frame_shift;
  out.values = Matrix(num_frames, 3 * d + 1);
  for (std::size_t t = 0; t < num_frames; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      out.values.at(t, i) = features.values.at(t, i);
      out.values.at(t, d + i) = d1.at(t, i);
      out.values.at(t, 2 * d + i) = d2.at(t, i);
    }
    out.values.at(t, 3 * d) = energies[t];
  }
  return out;
}

FeatureMatrix splice(const FeatureMatrix& features, int context) {
  if (features.kind != FeatureKind::kStaticMfcc)
    throw DataError("splice expects static MFCC input");
  const std::size_t num_frames = features.frames();
  const std::size_t d = features.dim();
  const std::size_t width = 2 * context + 1;
  FeatureMatrix out;
  out.kind = FeatureKind::kSpliced;
  out.frame_shift = features.frame_shift;
  out.values = Matrix(num_frames, width * d);
  for (std::size_t t = 0; t < num_frames; ++t)
    for (int c = -context; c <= context; ++c) {
      std::size_t src = static_cast<std::size_t>(
          std::clamp<long>(static_cast<long>(t) + c, 0,
                           static_cast<long>(num_frames) - 1));
      for (std::size_t i = 0; i < d; ++i)
        out.values.at(t, (c + context) * d + i) = features.values.at(src, i);
    }
  return out;
}

LdaTransform estimate_lda(const std::vector<FeatureMatrix>& features,
                          const std::vector<std::vector<int>>& labels,
                          int out_dim) {
  if (features.empty() || features.size() != labels.size())
    throw DataError("estimate_lda: features/labels mismatch");
  const std::size_t d = features[0].dim();

  std::map<int, std::pair<Eigen::VectorXd, double>> class_sums;
  Eigen::VectorXd global_sum = Eigen::VectorXd::Zero(d);
  double total = 0;
  for (std::size_t u = 0; u < features.size(); ++u) {
    if (labels[u].size() != features[u].frames())
      throw DataError("estimate_lda: label length mismatch in utterance " +
                      std::to_string(u));
    for (std::size_t t = 0; t < features[u].frames(); ++t) {
      auto row = features[u].values.row(t);
      Eigen::Map<const Eigen::VectorXd> x(row.data(), d);
      auto& [sum, n] = class_sums.try_emplace(labels[u][t],
                                              Eigen::VectorXd::Zero(d), 0.0)
                           .first->second;
      sum += x;
      n += 1;
      global_sum += x;
      total += 1;
    }
  }
  if (class_sums.size() < 2)
    throw EstimationError("estimate_lda requires at least 2 classes");

  Eigen::VectorXd global_mean = global_sum / total;
  Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(d, d);
  for (const auto& [cls, sn] : class_sums) {
    Eigen::VectorXd mean = sn.first / sn.second;
    Eigen::VectorXd diff = mean - global_mean;
    sb += sn.second * diff * diff.transpose();
  }
  for (std::size_t u = 0; u < features.size(); ++u)
    for (std::size_t t = 0; t < features[u].frames(); ++t) {
      auto row = features[u].values.row(t);
      Eigen::Map<const Eigen::VectorXd> x(row.data(), d);
      const auto& sn = class_sums.at(labels[u][t]);
      Eigen::VectorXd diff = x - sn.first / sn.second;
      sw += diff * diff.transpose();
    }
  sw /= total;
  sb /= total;

  sw += (1e-6 * sw.trace() / static_cast<double>(d)) *
        Eigen::MatrixXd::Identity(d, d);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(sb, sw);
  if (solver.info() != Eigen::Success)
    throw EstimationError("estimate_lda: generalized eigen solve failed "
                          "(singular within-class scatter)");

  if (out_dim <= 0 || static_cast<std::size_t>(out_dim) > d)
    throw DataError("estimate_lda: bad output dimension");

  LdaTransform lda;
  lda.input_dim = static_cast<int>(d);
  lda.output_dim = out_dim;
  lda.projection = Matrix(out_dim, d);
  lda.eigenvalues.resize(out_dim);
  // Eigen returns ascending eigenvalues; take the top out_dim, descending.
  for (int i = 0; i < out_dim; ++i) {
    const std::size_t src = d - 1 - i;
    lda.eigenvalues[i] = solver.eigenvalues()(src);
    for (std::size_t j = 0; j < d; ++j)
      lda.projection.at(i, j) = solver.eigenvectors()(j, src);
  }
  return lda;
}

FeatureMatrix apply_lda(const LdaTransform& transform,
                        const FeatureMatrix& features) {
  if (features.dim() != static_cast<std::size_t>(transform.input_dim))
    throw DataError("apply_lda: feature dimension mismatch");
  FeatureMatrix out;
  out.kind = FeatureKind::kLda;
  out.frame_shift = features.frame_shift;
  out.values = Matrix(features.frames(), transform.output_dim);
  for (std::size_t t = 0; t < features.frames(); ++t)
    for (int i = 0; i < transform.output_dim; ++i) {
      double s = 0;
      for (int j = 0; j < transform.input_dim; ++j)
        s += transform.projection.at(i, j) * features.values.at(t, j);
      out.values.at(t, i) = s;
    }
  return out;
}

WarpFactor estimate_warp(
    const std::string& speaker_id,
    const std::vector<std::vector<int>>& frame_states,
    const std::function<FeatureMatrix(double alpha, std::size_t utt)>&
        features_for_alpha,
    const FrameScorer& scorer, const std::vector<double>& grid) {
  if (frame_states.empty())
    throw DataError("estimate_warp: no data for speaker " + speaker_id);
  if (grid.empty()) throw DataError("estimate_warp: empty warp grid");
  double best_alpha = 0.0;
  double best_ll = 0.0;
  bool first = true;
  for (double alpha : grid) {
    double ll = 0;
    for (std::size_t u = 0; u < frame_states.size(); ++u) {
      FeatureMatrix feats = features_for_alpha(alpha, u);
      if (feats.frames() != frame_states[u].size())
        throw DataError("estimate_warp: alignment/feature frame mismatch");
      for (std::size_t t = 0; t < feats.frames(); ++t)
        ll += scorer(frame_states[u][t], feats.values.row(t));
    }
    const bool better =
        first || ll > best_ll ||
        (ll == best_ll && std::abs(alpha - 1.0) < std::abs(best_alpha - 1.0));
    if (better) {
      best_ll = ll;
      best_alpha = alpha;
      first = false;
    }
  }
  return {speaker_id, best_alpha};
}

namespace {

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_feature_archive(
    const std::string& path,
    const std::vector<std::pair<std::string, FeatureMatrix>>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature archive: " + path);
  out.write("FARC", 4);
  write_raw<std::uint32_t>(out, 1);  // version
  std::uint32_t dim = entries.empty()
                          ? 0
                          : static_cast<std::uint32_t>(entries[0].second.dim());
  write_raw(out, dim);
  double shift = entries.empty() ? 0.0 : entries[0].second.frame_shift;
  write_raw(out, shift);
  std::uint8_t kind = entries.empty()
                          ? 0
                          : static_cast<std::uint8_t>(entries[0].second.kind);
  write_raw(out, kind);
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [id, fm] : entries) {
    if (fm.dim() != dim)
      throw DataError("feature archive entries must share one dimension");
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(fm.frames()));
    out.write(reinterpret_cast<const char*>(fm.values.data().data()),
              static_cast<std::streamsize>(fm.values.data().size() *
                                           sizeof(double)));
  }
}

std::vector<std::pair<std::string, FeatureMatrix>> read_feature_archive(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature archive: " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::strncmp(magic, "FARC", 4) != 0)
    throw DataError(path + ": not a feature archive");
  auto version = read_raw<std::uint32_t>(in);
  if (version != 1)
    throw DataError(path + ": unsupported archive version " +
                    std::to_string(version));
  auto dim = read_raw<std::uint32_t>(in);
  auto shift = read_raw<double>(in);
  auto kind = read_raw<std::uint8_t>(in);
  auto count = read_raw<std::uint32_t>(in);
  std::vector<std::pair<std::string, FeatureMatrix>> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto id_len = read_raw<std::uint32_t>(in);
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    auto frames = read_raw<std::uint32_t>(in);
    FeatureMatrix fm;
    fm.frame_shift = shift;
    fm.kind = static_cast<FeatureKind>(kind);
    fm.values = Matrix(frames, dim);
    in.read(reinterpret_cast<char*>(fm.values.data().data()),
            static_cast<std::streamsize>(fm.values.data().size() *
                                         sizeof(double)));
    if (!in) throw DataError(path + ": truncated feature archive");
    entries.emplace_back(std::move(id), std::move(fm));
  }
  return entries;
}

void dump_feature_archive_text(const std::string& path, std::ostream& out) {
  auto entries = read_feature_archive(path);
  for (const auto& [id, fm] : entries) {
    out << id << " frames=" << fm.frames() << " dim=" << fm.dim()
        << " kind=" << feature_kind_name(fm.kind) << '\n';
    for (std::size_t t = 0; t < fm.frames(); ++t) {
      for (std::size_t i = 0; i < fm.dim(); ++i) {
        if (i) out << ' ';
        out << fm.values.at(t, i);
      }
      out << '\n';
    }
  }
}

}  // namespace asrkit
