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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "asrkit/frontend.hpp"
#include "testutil.hpp"

using namespace asrkit;

namespace {

Waveform tone(double freq, double seconds, int sample_rate = 8000,
              double amplitude = 0.5) {
  Waveform w;
  w.sample_rate = sample_rate;
  const int n = static_cast<int>(seconds * sample_rate);
  for (int i = 0; i < n; ++i)
    w.samples.push_back(amplitude *
                        std::sin(2 * M_PI * freq * i / sample_rate));
  return w;
}

}  // namespace

TEST_CASE("framing: frame count and dimensionality") {
  FrontendConfig config;
  Waveform w = tone(500, 0.1);  // 800 samples at 8 kHz
  // window 200, shift 80: floor((800-200)/80)+1 = 8 frames
  CHECK(config.window_samples(8000) == 200);
  CHECK(config.shift_samples(8000) == 80);
  FeatureMatrix f = mfcc(w, config);
  CHECK(f.frames() == 8);
  CHECK(f.dim() == 16);
  CHECK(f.values.all_finite());
  CHECK(frame_log_energy(w, config).size() == 8);

  Waveform tiny;
  tiny.sample_rate = 8000;
  tiny.samples.assign(100, 0.0);  // shorter than one window
  CHECK_THROWS_AS(mfcc(tiny, config), DataError);
}

TEST_CASE("mfcc separates spectrally distinct tones") {
  FrontendConfig config;
  FeatureMatrix lo = mfcc(tone(500, 0.2), config);
  FeatureMatrix hi = mfcc(tone(1500, 0.2), config);
  double dist = 0;
  for (std::size_t d = 1; d < lo.dim(); ++d) {  // skip c0 (gain)
    double ml = 0, mh = 0;
    for (std::size_t t = 0; t < lo.frames(); ++t) ml += lo.values.at(t, d);
    for (std::size_t t = 0; t < hi.frames(); ++t) mh += hi.values.at(t, d);
    ml /= lo.frames();
    mh /= hi.frames();
    dist += (ml - mh) * (ml - mh);
  }
  CHECK(std::sqrt(dist) > 1.0);
}

TEST_CASE("mean normalization zeroes the cepstral means") {
  FrontendConfig config;
  config.mean_normalize = true;
  FeatureMatrix f = mfcc(tone(700, 0.2), config);
  for (std::size_t d = 0; d < f.dim(); ++d) {
    double m = 0;
    for (std::size_t t = 0; t < f.frames(); ++t) m += f.values.at(t, d);
    CHECK(m / f.frames() == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("derivatives: slope recovery and layout") {
  // cepstra increasing linearly in t: delta = slope in the interior,
  // delta-delta = 0 there
  const int T = 12, D = 16;
  FeatureMatrix f;
  f.values = Matrix(T, D);
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < D; ++d) f.values.at(t, d) = 0.5 * t + d;
  std::vector<double> energies(T);
  for (int t = 0; t < T; ++t) energies[t] = 0.1 * t;

  FeatureMatrix out = add_derivatives(f, energies);
  CHECK(out.dim() == 49);  // 16 static + 16 delta + 16 delta-delta + energy
  CHECK(out.frames() == static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < D; ++d)
      CHECK(out.values.at(t, d) == doctest::Approx(f.values.at(t, d)));
  for (int t = 2; t < T - 2; ++t)
    for (int d = 0; d < D; ++d)
      CHECK(out.values.at(t, D + d) == doctest::Approx(0.5));  // delta
  // delta-delta edge effects reach two frames further in
  for (int t = 4; t < T - 4; ++t)
    for (int d = 0; d < D; ++d)
      CHECK(std::abs(out.values.at(t, 2 * D + d)) <= 1e-12);
  for (int t = 0; t < T; ++t)
    CHECK(out.values.at(t, 3 * D) == doctest::Approx(energies[t]));
}

TEST_CASE("splicing replicates boundaries") {
  const int T = 5, D = 3, C = 2;
  FeatureMatrix f;
  f.values = Matrix(T, D);
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < D; ++d) f.values.at(t, d) = 10 * t + d;
  FeatureMatrix out = splice(f, C);
  CHECK(out.dim() == static_cast<std::size_t>((2 * C + 1) * D));
  CHECK(out.frames() == static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    for (int c = -C; c <= C; ++c) {
      const int src = std::clamp(t + c, 0, T - 1);
      for (int d = 0; d < D; ++d)
        CHECK(out.values.at(t, (c + C) * D + d) ==
              doctest::Approx(f.values.at(src, d)));
    }
}

TEST_CASE("default splice context is +/-4") {
  FeatureMatrix f;
  f.values = Matrix(3, 2);
  CHECK(splice(f).dim() == 9 * 2);
}

TEST_CASE("piecewise-linear frequency warp") {
  const double nyquist = 4000, bp = 0.8;
  // identity at alpha 1
  for (double f : {0.0, 1000.0, 3500.0, 4000.0})
    CHECK(warp_frequency(f, 1.0, nyquist, bp) == doctest::Approx(f));
  // below the breakpoint: pure scaling
  CHECK(warp_frequency(1000, 0.9, nyquist, bp) == doctest::Approx(900));
  CHECK(warp_frequency(1000, 1.1, nyquist, bp) == doctest::Approx(1100));
  // Nyquist maps to Nyquist
  CHECK(warp_frequency(nyquist, 0.9, nyquist, bp) == doctest::Approx(nyquist));
  CHECK(warp_frequency(nyquist, 1.1, nyquist, bp) == doctest::Approx(nyquist));
  // continuous at the breakpoint
  const double knee = bp * nyquist;
  CHECK(warp_frequency(knee + 1e-9, 0.92, nyquist, bp) ==
        doctest::Approx(warp_frequency(knee - 1e-9, 0.92, nyquist, bp))
            .epsilon(1e-6));
  // monotone on [0, nyquist]
  for (double alpha : {0.88, 1.12}) {
    double prev = -1;
    for (double f = 0; f <= nyquist; f += 50) {
      const double wf = warp_frequency(f, alpha, nyquist, bp);
      CHECK(wf > prev);
      prev = wf;
    }
  }
}

TEST_CASE("warp alpha 1 is bit-identical to no warp") {
  FrontendConfig config;
  Waveform w = tone(600, 0.15);
  FeatureMatrix plain = mfcc(w, config);
  FeatureMatrix warped = mfcc(w, apply_warp(config, 1.0));
  REQUIRE(plain.frames() == warped.frames());
  for (std::size_t t = 0; t < plain.frames(); ++t)
    for (std::size_t d = 0; d < plain.dim(); ++d)
      CHECK(plain.values.at(t, d) == warped.values.at(t, d));
}

TEST_CASE("default warp grid spans 0.88..1.12 in 0.02 steps") {
  std::vector<double> grid = warp_grid();
  REQUIRE(grid.size() == 13);
  CHECK(grid.front() == doctest::Approx(0.88));
  CHECK(grid.back() == doctest::Approx(1.12));
  CHECK(grid[6] == doctest::Approx(1.0));
}

TEST_CASE("warp estimation picks the likelihood peak, ties toward 1") {
  // scorer that rewards features whose mean is close to `target`
  auto features_for_alpha = [](double alpha, std::size_t) {
    FeatureMatrix f;
    f.values = Matrix(4, 1);
    for (int t = 0; t < 4; ++t) f.values.at(t, 0) = alpha;
    return f;
  };
  std::vector<std::vector<int>> states = {{0, 0, 0, 0}};
  auto scorer_peak = [](int, std::span<const double> x) {
    return -(x[0] - 0.94) * (x[0] - 0.94);
  };
  WarpFactor wf = estimate_warp("spk", states, features_for_alpha,
                                scorer_peak, warp_grid());
  CHECK(wf.alpha == doctest::Approx(0.94));
  CHECK(wf.speaker_id == "spk");

  // flat scorer: every alpha ties, 1.0 wins
  auto scorer_flat = [](int, std::span<const double>) { return 0.0; };
  WarpFactor flat = estimate_warp("spk", states, features_for_alpha,
                                  scorer_flat, warp_grid());
  CHECK(flat.alpha == doctest::Approx(1.0));
}

namespace {

// plain-loop scatter matrices mirroring the estimation conventions
void scatter_matrices(const std::vector<FeatureMatrix>& features,
                      const std::vector<std::vector<int>>& labels,
                      std::vector<std::vector<double>>& sw,
                      std::vector<std::vector<double>>& sb) {
  const std::size_t d = features[0].dim();
  std::map<int, std::pair<std::vector<double>, double>> cls;
  std::vector<double> gsum(d, 0.0);
  double total = 0;
  for (std::size_t u = 0; u < features.size(); ++u)
    for (std::size_t t = 0; t < features[u].frames(); ++t) {
      auto& [sum, n] = cls[labels[u][t]];
      sum.resize(d, 0.0);
      for (std::size_t i = 0; i < d; ++i) {
        sum[i] += features[u].values.at(t, i);
        gsum[i] += features[u].values.at(t, i);
      }
      n += 1;
      total += 1;
    }
  sw.assign(d, std::vector<double>(d, 0.0));
  sb.assign(d, std::vector<double>(d, 0.0));
  for (const auto& [c, sn] : cls)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        sb[i][j] += sn.second * (sn.first[i] / sn.second - gsum[i] / total) *
                    (sn.first[j] / sn.second - gsum[j] / total);
  for (std::size_t u = 0; u < features.size(); ++u)
    for (std::size_t t = 0; t < features[u].frames(); ++t) {
      const auto& sn = cls[labels[u][t]];
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          sw[i][j] += (features[u].values.at(t, i) - sn.first[i] / sn.second) *
                      (features[u].values.at(t, j) - sn.first[j] / sn.second);
    }
  double trace = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      sw[i][j] /= total;
      sb[i][j] /= total;
    }
    trace += sw[i][i];
  }
  for (std::size_t i = 0; i < d; ++i)
    sw[i][i] += 1e-6 * trace / static_cast<double>(d);
}

// Gaussian elimination solve (small fixtures only)
std::vector<double> solve(std::vector<std::vector<double>> a,
                          std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace

TEST_CASE("LDA satisfies the generalized eigen equation") {
  std::mt19937_64 rng(33);
  const int d = 6, classes = 4;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> center(-4.0, 4.0);
  std::vector<FeatureMatrix> features;
  std::vector<std::vector<int>> labels;
  for (int c = 0; c < classes; ++c) {
    std::vector<double> mu(d);
    for (auto& m : mu) m = center(rng);
    FeatureMatrix f;
    f.values = Matrix(60, d);
    for (int t = 0; t < 60; ++t)
      for (int i = 0; i < d; ++i) f.values.at(t, i) = mu[i] + noise(rng);
    features.push_back(f);
    labels.push_back(std::vector<int>(60, c));
  }

  LdaTransform lda = estimate_lda(features, labels, 3);
  CHECK(lda.input_dim == d);
  CHECK(lda.output_dim == 3);
  REQUIRE(lda.eigenvalues.size() == 3);
  CHECK(lda.eigenvalues[0] >= lda.eigenvalues[1]);
  CHECK(lda.eigenvalues[1] >= lda.eigenvalues[2]);

  std::vector<std::vector<double>> sw, sb;
  scatter_matrices(features, labels, sw, sb);
  for (int r = 0; r < 3; ++r) {
    // residual ||Sb v - lambda Sw v|| <= 1e-6 * ||Sb v||
    std::vector<double> sbv(d, 0.0), swv(d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        sbv[i] += sb[i][j] * lda.projection.at(r, j);
        swv[i] += sw[i][j] * lda.projection.at(r, j);
      }
    double res = 0, ref = 0;
    for (int i = 0; i < d; ++i) {
      res += (sbv[i] - lda.eigenvalues[r] * swv[i]) *
             (sbv[i] - lda.eigenvalues[r] * swv[i]);
      ref += sbv[i] * sbv[i];
    }
    CHECK(std::sqrt(res) <= 1e-6 * std::max(1.0, std::sqrt(ref)));
  }

  FeatureMatrix projected = apply_lda(lda, features[0]);
  CHECK(projected.dim() == 3);
  CHECK(projected.kind == FeatureKind::kLda);
}

TEST_CASE("two-class LDA recovers the closed-form Fisher direction") {
  std::mt19937_64 rng(44);
  const int d = 4;
  std::normal_distribution<double> noise(0.0, 0.8);
  std::vector<double> mu1 = {1.0, -2.0, 0.5, 3.0};
  std::vector<double> mu2 = {-1.5, 0.5, 2.0, -0.5};
  std::vector<FeatureMatrix> features(2);
  std::vector<std::vector<int>> labels(2);
  for (int c = 0; c < 2; ++c) {
    features[c].values = Matrix(200, d);
    const auto& mu = c == 0 ? mu1 : mu2;
    for (int t = 0; t < 200; ++t)
      for (int i = 0; i < d; ++i)
        features[c].values.at(t, i) = mu[i] + noise(rng);
    labels[c].assign(200, c);
  }

  LdaTransform lda = estimate_lda(features, labels, 1);

  // closed form: w = Sw^-1 (m1 - m2) from the empirical class means
  std::vector<std::vector<double>> sw, sb;
  scatter_matrices(features, labels, sw, sb);
  std::vector<double> m1(d, 0.0), m2(d, 0.0);
  for (int t = 0; t < 200; ++t)
    for (int i = 0; i < d; ++i) {
      m1[i] += features[0].values.at(t, i) / 200;
      m2[i] += features[1].values.at(t, i) / 200;
    }
  std::vector<double> diff(d);
  for (int i = 0; i < d; ++i) diff[i] = m1[i] - m2[i];
  std::vector<double> w = solve(sw, diff);

  double dot = 0, nw = 0, nv = 0;
  for (int i = 0; i < d; ++i) {
    dot += w[i] * lda.projection.at(0, i);
    nw += w[i] * w[i];
    nv += lda.projection.at(0, i) * lda.projection.at(0, i);
  }
  const double cosine = std::abs(dot) / std::sqrt(nw * nv);
  CHECK(std::acos(std::min(1.0, cosine)) <= 1e-3);
}

TEST_CASE("feature archive round trip") {
  testutil::TempDir dir;
  std::mt19937_64 rng(9);
  std::vector<std::pair<std::string, FeatureMatrix>> entries;
  entries.emplace_back("utt1", testutil::random_features(7, 5, rng));
  entries.emplace_back("utt2", testutil::random_features(3, 5, rng));
  // one kind per archive; the header stores it once
  for (auto& e : entries) e.second.kind = FeatureKind::kSpliced;

  const std::string path = dir.file("feats.farc");
  write_feature_archive(path, entries);
  auto back = read_feature_archive(path);
  REQUIRE(back.size() == 2);
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK(back[e].first == entries[e].first);
    CHECK(back[e].second.kind == entries[e].second.kind);
    REQUIRE(back[e].second.frames() == entries[e].second.frames());
    for (std::size_t t = 0; t < back[e].second.frames(); ++t)
      for (std::size_t i = 0; i < back[e].second.dim(); ++i)
        CHECK(back[e].second.values.at(t, i) ==
              entries[e].second.values.at(t, i));
  }
  CHECK_THROWS_AS(read_feature_archive(dir.file("missing.farc")), DataError);
}
