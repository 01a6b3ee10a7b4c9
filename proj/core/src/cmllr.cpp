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

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "asrkit/gmm.hpp"

namespace asrkit {

namespace {

// Row-wise constrained MLLR for diagonal-covariance mixtures. Auxiliary:
//   Q(W) = beta * log|det A| + sum_i (w_i . k_i - 1/2 w_i G_i w_i)
// with W = [A b], extended observation xi = [x; 1].
struct CmllrStats {
  std::vector<Eigen::MatrixXd> g;  // per row: (D+1)x(D+1)
  std::vector<Eigen::VectorXd> k;  // per row: D+1
  double beta = 0;
  std::size_t dim = 0;
};

CmllrStats collect_stats(const std::vector<FeatureMatrix>& features,
                         const std::vector<Alignment>& alignments,
                         const AcousticModelSet& model) {
  const std::size_t d = model.dim();
  CmllrStats stats;
  stats.dim = d;
  stats.g.assign(d, Eigen::MatrixXd::Zero(d + 1, d + 1));
  stats.k.assign(d, Eigen::VectorXd::Zero(d + 1));

  std::vector<double> lls;
  Eigen::VectorXd xi(d + 1);
  for (std::size_t u = 0; u < features.size(); ++u) {
    if (alignments[u].size() != features[u].frames())
      throw DataError("estimate_cmllr: alignment/feature length mismatch");
    for (std::size_t t = 0; t < features[u].frames(); ++t) {
      auto row = features[u].values.row(t);
      for (std::size_t i = 0; i < d; ++i) xi(i) = row[i];
      xi(d) = 1.0;
      const auto& mix = model.mixtures.at(alignments[u][t].tied_state);
      // soft component posteriors under the unadapted model
      lls.resize(mix.components());
      for (std::size_t c = 0; c < mix.components(); ++c) {
        double ll = std::log(mix.weights[c]);
        for (std::size_t i = 0; i < d; ++i) {
          const double var = mix.variances.at(c, i);
          const double diff = row[i] - mix.means.at(c, i);
          ll -= 0.5 * (std::log(var) + diff * diff / var);
        }
        lls[c] = ll;
      }
      const double total = log_sum_exp(lls);
      Eigen::MatrixXd outer = xi * xi.transpose();
      for (std::size_t c = 0; c < mix.components(); ++c) {
        const double post = std::exp(lls[c] - total);
        for (std::size_t i = 0; i < d; ++i) {
          const double inv_var = 1.0 / mix.variances.at(c, i);
          stats.g[i] += post * inv_var * outer;
          stats.k[i] += post * mix.means.at(c, i) * inv_var * xi;
        }
      }
      stats.beta += 1;
    }
  }
  return stats;
}

double auxiliary(const CmllrStats& stats, const Eigen::MatrixXd& w) {
  const std::size_t d = stats.dim;
  const double det = w.leftCols(d).determinant();
  if (std::abs(det) < 1e-300) return -1e300;
  double q = stats.beta * std::log(std::abs(det));
  for (std::size_t i = 0; i < d; ++i) {
    Eigen::VectorXd wi = w.row(i).transpose();
    q += wi.dot(stats.k[i]) - 0.5 * wi.dot(stats.g[i] * wi);
  }
  return q;
}

}  // namespace

SpeakerTransform estimate_cmllr(const std::vector<FeatureMatrix>& features,
                                const std::vector<Alignment>& alignments,
                                const AcousticModelSet& model,
                                const std::string& speaker_id, int sweeps,
                                std::vector<double>* aux_trace) {
  if (features.size() != alignments.size())
    throw DataError("estimate_cmllr: features/alignments mismatch");
  const std::size_t d = model.dim();
  CmllrStats stats = collect_stats(features, alignments, model);
  if (stats.beta < static_cast<double>(d * (d + 1)))
    throw EstimationError(
        "estimate_cmllr: too few aligned frames for speaker " + speaker_id +
        " (need >= " + std::to_string(d * (d + 1)) + ")");

  // W = [A b], start at identity
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d + 1);
  for (std::size_t i = 0; i < d; ++i) w(i, i) = 1.0;

  std::vector<Eigen::MatrixXd> g_inv(d);
  for (std::size_t i = 0; i < d; ++i) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(stats.g[i]);
    if (!lu.isInvertible())
      throw EstimationError(
          "estimate_cmllr: rank-deficient statistics for speaker " +
          speaker_id);
    g_inv[i] = lu.inverse();
  }

  if (aux_trace) aux_trace->push_back(auxiliary(stats, w));

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < d; ++i) {
      Eigen::MatrixXd a = w.leftCols(d);
      const double det = a.determinant();
      // extended cofactor row: det * row i of inv(A)^T, last entry 0
      Eigen::VectorXd p = Eigen::VectorXd::Zero(d + 1);
      Eigen::MatrixXd a_inv_t = a.inverse().transpose();
      for (std::size_t j = 0; j < d; ++j) p(j) = det * a_inv_t(i, j);

      const double qa = p.dot(g_inv[i] * p);
      const double qb = p.dot(g_inv[i] * stats.k[i]);
      const double disc = qb * qb + 4.0 * qa * stats.beta;
      if (qa <= 0 || disc < 0)
        throw EstimationError("estimate_cmllr: degenerate row update");
      const double root = std::sqrt(disc);
      double best_q = kNegInf;
      Eigen::VectorXd best_row = w.row(i).transpose();
      for (double alpha : {(-qb + root) / (2 * qa), (-qb - root) / (2 * qa)}) {
        Eigen::VectorXd cand = g_inv[i] * (alpha * p + stats.k[i]);
        Eigen::MatrixXd trial = w;
        trial.row(i) = cand.transpose();
        const double q = auxiliary(stats, trial);
        if (q > best_q) {
          best_q = q;
          best_row = cand;
        }
      }
      if (best_q > auxiliary(stats, w)) w.row(i) = best_row.transpose();
    }
    if (aux_trace) aux_trace->push_back(auxiliary(stats, w));
  }

  SpeakerTransform transform;
  transform.speaker_id = speaker_id;
  transform.A = Matrix(d, d);
  transform.b.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) transform.A.at(i, j) = w(i, j);
    transform.b[i] = w(i, d);
  }
  const double det = w.leftCols(d).determinant();
  if (std::abs(det) <= 1e-12)
    throw EstimationError("estimate_cmllr: singular transform");
  return transform;
}

}  // namespace asrkit
