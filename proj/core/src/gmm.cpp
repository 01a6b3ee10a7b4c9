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

#include "asrkit/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace asrkit {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

MonophoneInventory MonophoneInventory::from_lexicon(
    const Lexicon& lexicon, const HmmTopology& topology) {
  MonophoneInventory inv;
  inv.silence_symbol = lexicon.silence_symbol;
  inv.states_per_phone = topology.states_per_phone;
  inv.silence_states = topology.silence_states;
  for (const auto& ph : lexicon.phoneme_inventory)
    if (ph != lexicon.silence_symbol) inv.phones.push_back(ph);
  std::sort(inv.phones.begin(), inv.phones.end());
  return inv;
}

int MonophoneInventory::num_states() const {
  return static_cast<int>(phones.size()) * states_per_phone + silence_states;
}

int MonophoneInventory::state_id(const std::string& phone, int position) const {
  if (phone == silence_symbol)
    return static_cast<int>(phones.size()) * states_per_phone + position;
  auto it = std::lower_bound(phones.begin(), phones.end(), phone);
  if (it == phones.end() || *it != phone)
    throw DataError("phone not in inventory: " + phone);
  return static_cast<int>(it - phones.begin()) * states_per_phone + position;
}

StateMapper MonophoneInventory::mapper() const {
  MonophoneInventory inv = *this;
  return [inv](const std::string&, const std::string& center,
               const std::string&, int pos) {
    return inv.state_id(center, pos);
  };
}

HmmChain compose_chain(const std::vector<std::string>& words,
                       const Lexicon& lexicon, const StateMapper& mapper,
                       const HmmTopology& topology, bool boundary_silence) {
  HmmChain chain;
  auto add_silence = [&] {
    for (int p = 0; p < topology.silence_states; ++p) {
      ChainState cs;
      cs.phone = lexicon.silence_symbol;
      cs.hmm_position = p;
      cs.left_context = kBoundarySymbol;
      cs.right_context = kBoundarySymbol;
      cs.is_silence = true;
      cs.tied_state = mapper(kBoundarySymbol, lexicon.silence_symbol,
                             kBoundarySymbol, p);
      chain.push_back(cs);
    }
  };
  if (boundary_silence) add_silence();
  for (const auto& word : words) {
    const auto& prons = lexicon.pronunciations(word);
    const auto& phones = prons.front();  // first pronunciation for alignment
    for (std::size_t i = 0; i < phones.size(); ++i) {
      const std::string& left = i == 0 ? kBoundarySymbol : phones[i - 1];
      const std::string& right =
          i + 1 == phones.size() ? kBoundarySymbol : phones[i + 1];
      for (int p = 0; p < topology.states_per_phone; ++p) {
        ChainState cs;
        cs.phone = phones[i];
        cs.hmm_position = p;
        cs.left_context = left;
        cs.right_context = right;
        cs.is_silence = false;
        cs.tied_state = mapper(left, phones[i], right, p);
        chain.push_back(cs);
      }
    }
  }
  if (boundary_silence) add_silence();
  return chain;
}

void reconstruct_chain_indices(Alignment& alignment, const HmmChain& chain) {
  std::size_t idx = 0;
  for (auto& frame : alignment) {
    auto matches = [&](std::size_t j) {
      return j < chain.size() && chain[j].phone == frame.phone &&
             chain[j].hmm_position == frame.hmm_position;
    };
    if (!matches(idx)) {
      while (idx + 1 < chain.size() && !matches(idx)) ++idx;
      if (!matches(idx))
        throw DataError("alignment does not follow the utterance chain");
    }
    frame.chain_index = static_cast<int>(idx);
  }
}

double loop_logprob(const HmmTopology& topology, bool is_silence) {
  return std::log(is_silence ? topology.silence_loop : topology.speech_loop);
}

double forward_logprob(const HmmTopology& topology, bool is_silence) {
  return std::log(is_silence ? topology.silence_forward
                             : topology.speech_forward);
}

namespace {

// per-component log N(x; mu_m, diag var_m) + log w_m
void component_logliks(const GaussianMixture& mix,
                       std::span<const double> x, std::vector<double>& out) {
  const std::size_t m = mix.components();
  const std::size_t d = mix.dim();
  out.resize(m);
  for (std::size_t c = 0; c < m; ++c) {
    double ll = std::log(mix.weights[c]);
    for (std::size_t i = 0; i < d; ++i) {
      const double var = mix.variances.at(c, i);
      const double diff = x[i] - mix.means.at(c, i);
      ll -= 0.5 * (kLog2Pi + std::log(var) + diff * diff / var);
    }
    out[c] = ll;
  }
}

}  // namespace

double score_frame(const AcousticModelSet& model, int tied_state,
                   std::span<const double> feature) {
  if (tied_state < 0 ||
      static_cast<std::size_t>(tied_state) >= model.mixtures.size())
    throw DataError("score_frame: tied state out of range");
  const auto& mix = model.mixtures[tied_state];
  if (feature.size() != mix.dim())
    throw DataError("score_frame: feature dimension mismatch");
  std::vector<double> lls;
  component_logliks(mix, feature, lls);
  return log_sum_exp(lls);
}

Alignment linear_align(std::size_t num_frames, const HmmChain& chain) {
  const std::size_t s = chain.size();
  if (num_frames < s)
    throw SearchError("utterance too short: " + std::to_string(num_frames) +
                      " frames for " + std::to_string(s) + " states");
  Alignment alignment;
  alignment.reserve(num_frames);
  const std::size_t base = num_frames / s;
  const std::size_t rem = num_frames % s;
  for (std::size_t j = 0; j < s; ++j) {
    const std::size_t len = base + (j < rem ? 1 : 0);
    for (std::size_t k = 0; k < len; ++k)
      alignment.push_back({chain[j].tied_state, chain[j].hmm_position,
                           chain[j].phone, static_cast<int>(j)});
  }
  return alignment;
}

AlignResult viterbi_align(const FeatureMatrix& features,
                          const AcousticModelSet& model,
                          const HmmChain& chain) {
  const std::size_t num_frames = features.frames();
  const std::size_t s = chain.size();
  if (num_frames < s)
    throw SearchError("utterance too short: no feasible alignment path");

  std::vector<double> emis(s);
  Matrix score(num_frames, s, kNegInf);
  std::vector<std::vector<std::uint8_t>> from_prev(
      num_frames, std::vector<std::uint8_t>(s, 0));

  for (std::size_t t = 0; t < num_frames; ++t) {
    auto x = features.values.row(t);
    for (std::size_t j = 0; j < s; ++j)
      emis[j] = score_frame(model, chain[j].tied_state, x);
    if (t == 0) {
      score.at(0, 0) = emis[0];
      continue;
    }
    for (std::size_t j = 0; j < s; ++j) {
      double loop = score.at(t - 1, j) == kNegInf
                        ? kNegInf
                        : score.at(t - 1, j) +
                              loop_logprob(model.topology, chain[j].is_silence);
      double fwd = kNegInf;
      if (j > 0 && score.at(t - 1, j - 1) != kNegInf)
        fwd = score.at(t - 1, j - 1) +
              forward_logprob(model.topology, chain[j - 1].is_silence);
      if (fwd > loop) {
        score.at(t, j) = fwd + emis[j];
        from_prev[t][j] = 1;
      } else {
        score.at(t, j) = loop == kNegInf ? kNegInf : loop + emis[j];
      }
    }
  }

  if (score.at(num_frames - 1, s - 1) == kNegInf)
    throw SearchError("no feasible alignment path");

  Alignment alignment(num_frames);
  std::size_t j = s - 1;
  for (std::size_t t = num_frames; t-- > 0;) {
    alignment[t] = {chain[j].tied_state, chain[j].hmm_position,
                    chain[j].phone, static_cast<int>(j)};
    if (t > 0 && from_prev[t][j]) --j;
  }
  return {std::move(alignment), score.at(num_frames - 1, s - 1)};
}

GmmAccumulator::GmmAccumulator(std::size_t num_states,
                               std::size_t num_components_max,
                               std::size_t dim)
    : dim_(dim),
      counts_(num_states, std::vector<double>(num_components_max, 0.0)),
      sums_(num_states, Matrix(num_components_max, dim)),
      sumsqs_(num_states, Matrix(num_components_max, dim)),
      global_sum_(dim, 0.0),
      global_sumsq_(dim, 0.0) {}

void GmmAccumulator::accumulate(const AcousticModelSet& model,
                                const Alignment& alignment,
                                const FeatureMatrix& features) {
  if (alignment.size() != features.frames())
    throw DataError("accumulate: alignment/feature length mismatch");
  std::vector<double> lls;
  for (std::size_t t = 0; t < alignment.size(); ++t) {
    const int s = alignment[t].tied_state;
    const auto& mix = model.mixtures.at(s);
    auto x = features.values.row(t);
    component_logliks(mix, x, lls);
    const double total = log_sum_exp(lls);
    for (std::size_t c = 0; c < mix.components(); ++c) {
      const double post = std::exp(lls[c] - total);
      counts_[s][c] += post;
      for (std::size_t i = 0; i < dim_; ++i) {
        sums_[s].at(c, i) += post * x[i];
        sumsqs_[s].at(c, i) += post * x[i] * x[i];
      }
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      global_sum_[i] += x[i];
      global_sumsq_[i] += x[i] * x[i];
    }
    global_count_ += 1;
  }
}

void GmmAccumulator::merge(const GmmAccumulator& other) {
  for (std::size_t s = 0; s < counts_.size(); ++s) {
    for (std::size_t c = 0; c < counts_[s].size(); ++c)
      counts_[s][c] += other.counts_[s][c];
    for (std::size_t i = 0; i < sums_[s].data().size(); ++i) {
      sums_[s].data()[i] += other.sums_[s].data()[i];
      sumsqs_[s].data()[i] += other.sumsqs_[s].data()[i];
    }
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    global_sum_[i] += other.global_sum_[i];
    global_sumsq_[i] += other.global_sumsq_[i];
  }
  global_count_ += other.global_count_;
}

AcousticModelSet GmmAccumulator::update(const AcousticModelSet& model,
                                        double floor_fraction) const {
  AcousticModelSet out = model;
  std::vector<double> floor(dim_, 1e-8);
  if (global_count_ > 0)
    for (std::size_t i = 0; i < dim_; ++i) {
      const double mean = global_sum_[i] / global_count_;
      const double var = global_sumsq_[i] / global_count_ - mean * mean;
      floor[i] = std::max(floor_fraction * var, 1e-10);
    }

  for (std::size_t s = 0; s < out.mixtures.size(); ++s) {
    auto& mix = out.mixtures[s];
    double state_count = 0;
    for (std::size_t c = 0; c < mix.components(); ++c)
      state_count += counts_[s][c];
    if (state_count <= 0) continue;  // zero-frame state keeps old parameters
    for (std::size_t c = 0; c < mix.components(); ++c) {
      const double n = counts_[s][c];
      if (n <= 1e-10) continue;  // component with no mass keeps old values
      mix.weights[c] = n / state_count;
      for (std::size_t i = 0; i < dim_; ++i) {
        const double mean = sums_[s].at(c, i) / n;
        double var = sumsqs_[s].at(c, i) / n - mean * mean;
        mix.means.at(c, i) = mean;
        mix.variances.at(c, i) = std::max(var, floor[i]);
      }
    }
    // renormalize in case some components kept old weights
    double wsum = 0;
    for (double w : mix.weights) wsum += w;
    for (double& w : mix.weights) w /= wsum;
  }
  return out;
}

AcousticModelSet accumulate_and_update(
    const AcousticModelSet& model, const std::vector<Alignment>& alignments,
    const std::vector<FeatureMatrix>& features, double floor_fraction) {
  if (alignments.size() != features.size())
    throw DataError("accumulate_and_update: alignment/feature set mismatch");
  std::size_t max_components = 1;
  for (const auto& mix : model.mixtures)
    max_components = std::max(max_components, mix.components());
  GmmAccumulator acc(model.mixtures.size(), max_components, model.dim());
  for (std::size_t u = 0; u < alignments.size(); ++u)
    acc.accumulate(model, alignments[u], features[u]);
  return acc.update(model, floor_fraction);
}

AcousticModelSet split_mixtures(const AcousticModelSet& model,
                                int max_components, double perturbation) {
  AcousticModelSet out = model;
  for (auto& mix : out.mixtures) {
    const std::size_t m = mix.components();
    const std::size_t budget =
        static_cast<std::size_t>(max_components) > m
            ? static_cast<std::size_t>(max_components) - m
            : 0;
    if (budget == 0) continue;
    // split the heaviest components first when the cap does not allow all
    std::vector<std::size_t> order(m);
    for (std::size_t c = 0; c < m; ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return mix.weights[a] > mix.weights[b];
                     });
    const std::size_t to_split = std::min(budget, m);
    std::set<std::size_t> chosen(order.begin(), order.begin() + to_split);

    GaussianMixture grown;
    const std::size_t d = mix.dim();
    std::size_t new_m = m + to_split;
    grown.means = Matrix(new_m, d);
    grown.variances = Matrix(new_m, d);
    std::size_t idx = 0;
    for (std::size_t c = 0; c < m; ++c) {
      if (chosen.count(c)) {
        std::size_t dmax = 0;
        for (std::size_t i = 1; i < d; ++i)
          if (mix.variances.at(c, i) > mix.variances.at(c, dmax)) dmax = i;
        const double sigma = std::sqrt(mix.variances.at(c, dmax));
        for (int sign : {-1, +1}) {
          grown.weights.push_back(mix.weights[c] / 2);
          for (std::size_t i = 0; i < d; ++i) {
            grown.means.at(idx, i) =
                mix.means.at(c, i) +
                (i == dmax ? sign * perturbation * sigma : 0.0);
            grown.variances.at(idx, i) = mix.variances.at(c, i);
          }
          ++idx;
        }
      } else {
        grown.weights.push_back(mix.weights[c]);
        for (std::size_t i = 0; i < d; ++i) {
          grown.means.at(idx, i) = mix.means.at(c, i);
          grown.variances.at(idx, i) = mix.variances.at(c, i);
        }
        ++idx;
      }
    }
    mix = std::move(grown);
  }
  return out;
}

double alignment_emission_loglik(const AcousticModelSet& model,
                                 const Alignment& alignment,
                                 const FeatureMatrix& features) {
  if (alignment.size() != features.frames())
    throw DataError("alignment/feature length mismatch");
  double ll = 0;
  for (std::size_t t = 0; t < alignment.size(); ++t)
    ll += score_frame(model, alignment[t].tied_state, features.values.row(t));
  return ll;
}

AcousticModelSet flat_start(std::size_t num_states,
                            const std::vector<FeatureMatrix>& features,
                            const HmmTopology& topology) {
  if (features.empty()) throw DataError("flat_start: no features");
  const std::size_t d = features[0].dim();
  std::vector<double> sum(d, 0.0), sumsq(d, 0.0);
  double n = 0;
  for (const auto& fm : features)
    for (std::size_t t = 0; t < fm.frames(); ++t) {
      for (std::size_t i = 0; i < d; ++i) {
        const double x = fm.values.at(t, i);
        sum[i] += x;
        sumsq[i] += x * x;
      }
      n += 1;
    }
  GaussianMixture proto;
  proto.weights = {1.0};
  proto.means = Matrix(1, d);
  proto.variances = Matrix(1, d);
  for (std::size_t i = 0; i < d; ++i) {
    const double mean = sum[i] / n;
    proto.means.at(0, i) = mean;
    proto.variances.at(0, i) = std::max(sumsq[i] / n - mean * mean, 1e-8);
  }
  AcousticModelSet model;
  model.topology = topology;
  model.mixtures.assign(num_states, proto);
  return model;
}

MonophoneTrainResult train_monophone(const std::vector<FeatureMatrix>& features,
                                     const std::vector<HmmChain>& chains,
                                     const HmmTopology& topology,
                                     std::size_t num_states,
                                     const MonophoneTrainConfig& config) {
  if (features.size() != chains.size())
    throw DataError("train_monophone: features/chains mismatch");
  AcousticModelSet model = flat_start(num_states, features, topology);
  std::vector<Alignment> alignments(features.size());

  for (int it = 0; it < config.linear_iterations; ++it) {
    for (std::size_t u = 0; u < features.size(); ++u)
      alignments[u] = linear_align(features[u].frames(), chains[u]);
    model = accumulate_and_update(model, alignments, features,
                                  config.variance_floor_fraction);
  }
  for (int it = 0; it < config.realign_iterations; ++it) {
    for (std::size_t u = 0; u < features.size(); ++u)
      alignments[u] = viterbi_align(features[u], model, chains[u]).alignment;
    model = accumulate_and_update(model, alignments, features,
                                  config.variance_floor_fraction);
    if (config.split_every > 0 && (it + 1) % config.split_every == 0)
      model = split_mixtures(model, config.max_components);
  }
  return {std::move(model), std::move(alignments)};
}

FeatureMatrix apply_transform(const SpeakerTransform& transform,
                              const FeatureMatrix& features) {
  const std::size_t d = features.dim();
  if (transform.A.rows() != d || transform.b.size() != d)
    throw DataError("apply_transform: dimension mismatch");
  FeatureMatrix out = features;
  out.kind = FeatureKind::kAdapted;
  for (std::size_t t = 0; t < features.frames(); ++t)
    for (std::size_t i = 0; i < d; ++i) {
      double s = transform.b[i];
      for (std::size_t j = 0; j < d; ++j)
        s += transform.A.at(i, j) * features.values.at(t, j);
      out.values.at(t, i) = s;
    }
  return out;
}

void save_model(const AcousticModelSet& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  out << "AMSET 1\n";
  out << "dim " << model.dim() << "\n";
  out << "states " << model.label_inventory() << "\n";
  out << "states_per_phone " << model.topology.states_per_phone << "\n";
  out << "silence_states " << model.topology.silence_states << "\n";
  out << "speech_loop " << model.topology.speech_loop << "\n";
  out << "speech_forward " << model.topology.speech_forward << "\n";
  out << "silence_loop " << model.topology.silence_loop << "\n";
  out << "silence_forward " << model.topology.silence_forward << "\n";
  out << "binary\n";
  for (const auto& mix : model.mixtures) {
    std::uint32_t m = static_cast<std::uint32_t>(mix.components());
    out.write(reinterpret_cast<const char*>(&m), sizeof(m));
    out.write(reinterpret_cast<const char*>(mix.weights.data()),
              static_cast<std::streamsize>(m * sizeof(double)));
    out.write(reinterpret_cast<const char*>(mix.means.data().data()),
              static_cast<std::streamsize>(mix.means.data().size() *
                                           sizeof(double)));
    out.write(reinterpret_cast<const char*>(mix.variances.data().data()),
              static_cast<std::streamsize>(mix.variances.data().size() *
                                           sizeof(double)));
  }
}

AcousticModelSet load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::string line;
  std::getline(in, line);
  if (line != "AMSET 1") throw DataError(path + ": not a model file");
  AcousticModelSet model;
  std::size_t dim = 0, states = 0;
  while (std::getline(in, line)) {
    if (line == "binary") break;
    std::istringstream iss(line);
    std::string key;
    iss >> key;
    if (key == "dim") iss >> dim;
    else if (key == "states") iss >> states;
    else if (key == "states_per_phone") iss >> model.topology.states_per_phone;
    else if (key == "silence_states") iss >> model.topology.silence_states;
    else if (key == "speech_loop") iss >> model.topology.speech_loop;
    else if (key == "speech_forward") iss >> model.topology.speech_forward;
    else if (key == "silence_loop") iss >> model.topology.silence_loop;
    else if (key == "silence_forward") iss >> model.topology.silence_forward;
    else throw DataError(path + ": unknown model header key '" + key + "'");
  }
  model.mixtures.resize(states);
  for (auto& mix : model.mixtures) {
    std::uint32_t m = 0;
    in.read(reinterpret_cast<char*>(&m), sizeof(m));
    mix.weights.resize(m);
    in.read(reinterpret_cast<char*>(mix.weights.data()),
            static_cast<std::streamsize>(m * sizeof(double)));
    mix.means = Matrix(m, dim);
    in.read(reinterpret_cast<char*>(mix.means.data().data()),
            static_cast<std::streamsize>(m * dim * sizeof(double)));
    mix.variances = Matrix(m, dim);
    in.read(reinterpret_cast<char*>(mix.variances.data().data()),
            static_cast<std::streamsize>(m * dim * sizeof(double)));
    if (!in) throw DataError(path + ": truncated model file");
  }
  return model;
}

void save_alignments(const std::map<std::string, Alignment>& alignments,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write alignment file: " + path);
  for (const auto& [id, ali] : alignments) {
    out << "utt " << id << ' ' << ali.size() << '\n';
    for (std::size_t t = 0; t < ali.size(); ++t)
      out << t << '\t' << ali[t].tied_state << '\t' << ali[t].hmm_position
          << '\t' << ali[t].phone << '\n';
  }
}

std::map<std::string, Alignment> load_alignments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alignment file: " + path);
  std::map<std::string, Alignment> alignments;
  std::string line;
  std::string current;
  std::size_t expect = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    if (line.rfind("utt ", 0) == 0) {
      std::string tag;
      iss >> tag >> current >> expect;
      alignments[current].reserve(expect);
    } else {
      if (current.empty())
        throw DataError(path + ": frame line before utterance header");
      AlignedFrame f;
      std::size_t frame;
      iss >> frame >> f.tied_state >> f.hmm_position >> f.phone;
      if (!iss) throw DataError(path + ": malformed alignment line");
      alignments[current].push_back(std::move(f));
    }
  }
  return alignments;
}

}  // namespace asrkit
