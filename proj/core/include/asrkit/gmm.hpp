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

#ifndef ASRKIT_GMM_HPP
#define ASRKIT_GMM_HPP

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "asrkit/common.hpp"
#include "asrkit/corpus.hpp"
#include "asrkit/frontend.hpp"

namespace asrkit {

struct HmmTopology {
  int states_per_phone = 3;
  int silence_states = 1;
  // loop/forward probabilities, one set shared by all speech HMMs and one
  // for silence; set manually, configurable
  double speech_loop = 0.6;
  double speech_forward = 0.4;
  double silence_loop = 0.9;
  double silence_forward = 0.1;
};

struct GaussianMixture {
  std::vector<double> weights;  // simplex over components
  Matrix means;                 // M x D
  Matrix variances;             // M x D, diagonal covariance

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means.cols(); }
};

struct AcousticModelSet {
  HmmTopology topology;
  std::vector<GaussianMixture> mixtures;  // indexed by tied-state id

  std::size_t label_inventory() const { return mixtures.size(); }
  std::size_t dim() const {
    return mixtures.empty() ? 0 : mixtures[0].dim();
  }
};

struct AlignedFrame {
  int tied_state = 0;
  int hmm_position = 0;
  std::string phone;
  int chain_index = -1;  // position in the composed chain, -1 when unknown
};
using Alignment = std::vector<AlignedFrame>;

// One element of a composed left-to-right utterance HMM.
struct ChainState {
  int tied_state = 0;
  int hmm_position = 0;
  std::string phone;
  std::string left_context;   // "#" at word boundaries
  std::string right_context;
  bool is_silence = false;
};
using HmmChain = std::vector<ChainState>;

// Rebuilds chain indices for an alignment loaded from file (monotone greedy
// match; stays on repeated identical states).
void reconstruct_chain_indices(Alignment& alignment, const HmmChain& chain);

// Maps a triphone context (boundary symbol "#") and HMM position to a tied
// state; monophone systems ignore the context arguments.
using StateMapper = std::function<int(
    const std::string& left, const std::string& center,
    const std::string& right, int hmm_position)>;

constexpr const char* kBoundarySymbol = "#";

// Maps each (phone, hmm position) to its own state; silence states appended
// at the end of the inventory.
struct MonophoneInventory {
  std::vector<std::string> phones;  // sorted, silence excluded
  std::string silence_symbol = "sil";
  int states_per_phone = 3;
  int silence_states = 1;

  static MonophoneInventory from_lexicon(const Lexicon& lexicon,
                                         const HmmTopology& topology);
  int num_states() const;
  int state_id(const std::string& phone, int position) const;
  StateMapper mapper() const;
};

// Composes the utterance HMM chain for a transcript: optional boundary
// silence, word phones with word-internal triphone context and boundary
// symbols at word edges.
HmmChain compose_chain(const std::vector<std::string>& words,
                       const Lexicon& lexicon, const StateMapper& mapper,
                       const HmmTopology& topology,
                       bool boundary_silence = true);

double loop_logprob(const HmmTopology& topology, bool is_silence);
double forward_logprob(const HmmTopology& topology, bool is_silence);

// log sum_m w_m N(x; mu_m, diag var_m), log-sum-exp stable
double score_frame(const AcousticModelSet& model, int tied_state,
                   std::span<const double> feature);

// Uniform distribution of frames over the chain; earlier states get the
// larger share when T mod S != 0.
Alignment linear_align(std::size_t num_frames, const HmmChain& chain);

struct AlignResult {
  Alignment alignment;
  double loglik = 0.0;
};

// Maximum-likelihood monotone state path (emissions + transitions).
AlignResult viterbi_align(const FeatureMatrix& features,
                          const AcousticModelSet& model,
                          const HmmChain& chain);

// Sufficient statistics with hard state assignment and soft component
// assignment. Accumulators merge associatively for parallel workers.
class GmmAccumulator {
 public:
  GmmAccumulator(std::size_t num_states, std::size_t num_components_max,
                 std::size_t dim);

  void accumulate(const AcousticModelSet& model, const Alignment& alignment,
                  const FeatureMatrix& features);
  void merge(const GmmAccumulator& other);

  // ML update; variance floor = floor_fraction of global variance per dim;
  // states/components without mass keep previous parameters.
  AcousticModelSet update(const AcousticModelSet& model,
                          double floor_fraction = 1e-4) const;

 private:
  std::size_t dim_;
  std::vector<std::vector<double>> counts_;  // state -> component occupancy
  std::vector<Matrix> sums_;                 // state -> M x D
  std::vector<Matrix> sumsqs_;               // state -> M x D
  std::vector<double> global_sum_, global_sumsq_;
  double global_count_ = 0;
};

AcousticModelSet accumulate_and_update(
    const AcousticModelSet& model, const std::vector<Alignment>& alignments,
    const std::vector<FeatureMatrix>& features, double floor_fraction = 1e-4);

// Splits components at mean +/- perturbation*sigma along the largest-variance
// dimension, up to max_components per mixture.
AcousticModelSet split_mixtures(const AcousticModelSet& model,
                                int max_components,
                                double perturbation = 0.2);

// Emission log-likelihood of a fixed alignment (transitions excluded; they
// do not change under the EM update).
double alignment_emission_loglik(const AcousticModelSet& model,
                                 const Alignment& alignment,
                                 const FeatureMatrix& features);

// Flat-started single-Gaussian model over the given state inventory.
AcousticModelSet flat_start(std::size_t num_states,
                            const std::vector<FeatureMatrix>& features,
                            const HmmTopology& topology);

struct MonophoneTrainConfig {
  int linear_iterations = 5;
  int realign_iterations = 10;
  int split_every = 2;
  int max_components = 1;
  double variance_floor_fraction = 1e-4;
};

struct MonophoneTrainResult {
  AcousticModelSet model;
  std::vector<Alignment> alignments;
};

MonophoneTrainResult train_monophone(const std::vector<FeatureMatrix>& features,
                                     const std::vector<HmmChain>& chains,
                                     const HmmTopology& topology,
                                     std::size_t num_states,
                                     const MonophoneTrainConfig& config);

struct SpeakerTransform {
  std::string speaker_id;
  Matrix A;                // D x D
  std::vector<double> b;   // D
};

// CMLLR by iterative row-wise updates of [A b]; the auxiliary function is
// non-decreasing across sweeps.
SpeakerTransform estimate_cmllr(const std::vector<FeatureMatrix>& features,
                                const std::vector<Alignment>& alignments,
                                const AcousticModelSet& model,
                                const std::string& speaker_id,
                                int sweeps = 20,
                                std::vector<double>* aux_trace = nullptr);

FeatureMatrix apply_transform(const SpeakerTransform& transform,
                              const FeatureMatrix& features);

void save_model(const AcousticModelSet& model, const std::string& path);
AcousticModelSet load_model(const std::string& path);

void save_alignments(const std::map<std::string, Alignment>& alignments,
                     const std::string& path);
std::map<std::string, Alignment> load_alignments(const std::string& path);

}  // namespace asrkit

#endif  // ASRKIT_GMM_HPP
