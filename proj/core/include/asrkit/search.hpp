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

#ifndef ASRKIT_SEARCH_HPP
#define ASRKIT_SEARCH_HPP

#include <functional>
#include <string>
#include <vector>

#include "asrkit/gmm.hpp"
#include "asrkit/lattice.hpp"
#include "asrkit/scorer.hpp"

namespace asrkit {

struct DecoderConfig {
  double lm_scale = 12.0;
  double word_insertion_penalty = 0.0;  // natural log, added per word
  double beam = 200.0;                  // natural log width; <=0 disables
  int max_active = 20000;               // histogram pruning; <=0 disables
  int lattice_density = 50;             // word-end records kept per frame
  bool allow_silence = true;
};

struct DecodeResult {
  std::vector<std::string> words;
  double score = 0;  // combined am + scaled lm, natural log
  Lattice lattice;
};

// Frame-synchronous token-passing decoder over per-word left-to-right HMM
// chains. `loglik` holds natural-log acoustic scores per frame and tied
// state; words use their first pronunciation with cross-word boundaries
// treated as context "#". Produces a word lattice alongside the best path.
DecodeResult decode(const Matrix& loglik, const Lexicon& lexicon,
                    const StateMapper& mapper, const HmmTopology& topology,
                    const LmScorer& lm, const DecoderConfig& config = {});

struct RescoreConfig {
  // Hypotheses at a lattice node recombine when their last
  // (recombination_order - 1) words agree.
  int recombination_order = 9;
  int max_hyps_per_node = 100;
  // ranking scales for hypothesis pruning
  LatticeScales scales;
};

// Push-forward rescoring: traverses the lattice in topological order,
// carrying scorer states; returns a lattice with LM scores replaced by the
// new scorer's. Arc acoustic scores are preserved.
Lattice rescore_pushforward(const Lattice& lattice, const LmScorer& scorer,
                            const RescoreConfig& config = {});

// Per-step label scorer for label-synchronous search: natural-log scores
// over the label vocabulary (last entry conventions are up to the caller)
// given the emitted prefix.
using StepScorer =
    std::function<std::vector<double>(const std::vector<int>& prefix)>;

struct FusionConfig {
  double lm_weight = 0.3;    // applied to the LM log10 score (times ln 10)
  double eos_penalty = 0.0;  // natural log, added when emitting eos
  int beam_size = 64;
  int max_length = 200;
  int nbest = 1;
  // true: labels are </w>-marked subword units and the LM is consulted at
  // word ends; false: every label is a complete word
  bool subword_units = true;
};

struct FusionHypothesis {
  std::vector<int> labels;  // eos excluded
  double score = 0;         // combined, natural log
  double seq_score = 0;     // label model part
  double lm_score = 0;      // log10 LM part
};

// Shallow fusion: label-synchronous beam search combining a step scorer
// with an external LM. `vocab` names the labels for LM scoring; `eos_id`
// terminates a hypothesis and scores kSentenceEnd.
std::vector<FusionHypothesis> fusion_beam_search(
    const StepScorer& step, const std::vector<std::string>& vocab, int eos_id,
    const LmScorer* lm, const FusionConfig& config = {});

}  // namespace asrkit

#endif  // ASRKIT_SEARCH_HPP
