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

#ifndef ASRKIT_SCORER_HPP
#define ASRKIT_SCORER_HPP

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "asrkit/lm.hpp"

namespace asrkit {

// Opaque scorer state so decoders can recombine hypotheses without
// knowing the model family behind the scorer.
class LmStateBase {
 public:
  virtual ~LmStateBase() = default;
  virtual bool equals(const LmStateBase& other) const = 0;
  virtual std::size_t hash() const = 0;
};

struct LmState {
  std::shared_ptr<const LmStateBase> impl;

  bool operator==(const LmState& other) const {
    if (impl == other.impl) return true;
    if (!impl || !other.impl) return false;
    return impl->equals(*other.impl);
  }
  std::size_t hash() const { return impl ? impl->hash() : 0; }
};

struct LmStateHash {
  std::size_t operator()(const LmState& s) const { return s.hash(); }
};

// Incremental word scorer; scores are log10.
class LmScorer {
 public:
  virtual ~LmScorer() = default;
  virtual LmState initial_state() const = 0;
  // Returns the successor state and log10 p(word | state). Scoring
  // kSentenceEnd finishes the sentence; the returned state is final.
  virtual std::pair<LmState, double> score(const LmState& state,
                                           const std::string& word) const = 0;
};

class NgramScorer : public LmScorer {
 public:
  explicit NgramScorer(const NgramLm& lm) : lm_(&lm) {}
  LmState initial_state() const override;
  std::pair<LmState, double> score(const LmState& state,
                                   const std::string& word) const override;

 private:
  const NgramLm* lm_;
};

// Dynamic linear interpolation of scorers; the state carries each
// component's state.
class InterpolatedScorer : public LmScorer {
 public:
  InterpolatedScorer(std::vector<const LmScorer*> components,
                     std::vector<double> weights);
  LmState initial_state() const override;
  std::pair<LmState, double> score(const LmState& state,
                                   const std::string& word) const override;

 private:
  std::vector<const LmScorer*> components_;
  std::vector<double> weights_;
};

// log10 total of a full sentence under a scorer, </s> included.
double scorer_sentence_log10(const LmScorer& scorer,
                             const std::vector<std::string>& words);

double scorer_perplexity(const LmScorer& scorer,
                         const std::vector<std::vector<std::string>>& text);

}  // namespace asrkit

#endif  // ASRKIT_SCORER_HPP
