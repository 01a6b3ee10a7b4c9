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

#include "asrkit/scorer.hpp"

#include <cmath>

namespace asrkit {

namespace {

struct NgramState : LmStateBase {
  std::vector<std::string> context;  // at most order-1 words

  bool equals(const LmStateBase& other) const override {
    const auto* o = dynamic_cast<const NgramState*>(&other);
    return o && o->context == context;
  }
  std::size_t hash() const override {
    std::size_t h = 1469598103934665603ull;
    for (const auto& w : context) {
      h ^= fnv1a(w.data(), w.size());
      h *= 1099511628211ull;
    }
    return h;
  }
};

struct InterpState : LmStateBase {
  std::vector<LmState> parts;

  bool equals(const LmStateBase& other) const override {
    const auto* o = dynamic_cast<const InterpState*>(&other);
    if (!o || o->parts.size() != parts.size()) return false;
    for (std::size_t i = 0; i < parts.size(); ++i)
      if (!(parts[i] == o->parts[i])) return false;
    return true;
  }
  std::size_t hash() const override {
    std::size_t h = 14695981039346656037ull;
    for (const auto& p : parts) {
      h ^= p.hash();
      h *= 1099511628211ull;
    }
    return h;
  }
};

}  // namespace

LmState NgramScorer::initial_state() const {
  auto s = std::make_shared<NgramState>();
  s->context = {kSentenceStart};
  return {s};
}

std::pair<LmState, double> NgramScorer::score(const LmState& state,
                                              const std::string& word) const {
  const auto* s = dynamic_cast<const NgramState*>(state.impl.get());
  if (!s) throw DataError("NgramScorer: foreign state");
  const double lp = lm_->log10_prob(s->context, word);
  auto next = std::make_shared<NgramState>();
  if (word != kSentenceEnd) {
    next->context = s->context;
    next->context.push_back(lm_->in_vocab(word) ? word
                                                : std::string(kUnknownWord));
    while (next->context.size() >
           static_cast<std::size_t>(lm_->order() - 1))
      next->context.erase(next->context.begin());
  }
  return {LmState{next}, lp};
}

InterpolatedScorer::InterpolatedScorer(std::vector<const LmScorer*> components,
                                       std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty() || components_.size() != weights_.size())
    throw DataError("interpolated scorer: components/weights mismatch");
  double sum = 0;
  for (double w : weights_) {
    if (w < 0) throw DataError("interpolation weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw DataError("interpolation weights must sum to 1");
}

LmState InterpolatedScorer::initial_state() const {
  auto s = std::make_shared<InterpState>();
  for (const auto* c : components_) s->parts.push_back(c->initial_state());
  return {s};
}

std::pair<LmState, double> InterpolatedScorer::score(
    const LmState& state, const std::string& word) const {
  const auto* s = dynamic_cast<const InterpState*>(state.impl.get());
  if (!s) throw DataError("InterpolatedScorer: foreign state");
  auto next = std::make_shared<InterpState>();
  double p = 0;
  for (std::size_t c = 0; c < components_.size(); ++c) {
    auto [ns, lp] = components_[c]->score(s->parts[c], word);
    next->parts.push_back(std::move(ns));
    p += weights_[c] * std::pow(10.0, lp);
  }
  return {LmState{next}, std::log10(p)};
}

double scorer_sentence_log10(const LmScorer& scorer,
                             const std::vector<std::string>& words) {
  LmState state = scorer.initial_state();
  double total = 0;
  for (const auto& w : words) {
    auto [next, lp] = scorer.score(state, w);
    state = std::move(next);
    total += lp;
  }
  auto [fin, lp] = scorer.score(state, kSentenceEnd);
  return total + lp;
}

double scorer_perplexity(const LmScorer& scorer,
                         const std::vector<std::vector<std::string>>& text) {
  double total = 0;
  std::size_t events = 0;
  for (const auto& sent : text) {
    total += scorer_sentence_log10(scorer, sent);
    events += sent.size() + 1;
  }
  if (events == 0) throw DataError("perplexity of empty text");
  return std::pow(10.0, -total / static_cast<double>(events));
}

}  // namespace asrkit
