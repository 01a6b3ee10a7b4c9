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

#include <algorithm>
#include <cmath>

#include "asrkit/bpe.hpp"
#include "asrkit/search.hpp"

namespace asrkit {

namespace {

struct FusionHyp {
  std::vector<int> labels;
  double seq_score = 0;
  double lm_score = 0;  // log10
  std::string partial;  // unfinished word from subword units
  LmState lm_state;
  bool has_lm = false;

  double combined(const FusionConfig& config) const {
    return seq_score + config.lm_weight * kLn10 * lm_score;
  }
};

}  // namespace

std::vector<FusionHypothesis> fusion_beam_search(
    const StepScorer& step, const std::vector<std::string>& vocab, int eos_id,
    const LmScorer* lm, const FusionConfig& config) {
  if (vocab.empty()) throw DataError("fusion: empty label vocabulary");
  if (eos_id < 0 || eos_id >= static_cast<int>(vocab.size()))
    throw DataError("fusion: eos id out of range");
  if (config.beam_size < 1) throw DataError("fusion: beam size must be >= 1");

  const std::string marker = kWordEnd;
  auto ends_word = [&](const std::string& label) {
    if (!config.subword_units) return true;
    return label.size() >= marker.size() &&
           label.compare(label.size() - marker.size(), marker.size(),
                         marker) == 0;
  };
  auto strip = [&](const std::string& label) {
    if (!config.subword_units || !ends_word(label)) return label;
    return label.substr(0, label.size() - marker.size());
  };

  std::vector<FusionHyp> beam(1);
  if (lm) {
    beam[0].lm_state = lm->initial_state();
    beam[0].has_lm = true;
  }
  std::vector<FusionHyp> finished;

  for (int length = 0; length < config.max_length && !beam.empty(); ++length) {
    std::vector<FusionHyp> expanded;
    for (const auto& hyp : beam) {
      const std::vector<double> scores = step(hyp.labels);
      if (scores.size() != vocab.size())
        throw DataError("fusion: step scorer size mismatch");
      for (int l = 0; l < static_cast<int>(vocab.size()); ++l) {
        FusionHyp next = hyp;
        next.seq_score += scores[l];
        if (l == eos_id) {
          next.seq_score += config.eos_penalty;
          if (lm) {
            // an unterminated subword tail still counts as a word
            if (!next.partial.empty()) {
              auto [s1, lp1] = lm->score(next.lm_state, next.partial);
              next.lm_state = std::move(s1);
              next.lm_score += lp1;
              next.partial.clear();
            }
            auto [s2, lp2] = lm->score(next.lm_state, kSentenceEnd);
            next.lm_state = std::move(s2);
            next.lm_score += lp2;
          }
          finished.push_back(std::move(next));
          continue;
        }
        next.labels.push_back(l);
        next.partial += strip(vocab[l]);
        if (lm && ends_word(vocab[l])) {
          auto [s, lp] = lm->score(next.lm_state, next.partial);
          next.lm_state = std::move(s);
          next.lm_score += lp;
          next.partial.clear();
        }
        expanded.push_back(std::move(next));
      }
    }
    std::sort(expanded.begin(), expanded.end(),
              [&](const FusionHyp& a, const FusionHyp& b) {
                return a.combined(config) > b.combined(config);
              });
    if (expanded.size() > static_cast<std::size_t>(config.beam_size))
      expanded.resize(config.beam_size);
    // stop once no live hypothesis can beat the weakest kept result
    if (static_cast<int>(finished.size()) >= config.nbest) {
      std::sort(finished.begin(), finished.end(),
                [&](const FusionHyp& a, const FusionHyp& b) {
                  return a.combined(config) > b.combined(config);
                });
      if (expanded.empty() ||
          expanded.front().combined(config) <
              finished[config.nbest - 1].combined(config))
        break;
    }
    beam = std::move(expanded);
  }
  if (finished.empty()) throw SearchError("fusion search finished nothing");
  std::sort(finished.begin(), finished.end(),
            [&](const FusionHyp& a, const FusionHyp& b) {
              return a.combined(config) > b.combined(config);
            });
  if (finished.size() > static_cast<std::size_t>(config.nbest))
    finished.resize(config.nbest);
  std::vector<FusionHypothesis> out;
  for (const auto& h : finished) {
    FusionHypothesis r;
    r.labels = h.labels;
    r.seq_score = h.seq_score;
    r.lm_score = h.lm_score;
    r.score = h.combined(config);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace asrkit
