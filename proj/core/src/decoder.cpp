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
#include <unordered_map>

#include "asrkit/search.hpp"

namespace asrkit {

namespace {

constexpr int kSilenceWord = -1;

struct WordHmm {
  std::string label;
  std::vector<int> states;       // tied-state sequence
  std::vector<bool> is_silence;  // per state, for transition probabilities
};

// first pronunciation, word-internal triphones, "#" at the edges
WordHmm build_word_hmm(const std::string& word, const Lexicon& lexicon,
                       const StateMapper& mapper,
                       const HmmTopology& topology) {
  auto it = lexicon.entries.find(word);
  if (it == lexicon.entries.end() || it->second.empty())
    throw DataError("word missing from lexicon: " + word);
  const auto& phones = it->second.front();
  if (phones.empty()) throw DataError("empty pronunciation for " + word);
  WordHmm hmm;
  hmm.label = word;
  for (std::size_t i = 0; i < phones.size(); ++i) {
    const std::string left = i == 0 ? kBoundarySymbol : phones[i - 1];
    const std::string right =
        i + 1 == phones.size() ? kBoundarySymbol : phones[i + 1];
    for (int pos = 0; pos < topology.states_per_phone; ++pos) {
      hmm.states.push_back(mapper(left, phones[i], right, pos));
      hmm.is_silence.push_back(false);
    }
  }
  return hmm;
}

WordHmm build_silence_hmm(const Lexicon& lexicon, const StateMapper& mapper,
                          const HmmTopology& topology) {
  WordHmm hmm;
  hmm.label = kEpsilonWord;
  for (int pos = 0; pos < topology.silence_states; ++pos) {
    hmm.states.push_back(mapper(kBoundarySymbol, lexicon.silence_symbol,
                                kBoundarySymbol, pos));
    hmm.is_silence.push_back(true);
  }
  return hmm;
}

struct Token {
  int word = 0;  // index into the word list; kSilenceWord for silence
  int pos = 0;   // state index within the word HMM
  double score = kNegInf;   // combined, natural log
  double am_in_word = 0;    // emissions + transitions inside this word
  double lm_word = 0;       // log10 LM score of this word
  LmState lm_state;         // boundary state after this word's LM update
  int entry_node = 0;       // lattice node where the word was entered
  std::vector<int> states;  // tied states consumed inside this word
};

struct TokenKey {
  int word;
  int pos;
  std::size_t lm_hash;
  bool operator==(const TokenKey& o) const {
    return word == o.word && pos == o.pos && lm_hash == o.lm_hash;
  }
};

struct TokenKeyHash {
  std::size_t operator()(const TokenKey& k) const {
    std::size_t h = k.lm_hash;
    h = h * 1099511628211ull ^ static_cast<std::size_t>(k.word + 7);
    h = h * 1099511628211ull ^ static_cast<std::size_t>(k.pos + 3);
    return h;
  }
};

struct NodeKey {
  int frame;
  LmState state;
};

}  // namespace

DecodeResult decode(const Matrix& loglik, const Lexicon& lexicon,
                    const StateMapper& mapper, const HmmTopology& topology,
                    const LmScorer& lm, const DecoderConfig& config) {
  const std::size_t num_frames = loglik.rows();
  if (num_frames == 0) throw DataError("decode: empty input");

  std::vector<WordHmm> words;
  for (const auto& [w, prons] : lexicon.entries) {
    if (w == lexicon.silence_symbol) continue;  // silence is not a word
    words.push_back(build_word_hmm(w, lexicon, mapper, topology));
  }
  if (words.empty()) throw DataError("decode: empty lexicon");
  WordHmm silence;
  if (config.allow_silence)
    silence = build_silence_hmm(lexicon, mapper, topology);

  auto word_hmm = [&](int w) -> const WordHmm& {
    return w == kSilenceWord ? silence : words[w];
  };

  DecodeResult result;
  Lattice& lat = result.lattice;
  std::vector<std::pair<NodeKey, int>> node_list;  // key -> node id
  auto get_node = [&](int frame, const LmState& state) {
    for (const auto& [key, id] : node_list)
      if (key.frame == frame && key.state == state) return id;
    const int id = static_cast<int>(lat.nodes.size());
    lat.nodes.push_back({id, frame});
    node_list.push_back({{frame, state}, id});
    return id;
  };

  const LmState initial = lm.initial_state();
  const int start_node = get_node(0, initial);
  lat.start = start_node;

  // expands tokens out of a boundary into word-start tokens at `frame`
  std::unordered_map<TokenKey, Token, TokenKeyHash> active;
  auto enter_words = [&](const LmState& boundary, double score, int node) {
    for (std::size_t w = 0; w < words.size(); ++w) {
      auto [next, lp] = lm.score(boundary, words[w].label);
      Token tok;
      tok.word = static_cast<int>(w);
      tok.pos = 0;
      tok.score = score + config.lm_scale * kLn10 * lp +
                  config.word_insertion_penalty;
      tok.am_in_word = 0;
      tok.lm_word = lp;
      tok.lm_state = std::move(next);
      tok.entry_node = node;
      TokenKey key{tok.word, 0, tok.lm_state.hash()};
      auto it = active.find(key);
      if (it == active.end() || tok.score > it->second.score)
        active[key] = std::move(tok);
    }
    if (config.allow_silence) {
      Token tok;
      tok.word = kSilenceWord;
      tok.pos = 0;
      tok.score = score;
      tok.am_in_word = 0;
      tok.lm_word = 0;
      tok.lm_state = boundary;
      tok.entry_node = node;
      TokenKey key{kSilenceWord, 0, tok.lm_state.hash()};
      auto it = active.find(key);
      if (it == active.end() || tok.score > it->second.score)
        active[key] = std::move(tok);
    }
  };

  enter_words(initial, 0.0, start_node);

  struct WordEnd {
    Token token;
    int node = 0;  // boundary node after the word
  };

  for (std::size_t t = 0; t < num_frames; ++t) {
    // consume emission t
    for (auto& [key, tok] : active) {
      const int s = word_hmm(tok.word).states[tok.pos];
      if (s < 0 || s >= static_cast<int>(loglik.cols()))
        throw DataError("decode: tied state outside score matrix");
      const double e = loglik.at(t, s);
      tok.score += e;
      tok.am_in_word += e;
      tok.states.push_back(s);
    }

    // pruning
    double best = kNegInf;
    for (const auto& [key, tok] : active) best = std::max(best, tok.score);
    if (best == kNegInf) throw SearchError("decoder beam emptied");
    std::unordered_map<TokenKey, Token, TokenKeyHash> kept;
    for (auto& [key, tok] : active)
      if (config.beam <= 0 || tok.score >= best - config.beam)
        kept.emplace(key, std::move(tok));
    if (config.max_active > 0 &&
        kept.size() > static_cast<std::size_t>(config.max_active)) {
      std::vector<double> scores;
      scores.reserve(kept.size());
      for (const auto& [key, tok] : kept) scores.push_back(tok.score);
      std::nth_element(scores.begin(),
                       scores.end() - config.max_active, scores.end());
      const double cutoff = *(scores.end() - config.max_active);
      for (auto it = kept.begin(); it != kept.end();)
        it = it->second.score < cutoff ? kept.erase(it) : std::next(it);
    }

    // transitions into frame t+1: loop, in-word forward, and word exit
    std::unordered_map<TokenKey, Token, TokenKeyHash> next;
    auto offer = [&](Token&& tok) {
      TokenKey key{tok.word, tok.pos, tok.lm_state.hash()};
      auto it = next.find(key);
      if (it == next.end() || tok.score > it->second.score)
        next[key] = std::move(tok);
    };
    std::vector<WordEnd> ends;
    const bool last_frame = t + 1 == num_frames;
    for (auto& [key, tok] : kept) {
      const WordHmm& hmm = word_hmm(tok.word);
      const bool sil = hmm.is_silence[tok.pos];
      const double loop = loop_logprob(topology, sil);
      const double fwd = forward_logprob(topology, sil);
      if (!last_frame) {
        Token stay = tok;
        stay.score += loop;
        stay.am_in_word += loop;
        offer(std::move(stay));
        if (tok.pos + 1 < static_cast<int>(hmm.states.size())) {
          Token adv = tok;
          adv.score += fwd;
          adv.am_in_word += fwd;
          adv.pos += 1;
          offer(std::move(adv));
        }
      }
      if (tok.pos + 1 == static_cast<int>(hmm.states.size())) {
        // exit the word at boundary time t+1
        Token exit_tok = tok;
        if (!last_frame) {
          exit_tok.score += fwd;
          exit_tok.am_in_word += fwd;
        }
        ends.push_back({std::move(exit_tok), -1});
      }
    }

    // keep only the strongest word-end records per frame
    if (config.lattice_density > 0 &&
        ends.size() > static_cast<std::size_t>(config.lattice_density)) {
      std::sort(ends.begin(), ends.end(),
                [](const WordEnd& a, const WordEnd& b) {
                  return a.token.score > b.token.score;
                });
      ends.resize(config.lattice_density);
    }

    const int boundary_frame = static_cast<int>(t) + 1;
    for (auto& we : ends) {
      we.node = get_node(boundary_frame, we.token.lm_state);
      LatticeArc arc;
      arc.from = we.token.entry_node;
      arc.to = we.node;
      arc.word = we.token.word == kSilenceWord
                     ? kEpsilonWord
                     : words[we.token.word].label;
      arc.am = we.token.am_in_word;
      arc.lm = we.token.lm_word;
      arc.states = we.token.states;
      lat.arcs.push_back(std::move(arc));
    }

    if (!last_frame) {
      // boundary recombination: best exiting score per LM state
      std::unordered_map<std::size_t, const WordEnd*> boundaries;
      for (const auto& we : ends) {
        const std::size_t h = we.token.lm_state.hash();
        auto it = boundaries.find(h);
        if (it == boundaries.end() ||
            we.token.score > it->second->token.score)
          boundaries[h] = &we;
      }
      active = std::move(next);
      for (const auto& [h, we] : boundaries)
        enter_words(we->token.lm_state, we->token.score, we->node);
    } else {
      // terminate: score </s> out of every surviving boundary
      if (ends.empty())
        throw SearchError("no complete word at the final frame");
      const int end_node =
          static_cast<int>(lat.nodes.size());
      lat.nodes.push_back({end_node, boundary_frame});
      lat.end = end_node;
      std::unordered_map<int, bool> eos_done;
      for (const auto& we : ends) {
        if (eos_done[we.node]) continue;
        eos_done[we.node] = true;
        auto [fin, lp] = lm.score(we.token.lm_state, kSentenceEnd);
        LatticeArc arc;
        arc.from = we.node;
        arc.to = end_node;
        arc.word = kEpsilonWord;
        arc.am = 0;
        arc.lm = lp;
        lat.arcs.push_back(std::move(arc));
      }
      // the best path re-derived from the lattice is the decoder output;
      // the scales must match the decoder's own
      LatticeScales scales;
      scales.am_scale = 1.0;
      scales.lm_scale = config.lm_scale;
      scales.word_penalty = config.word_insertion_penalty;
      BestPath bp = lattice_best_path(lat, scales);
      result.words = bp.words;
      result.score = bp.score;
    }
  }
  return result;
}

}  // namespace asrkit
