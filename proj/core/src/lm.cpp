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

#include "asrkit/lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

namespace asrkit {

namespace {

constexpr double kStartLogprob = -99.0;  // ARPA convention for <s>

using Ngram = std::vector<std::string>;

Ngram suffix(const Ngram& g) { return Ngram(g.begin() + 1, g.end()); }

}  // namespace

NgramLm::NgramLm(int order, std::vector<std::string> vocab)
    : order_(order), vocab_(std::move(vocab)), tables_(order) {
  if (order < 1) throw DataError("n-gram order must be at least 1");
}

bool NgramLm::in_vocab(const std::string& word) const {
  return std::binary_search(vocab_.begin(), vocab_.end(), word);
}

std::map<Ngram, NgramEntry>& NgramLm::table(int n) {
  if (n < 1 || n > order_) throw DataError("n-gram table index out of range");
  return tables_[n - 1];
}

const std::map<Ngram, NgramEntry>& NgramLm::table(int n) const {
  if (n < 1 || n > order_) throw DataError("n-gram table index out of range");
  return tables_[n - 1];
}

double NgramLm::log10_prob(const Ngram& context,
                           const std::string& word) const {
  const std::string w = in_vocab(word) ? word : std::string(kUnknownWord);
  Ngram ctx;
  const std::size_t keep =
      std::min<std::size_t>(context.size(), order_ - 1);
  for (std::size_t i = context.size() - keep; i < context.size(); ++i)
    ctx.push_back(in_vocab(context[i]) ? context[i]
                                       : std::string(kUnknownWord));
  double bow_total = 0;
  while (true) {
    Ngram key = ctx;
    key.push_back(w);
    const auto& tab = table(static_cast<int>(key.size()));
    auto it = tab.find(key);
    if (it != tab.end()) return bow_total + it->second.logprob;
    if (ctx.empty()) {
      // <unk> is always in the unigram table of our own models, but a
      // loaded ARPA file may lack it
      auto uit = table(1).find({kUnknownWord});
      if (uit != table(1).end()) return bow_total + uit->second.logprob;
      throw DataError("language model has no <unk> entry");
    }
    auto bit = table(static_cast<int>(ctx.size())).find(ctx);
    if (bit != table(static_cast<int>(ctx.size())).end())
      bow_total += bit->second.backoff;
    ctx = suffix(ctx);
  }
}

double NgramLm::sentence_log10(const Ngram& words) const {
  Ngram ctx{kSentenceStart};
  double total = 0;
  for (const auto& w : words) {
    total += log10_prob(ctx, w);
    ctx.push_back(in_vocab(w) ? w : std::string(kUnknownWord));
  }
  total += log10_prob(ctx, kSentenceEnd);
  return total;
}

double perplexity(const NgramLm& lm,
                  const std::vector<std::vector<std::string>>& text) {
  double total = 0;
  std::size_t events = 0;
  for (const auto& sent : text) {
    total += lm.sentence_log10(sent);
    events += sent.size() + 1;  // words plus </s>
  }
  if (events == 0) throw DataError("perplexity of empty text");
  return std::pow(10.0, -total / static_cast<double>(events));
}

NgramLm estimate_kneser_ney(const std::vector<std::vector<std::string>>& text,
                            const KneserNeyConfig& config) {
  const int n = config.order;
  if (n < 1) throw DataError("n-gram order must be at least 1");
  if (text.empty()) throw DataError("empty language model training text");

  std::set<std::string> vocab_set{kSentenceStart, kSentenceEnd, kUnknownWord};
  for (const auto& sent : text)
    for (const auto& w : sent) vocab_set.insert(w);
  std::vector<std::string> vocab(vocab_set.begin(), vocab_set.end());

  // raw counts per order over <s> ... </s> padded sentences
  std::vector<std::map<Ngram, double>> raw(n + 1);
  for (const auto& sent : text) {
    Ngram padded{kSentenceStart};
    padded.insert(padded.end(), sent.begin(), sent.end());
    padded.push_back(kSentenceEnd);
    for (int k = 1; k <= n; ++k)
      for (std::size_t i = 0; i + k <= padded.size(); ++i)
        raw[k][Ngram(padded.begin() + i, padded.begin() + i + k)] += 1;
  }

  // adjusted counts: continuation counts below the top order, except for
  // n-grams anchored at <s> which have no left context
  std::vector<std::map<Ngram, double>> adj(n + 1);
  adj[n] = raw[n];
  for (int k = n - 1; k >= 1; --k) {
    for (const auto& [g, c] : raw[k])
      if (g.front() == kSentenceStart) adj[k][g] = c;
    for (const auto& [g, c] : raw[k + 1]) {
      Ngram s = suffix(g);
      if (s.front() != kSentenceStart) adj[k][s] += 1;  // one distinct left word
    }
  }

  // absolute discount per order from count-of-counts
  std::vector<double> discount(n + 1, config.fallback_discount);
  for (int k = 1; k <= n; ++k) {
    double n1 = 0, n2 = 0;
    for (const auto& [g, c] : adj[k]) {
      if (c == 1) n1 += 1;
      else if (c == 2) n2 += 1;
    }
    if (n1 > 0) {
      discount[k] = n1 / (n1 + 2 * n2);
    } else {
      std::cerr << "warning: degenerate count-of-counts at order " << k
                << ", using discount " << config.fallback_discount << "\n";
    }
  }

  // interpolated probabilities, bottom-up
  std::vector<std::map<Ngram, double>> prob(n + 1);
  {
    double total = 0;
    for (const auto& [g, c] : adj[1])
      if (g.front() != kSentenceStart) total += c;
    // uniform over predictable words (everything but <s>), so the
    // unigram distribution normalizes exactly
    const double uniform = 1.0 / static_cast<double>(vocab.size() - 1);
    double types = 0;
    for (const auto& [g, c] : adj[1])
      if (g.front() != kSentenceStart) types += 1;
    for (const auto& w : vocab) {
      if (w == kSentenceStart) continue;
      auto it = adj[1].find({w});
      const double c = it == adj[1].end() ? 0.0 : it->second;
      prob[1][{w}] = std::max(c - discount[1], 0.0) / total +
                     discount[1] * types / total * uniform;
    }
  }
  for (int k = 2; k <= n; ++k) {
    // context totals and continuation type counts
    std::map<Ngram, double> ctx_total, ctx_types;
    for (const auto& [g, c] : adj[k]) {
      Ngram h(g.begin(), g.end() - 1);
      ctx_total[h] += c;
      ctx_types[h] += 1;
    }
    for (const auto& [g, c] : adj[k]) {
      Ngram h(g.begin(), g.end() - 1);
      const double total = ctx_total[h];
      const double lower = prob[k - 1].at(suffix(g));
      prob[k][g] = std::max(c - discount[k], 0.0) / total +
                   discount[k] * ctx_types[h] / total * lower;
    }
  }

  NgramLm lm(n, vocab);
  for (int k = 1; k <= n; ++k)
    for (const auto& [g, p] : prob[k]) {
      NgramEntry e;
      e.logprob = (k == 1 && g.front() == kSentenceStart)
                      ? kStartLogprob
                      : std::log10(p);
      lm.table(k)[g] = e;
    }
  if (lm.table(1).find({kSentenceStart}) == lm.table(1).end())
    lm.table(1)[{kSentenceStart}] = {kStartLogprob, 0.0};

  // backoff weights for every context that has continuations
  for (int k = 1; k < n; ++k) {
    std::map<Ngram, std::pair<double, double>> mass;  // seen, lower-seen
    for (const auto& [g, p] : prob[k + 1]) {
      Ngram h(g.begin(), g.end() - 1);
      mass[h].first += p;
      mass[h].second += prob[k].at(suffix(g));
    }
    for (const auto& [h, m] : mass) {
      auto it = lm.table(k).find(h);
      if (it == lm.table(k).end())
        throw EstimationError("missing context entry during estimation");
      const double denom = 1.0 - m.second;
      const double numer = 1.0 - m.first;
      if (numer <= 1e-12) {
        // no leftover probability (e.g. zero discount): back off to nothing
        it->second.backoff = denom <= 1e-12 ? 0.0 : kStartLogprob;
      } else {
        it->second.backoff =
            denom <= 1e-12 ? 0.0 : std::log10(numer / denom);
      }
    }
  }
  return lm;
}

NgramLm interpolate_static(const NgramLm& a, const NgramLm& b, double weight) {
  if (weight < 0 || weight > 1)
    throw DataError("interpolation weight must be in [0, 1]");
  const int n = std::max(a.order(), b.order());
  std::set<std::string> vocab_set(a.vocab().begin(), a.vocab().end());
  vocab_set.insert(b.vocab().begin(), b.vocab().end());
  NgramLm out(n, {vocab_set.begin(), vocab_set.end()});

  auto interp = [&](const Ngram& ctx, const std::string& w) {
    const double pa = std::pow(10.0, a.log10_prob(ctx, w));
    const double pb = std::pow(10.0, b.log10_prob(ctx, w));
    return weight * pa + (1 - weight) * pb;
  };

  // union of n-grams per order; probabilities interpolated through each
  // component's own backoff
  for (int k = 1; k <= n; ++k) {
    std::set<Ngram> keys;
    if (k <= a.order())
      for (const auto& [g, e] : a.table(k)) keys.insert(g);
    if (k <= b.order())
      for (const auto& [g, e] : b.table(k)) keys.insert(g);
    if (k == 1)
      for (const auto& w : out.vocab()) keys.insert({w});
    for (const auto& g : keys) {
      Ngram ctx(g.begin(), g.end() - 1);
      NgramEntry e;
      e.logprob = (k == 1 && g.front() == kSentenceStart)
                      ? kStartLogprob
                      : std::log10(interp(ctx, g.back()));
      out.table(k)[g] = e;
    }
  }
  // recompute backoff weights against the merged tables
  for (int k = 1; k < n; ++k) {
    std::map<Ngram, std::pair<double, double>> mass;
    for (const auto& [g, e] : out.table(k + 1)) {
      Ngram h(g.begin(), g.end() - 1);
      mass[h].first += std::pow(10.0, e.logprob);
      auto low = out.table(k).find(suffix(g));
      if (low == out.table(k).end())
        throw EstimationError("missing lower-order entry in interpolation");
      mass[h].second += std::pow(10.0, low->second.logprob);
    }
    for (const auto& [h, m] : mass) {
      auto it = out.table(k).find(h);
      if (it == out.table(k).end()) {
        NgramEntry e;
        Ngram ctx(h.begin(), h.end() - 1);
        e.logprob = std::log10(interp(ctx, h.back()));
        it = out.table(k).emplace(h, e).first;
      }
      const double denom = 1.0 - m.second;
      const double numer = 1.0 - m.first;
      if (numer <= 1e-12) {
        // no leftover probability (e.g. zero discount): back off to nothing
        it->second.backoff = denom <= 1e-12 ? 0.0 : kStartLogprob;
      } else {
        it->second.backoff =
            denom <= 1e-12 ? 0.0 : std::log10(numer / denom);
      }
    }
  }
  return out;
}

double mixture_perplexity(const std::vector<const NgramLm*>& components,
                          const std::vector<double>& weights,
                          const std::vector<std::vector<std::string>>& text) {
  if (components.empty() || components.size() != weights.size())
    throw DataError("mixture components and weights must match");
  double total = 0;
  std::size_t events = 0;
  for (const auto& sent : text) {
    Ngram ctx{kSentenceStart};
    Ngram padded = sent;
    padded.push_back(kSentenceEnd);
    for (const auto& w : padded) {
      double p = 0;
      for (std::size_t c = 0; c < components.size(); ++c)
        p += weights[c] * std::pow(10.0, components[c]->log10_prob(ctx, w));
      total += std::log10(p);
      ctx.push_back(w);
      ++events;
    }
  }
  if (events == 0) throw DataError("perplexity of empty text");
  return std::pow(10.0, -total / static_cast<double>(events));
}

InterpolationResult optimize_interpolation(
    const std::vector<const NgramLm*>& components,
    const std::vector<std::vector<std::string>>& dev_text, int iterations) {
  if (components.size() < 2)
    throw DataError("interpolation needs at least two components");
  if (dev_text.empty()) throw DataError("empty interpolation dev text");

  // per-event linear component probabilities, computed once
  std::vector<std::vector<double>> event_probs;
  for (const auto& sent : dev_text) {
    Ngram ctx{kSentenceStart};
    Ngram padded = sent;
    padded.push_back(kSentenceEnd);
    for (const auto& w : padded) {
      std::vector<double> probs(components.size());
      for (std::size_t c = 0; c < components.size(); ++c)
        probs[c] = std::pow(10.0, components[c]->log10_prob(ctx, w));
      event_probs.push_back(std::move(probs));
      ctx.push_back(w);
    }
  }

  InterpolationResult result;
  result.weights.assign(components.size(),
                        1.0 / static_cast<double>(components.size()));
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> acc(components.size(), 0.0);
    for (const auto& probs : event_probs) {
      double denom = 0;
      for (std::size_t c = 0; c < probs.size(); ++c)
        denom += result.weights[c] * probs[c];
      if (denom <= 0) continue;
      for (std::size_t c = 0; c < probs.size(); ++c)
        acc[c] += result.weights[c] * probs[c] / denom;
    }
    const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
    for (std::size_t c = 0; c < acc.size(); ++c)
      result.weights[c] = acc[c] / total;
  }
  result.perplexity = mixture_perplexity(components, result.weights, dev_text);
  return result;
}

std::vector<std::vector<std::string>> load_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open text file: " + path);
  std::vector<std::vector<std::string>> text;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<std::string> words;
    std::string w;
    while (ss >> w) words.push_back(w);
    if (!words.empty()) text.push_back(std::move(words));
  }
  return text;
}

}  // namespace asrkit
