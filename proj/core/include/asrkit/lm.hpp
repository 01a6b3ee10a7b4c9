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

#ifndef ASRKIT_LM_HPP
#define ASRKIT_LM_HPP

#include <map>
#include <string>
#include <vector>

#include "asrkit/common.hpp"

namespace asrkit {

inline constexpr const char* kSentenceStart = "<s>";
inline constexpr const char* kSentenceEnd = "</s>";
inline constexpr const char* kUnknownWord = "<unk>";

struct NgramEntry {
  double logprob = 0;  // log10
  double backoff = 0;  // log10; only meaningful for orders < max
};

// Backoff n-gram model in ARPA conventions: probabilities and backoff
// weights in log10. All scoring is in log10 as well.
class NgramLm {
 public:
  NgramLm() = default;
  NgramLm(int order, std::vector<std::string> vocab);

  int order() const { return order_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  bool in_vocab(const std::string& word) const;

  // tables_[n-1] maps an n-word sequence to its entry
  std::map<std::vector<std::string>, NgramEntry>& table(int n);
  const std::map<std::vector<std::string>, NgramEntry>& table(int n) const;

  // log10 p(word | context) with backoff; unknown words map to <unk>.
  double log10_prob(const std::vector<std::string>& context,
                    const std::string& word) const;

  // Sum of log10 word probabilities including </s>; <s> is context only.
  double sentence_log10(const std::vector<std::string>& words) const;

 private:
  int order_ = 0;
  std::vector<std::string> vocab_;
  std::vector<std::map<std::vector<std::string>, NgramEntry>> tables_;
};

struct KneserNeyConfig {
  int order = 4;
  // Discounts default to n1/(n1+2*n2) per order; 0.5 when degenerate.
  double fallback_discount = 0.5;
};

// Interpolated Kneser-Ney estimation from tokenized sentences. Lower
// orders use continuation counts; the unigram is interpolated with a
// uniform distribution so <unk> receives mass.
NgramLm estimate_kneser_ney(const std::vector<std::vector<std::string>>& text,
                            const KneserNeyConfig& config = {});

// Perplexity over sentences: 10^(-sum log10 p / N), N counting each word
// and one </s> per sentence.
double perplexity(const NgramLm& lm,
                  const std::vector<std::vector<std::string>>& text);

// Static linear interpolation: p = w*p_a + (1-w)*p_b over the union of
// n-grams, with backoff weights renormalized.
NgramLm interpolate_static(const NgramLm& a, const NgramLm& b, double weight);

struct InterpolationResult {
  std::vector<double> weights;  // sums to 1, aligned with the components
  double perplexity = 0;        // dev perplexity at the optimum
};

// EM optimization of linear interpolation weights on held-out text. The
// mixture likelihood is concave in the weights, so the result is at least
// as good as any single component.
InterpolationResult optimize_interpolation(
    const std::vector<const NgramLm*>& components,
    const std::vector<std::vector<std::string>>& dev_text,
    int iterations = 100);

// Perplexity of a fixed-weight mixture on text.
double mixture_perplexity(const std::vector<const NgramLm*>& components,
                          const std::vector<double>& weights,
                          const std::vector<std::vector<std::string>>& text);

std::vector<std::vector<std::string>> load_text(const std::string& path);

// ARPA text format; writing then reading then writing again reproduces
// the bytes exactly.
void save_arpa(const NgramLm& lm, const std::string& path);
NgramLm load_arpa(const std::string& path);

}  // namespace asrkit

#endif  // ASRKIT_LM_HPP
