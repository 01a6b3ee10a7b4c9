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

#include <benchmark/benchmark.h>

#include <random>

#include "asrkit/search.hpp"

namespace {

using namespace asrkit;

AcousticModelSet random_model(int states, int dim, std::mt19937_64& rng) {
  AcousticModelSet model;
  std::uniform_real_distribution<double> mean(-3.0, 3.0);
  std::uniform_real_distribution<double> var(0.3, 1.5);
  for (int s = 0; s < states; ++s) {
    GaussianMixture mix;
    mix.weights = {1.0};
    mix.means = Matrix(1, dim);
    mix.variances = Matrix(1, dim);
    for (int d = 0; d < dim; ++d) {
      mix.means.at(0, d) = mean(rng);
      mix.variances.at(0, d) = var(rng);
    }
    model.mixtures.push_back(std::move(mix));
  }
  return model;
}

void BM_ViterbiAlign(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const int T = static_cast<int>(state.range(0));
  const int S = 30, dim = 13;
  const AcousticModelSet model = random_model(S, dim, rng);
  FeatureMatrix features;
  features.values = Matrix(T, dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < dim; ++d) features.values.at(t, d) = noise(rng);
  HmmChain chain(S);
  for (int i = 0; i < S; ++i) {
    chain[i].tied_state = i;
    chain[i].phone = "p";
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(viterbi_align(features, model, chain));
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_ViterbiAlign)->Arg(100)->Arg(500)->Arg(2000);

void BM_Decode(benchmark::State& state) {
  std::mt19937_64 rng(2);
  Lexicon lexicon;
  const std::vector<std::string> phones = {"aa", "ih", "k", "s", "t", "n"};
  for (int w = 0; w < 20; ++w) {
    std::vector<std::string> pron;
    std::uniform_int_distribution<int> len(1, 3), pick(0, 5);
    const int n = len(rng);
    for (int i = 0; i < n; ++i) pron.push_back(phones[pick(rng)]);
    lexicon.entries["w" + std::to_string(w)] = {pron};
  }
  lexicon.entries["sil"] = {{"sil"}};
  for (const auto& p : phones) lexicon.phoneme_inventory.insert(p);
  lexicon.phoneme_inventory.insert("sil");
  HmmTopology topology;
  const auto inventory = MonophoneInventory::from_lexicon(lexicon, topology);

  const int T = static_cast<int>(state.range(0));
  Matrix loglik(T, inventory.num_states());
  std::normal_distribution<double> noise(-3.0, 1.5);
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < inventory.num_states(); ++k)
      loglik.at(t, k) = noise(rng);

  std::vector<std::vector<std::string>> text;
  std::uniform_int_distribution<int> len(2, 6), pick(0, 19);
  for (int s = 0; s < 50; ++s) {
    std::vector<std::string> sent(len(rng));
    for (auto& w : sent) w = "w" + std::to_string(pick(rng));
    text.push_back(std::move(sent));
  }
  const NgramLm lm = estimate_kneser_ney(text, {3, 0.5});
  const NgramScorer scorer(lm);
  DecoderConfig config;
  config.beam = 120;
  for (auto _ : state)
    benchmark::DoNotOptimize(decode(loglik, lexicon, inventory.mapper(),
                                    topology, scorer, config));
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_Decode)->Arg(100)->Arg(300);

}  // namespace

BENCHMARK_MAIN();
