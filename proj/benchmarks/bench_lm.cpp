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
#include <string>
#include <vector>

#include "asrkit/lm.hpp"

namespace {

std::vector<std::vector<std::string>> random_text(int sentences,
                                                  int vocab_size,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(3, 15), pick(0, vocab_size - 1);
  std::vector<std::vector<std::string>> text;
  for (int s = 0; s < sentences; ++s) {
    std::vector<std::string> sent(len(rng));
    for (auto& w : sent) w = "w" + std::to_string(pick(rng));
    text.push_back(std::move(sent));
  }
  return text;
}

void BM_KneserNeyEstimate(benchmark::State& state) {
  const auto text = random_text(static_cast<int>(state.range(0)), 200, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(asrkit::estimate_kneser_ney(text, {4, 0.5}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KneserNeyEstimate)->Arg(100)->Arg(1000);

void BM_Perplexity(benchmark::State& state) {
  const auto train = random_text(1000, 200, 1);
  const auto dev = random_text(100, 200, 2);
  const auto lm = asrkit::estimate_kneser_ney(train, {4, 0.5});
  for (auto _ : state)
    benchmark::DoNotOptimize(asrkit::perplexity(lm, dev));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_Perplexity);

void BM_InterpolationOptimize(benchmark::State& state) {
  const auto lm_a = asrkit::estimate_kneser_ney(random_text(300, 100, 1),
                                                {3, 0.5});
  const auto lm_b = asrkit::estimate_kneser_ney(random_text(300, 100, 2),
                                                {3, 0.5});
  const auto dev = random_text(50, 100, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        asrkit::optimize_interpolation({&lm_a, &lm_b}, dev, 100));
}
BENCHMARK(BM_InterpolationOptimize);

}  // namespace

BENCHMARK_MAIN();
