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

#include <cmath>
#include <random>

#include "asrkit/frontend.hpp"

namespace {

asrkit::Waveform make_waveform(double seconds) {
  asrkit::Waveform wav;
  wav.sample_rate = 16000;
  wav.samples.resize(static_cast<std::size_t>(seconds * wav.sample_rate));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (std::size_t i = 0; i < wav.samples.size(); ++i)
    wav.samples[i] =
        0.4 * std::sin(2 * M_PI * 440.0 * i / wav.sample_rate) + noise(rng);
  return wav;
}

void BM_Mfcc(benchmark::State& state) {
  const auto wav = make_waveform(static_cast<double>(state.range(0)));
  const asrkit::FrontendConfig config;
  for (auto _ : state)
    benchmark::DoNotOptimize(asrkit::mfcc(wav, config));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 100);
}
BENCHMARK(BM_Mfcc)->Arg(1)->Arg(5)->Arg(20);

void BM_MfccWithDerivatives(benchmark::State& state) {
  const auto wav = make_waveform(5.0);
  const asrkit::FrontendConfig config;
  for (auto _ : state) {
    auto feats = asrkit::mfcc(wav, config);
    benchmark::DoNotOptimize(asrkit::add_derivatives(
        feats, asrkit::frame_log_energy(wav, config)));
  }
}
BENCHMARK(BM_MfccWithDerivatives);

void BM_Splice(benchmark::State& state) {
  const auto wav = make_waveform(5.0);
  const asrkit::FrontendConfig config;
  const auto feats = asrkit::mfcc(wav, config);
  for (auto _ : state)
    benchmark::DoNotOptimize(asrkit::splice(feats, 4));
}
BENCHMARK(BM_Splice);

}  // namespace

BENCHMARK_MAIN();
