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

#ifndef ASRKIT_WAV_HPP
#define ASRKIT_WAV_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace asrkit {

struct Waveform {
  std::vector<double> samples;  // scaled to [-1, 1)
  int sample_rate = 0;

  double duration() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

// Linear-PCM 16-bit mono WAV only; anything else is a DataError.
Waveform read_audio(const std::string& path);

// Writer used by fixtures and the synthetic-corpus generator.
void write_wav(const std::string& path, const std::vector<std::int16_t>& samples,
               int sample_rate);
void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate);

}  // namespace asrkit

#endif  // ASRKIT_WAV_HPP
