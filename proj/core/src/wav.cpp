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

#include "asrkit/wav.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "asrkit/common.hpp"

namespace asrkit {

namespace {

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
               char((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  char b[2] = {char(v & 0xff), char((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

Waveform read_audio(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file: " + path);

  char tag[5] = {0};
  in.read(tag, 4);
  if (std::strncmp(tag, "RIFF", 4) != 0)
    throw DataError(path + ": not a RIFF/WAVE file");
  read_u32(in);  // riff size
  in.read(tag, 4);
  if (std::strncmp(tag, "WAVE", 4) != 0)
    throw DataError(path + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  Waveform wav;

  while (in.read(tag, 4)) {
    std::uint32_t chunk_size = read_u32(in);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (chunk_size > 16) in.ignore(chunk_size - 16);
      have_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw DataError(path + ": data chunk before fmt chunk");
      if (format != 1)
        throw DataError(path + ": unsupported format (compressed audio)");
      if (channels != 1)
        throw DataError(path + ": unsupported format (multi-channel audio)");
      if (bits != 16)
        throw DataError(path + ": unsupported format (not 16-bit PCM)");
      std::uint32_t n = chunk_size / 2;
      wav.samples.resize(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        std::uint16_t raw = read_u16(in);
        wav.samples[i] = static_cast<std::int16_t>(raw) / 32768.0;
      }
      wav.sample_rate = static_cast<int>(rate);
      return wav;
    } else {
      in.ignore(chunk_size + (chunk_size & 1));
    }
  }
  throw DataError(path + ": no data chunk found");
}

void write_wav(const std::string& path, const std::vector<std::int16_t>& samples,
               int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write audio file: " + path);
  std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(sample_rate));
  write_u32(out, static_cast<std::uint32_t>(sample_rate * 2));
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (std::int16_t s : samples) write_u16(out, static_cast<std::uint16_t>(s));
}

void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate) {
  std::vector<std::int16_t> pcm(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double v = std::clamp(samples[i], -1.0, 32767.0 / 32768.0);
    pcm[i] = static_cast<std::int16_t>(std::lround(v * 32768.0));
  }
  write_wav(path, pcm, sample_rate);
}

}  // namespace asrkit
