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

#include "asrkit/bpe.hpp"

#include <fstream>
#include <sstream>

#include "asrkit/common.hpp"

namespace asrkit {

namespace {

std::vector<std::string> initial_units(const std::string& word) {
  std::vector<std::string> units;
  for (char c : word) units.emplace_back(1, c);
  if (units.empty()) throw DataError("cannot segment empty word");
  units.back() += kWordEnd;
  return units;
}

void apply_merge(std::vector<std::string>& units,
                 const std::pair<std::string, std::string>& merge) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i + 1 < units.size() && units[i] == merge.first &&
        units[i + 1] == merge.second) {
      out.push_back(units[i] + units[i + 1]);
      ++i;
    } else {
      out.push_back(units[i]);
    }
  }
  units = std::move(out);
}

}  // namespace

std::vector<std::string> BpeModel::segment_word(const std::string& word) const {
  std::vector<std::string> units = initial_units(word);
  for (const auto& merge : merges) apply_merge(units, merge);
  return units;
}

std::vector<std::string> BpeModel::segment(
    const std::vector<std::string>& words) const {
  std::vector<std::string> out;
  for (const auto& w : words) {
    auto units = segment_word(w);
    out.insert(out.end(), units.begin(), units.end());
  }
  return out;
}

BpeModel learn_bpe(const std::map<std::string, std::size_t>& word_counts,
                   int num_merges) {
  BpeModel model;
  std::vector<std::pair<std::vector<std::string>, std::size_t>> words;
  for (const auto& [w, c] : word_counts) words.push_back({initial_units(w), c});

  for (int m = 0; m < num_merges; ++m) {
    std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
    for (const auto& [units, count] : words)
      for (std::size_t i = 0; i + 1 < units.size(); ++i)
        pair_counts[{units[i], units[i + 1]}] += count;
    // highest frequency wins; the map order gives the lexicographic
    // tie-break for free
    std::pair<std::string, std::string> best;
    std::size_t best_count = 0;
    for (const auto& [pair, count] : pair_counts)
      if (count > best_count) {
        best = pair;
        best_count = count;
      }
    if (best_count < 2) break;
    model.merges.push_back(best);
    for (auto& [units, count] : words) apply_merge(units, best);
  }
  return model;
}

BpeModel learn_bpe(const std::vector<std::vector<std::string>>& text,
                   int num_merges) {
  std::map<std::string, std::size_t> counts;
  for (const auto& sent : text)
    for (const auto& w : sent) counts[w] += 1;
  return learn_bpe(counts, num_merges);
}

std::vector<std::string> bpe_decode(const std::vector<std::string>& units) {
  std::vector<std::string> words;
  std::string current;
  const std::string marker = kWordEnd;
  for (const auto& u : units) {
    if (u.size() >= marker.size() &&
        u.compare(u.size() - marker.size(), marker.size(), marker) == 0) {
      current += u.substr(0, u.size() - marker.size());
      words.push_back(current);
      current.clear();
    } else {
      current += u;
    }
  }
  if (!current.empty()) words.push_back(current);
  return words;
}

void save_bpe(const BpeModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write BPE model: " + path);
  for (const auto& [a, b] : model.merges) out << a << ' ' << b << '\n';
}

BpeModel load_bpe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open BPE model: " + path);
  BpeModel model;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, extra;
    if (!(ss >> a >> b) || (ss >> extra))
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected two tokens per merge line");
    model.merges.push_back({a, b});
  }
  return model;
}

}  // namespace asrkit
