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

#ifndef ASRKIT_BPE_HPP
#define ASRKIT_BPE_HPP

#include <map>
#include <string>
#include <vector>

namespace asrkit {

inline constexpr const char* kWordEnd = "</w>";

struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;  // in learned order

  // Splits a word into learned subword units; the last unit carries </w>.
  std::vector<std::string> segment_word(const std::string& word) const;
  std::vector<std::string> segment(const std::vector<std::string>& words) const;
};

// Greedy pair merging over word frequencies. The most frequent adjacent
// pair wins each round, ties by lexicographic pair order; learning stops
// early once the best pair occurs fewer than 2 times.
BpeModel learn_bpe(const std::map<std::string, std::size_t>& word_counts,
                   int num_merges);
BpeModel learn_bpe(const std::vector<std::vector<std::string>>& text,
                   int num_merges);

// Inverse of segmentation: joins units and splits at </w> markers.
std::vector<std::string> bpe_decode(const std::vector<std::string>& units);

// Merge list file, one `left right` pair per line.
void save_bpe(const BpeModel& model, const std::string& path);
BpeModel load_bpe(const std::string& path);

}  // namespace asrkit

#endif  // ASRKIT_BPE_HPP
