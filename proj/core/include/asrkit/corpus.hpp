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

#ifndef ASRKIT_CORPUS_HPP
#define ASRKIT_CORPUS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace asrkit {

enum class SubsetTag { kClean, kOther };

std::string subset_tag_name(SubsetTag tag);
SubsetTag parse_subset_tag(const std::string& s);

struct Utterance {
  std::string id;
  std::string speaker_id;
  std::string audio_path;
  std::vector<std::string> transcript;
  SubsetTag subset = SubsetTag::kClean;
  double duration = 0.0;  // seconds

  // total characters of the transcript, words joined by single spaces
  std::size_t transcript_chars() const;
};

struct CorpusManifest {
  std::vector<Utterance> utterances;

  double total_duration() const;
};

// Manifest format: one utterance per line,
//   id <TAB> speaker <TAB> audio_path <TAB> subset <TAB> duration <TAB> transcript
// Malformed lines and duplicate ids are DataErrors naming the line / id.
CorpusManifest load_manifest(const std::string& path,
                             bool validate_audio = false);
void save_manifest(const CorpusManifest& manifest, const std::string& path);

struct Lexicon {
  // word -> pronunciations, each a phoneme sequence
  std::map<std::string, std::vector<std::vector<std::string>>> entries;
  std::set<std::string> phoneme_inventory;
  std::string silence_symbol = "sil";

  const std::vector<std::vector<std::string>>& pronunciations(
      const std::string& word) const;
  void validate() const;
};

// Lexicon file: `word<TAB>phone phone ...`, multiple lines per word allowed.
Lexicon load_lexicon(const std::string& path,
                     const std::string& silence_symbol = "sil");
void save_lexicon(const Lexicon& lexicon, const std::string& path);

struct CurriculumStep {
  double data_fraction = 1.0;  // fraction of total planned training passes
  std::set<SubsetTag> subset_filter;  // empty = no filter
  std::optional<int> max_mean_chars;
};

struct CurriculumPlan {
  std::vector<CurriculumStep> steps;

  void validate() const;
  double total_fraction() const;
};

// The 4-step schedule: 25% clean/<=50 chars, 25% clean/<=75, 50% clean,
// then everything.
CurriculumPlan default_curriculum_plan();

// Selects the training subset for the plan step containing `progress`.
// Filtering is deterministic given the seed: seeded shuffle, then greedy
// removal of longest transcripts until the mean character bound holds.
CorpusManifest curriculum_select(const CorpusManifest& manifest,
                                 const CurriculumPlan& plan, double progress,
                                 std::uint64_t seed);

}  // namespace asrkit

#endif  // ASRKIT_CORPUS_HPP
