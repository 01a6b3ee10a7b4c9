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

#ifndef ASRKIT_EVAL_HPP
#define ASRKIT_EVAL_HPP

#include <map>
#include <string>
#include <vector>

#include "asrkit/common.hpp"

namespace asrkit {

struct EditCounts {
  int hits = 0;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;

  int errors() const { return substitutions + deletions + insertions; }
  int reference_length() const { return hits + substitutions + deletions; }
  double wer() const;
};

// Levenshtein alignment; ties resolve hit > substitution > deletion >
// insertion during backtrace.
EditCounts align_words(const std::vector<std::string>& reference,
                       const std::vector<std::string>& hypothesis);

// Equivalence classes of word sequences; every member rewrites to the
// class representative (the lexicographically smallest member) by
// longest-match left-to-right replacement. Application is idempotent.
class Normalizer {
 public:
  // each class is a list of word-sequence members
  explicit Normalizer(
      const std::vector<std::vector<std::vector<std::string>>>& classes);

  std::vector<std::string> apply(const std::vector<std::string>& words) const;

 private:
  // member sequence -> representative sequence
  std::map<std::vector<std::string>, std::vector<std::string>> rules_;
  std::size_t max_len_ = 0;
};

// The built-in contraction/spelling classes; scoring applies them only
// when asked.
Normalizer default_normalizer();

// `alt1|alt2|...` per line, members split on whitespace
Normalizer load_normalizer(const std::string& path);

std::vector<std::string> case_fold(const std::vector<std::string>& words);

struct ScoreOptions {
  bool fold_case = true;
  bool normalize = false;  // apply the equivalence-class normalizer
  const Normalizer* normalizer = nullptr;  // default classes when null
};

struct ScoreReport {
  EditCounts total;
  std::map<std::string, EditCounts> per_utterance;

  double wer() const { return total.wer(); }
};

ScoreReport score_transcripts(
    const std::map<std::string, std::vector<std::string>>& reference,
    const std::map<std::string, std::vector<std::string>>& hypothesis,
    const ScoreOptions& options = {});

// .trn transcript format: `word word ... (utterance-id)` per line
std::map<std::string, std::vector<std::string>> load_trn(
    const std::string& path);
void save_trn(const std::map<std::string, std::vector<std::string>>& trans,
              const std::string& path);

}  // namespace asrkit

#endif  // ASRKIT_EVAL_HPP
