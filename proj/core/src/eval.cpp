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

#include "asrkit/eval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace asrkit {

double EditCounts::wer() const {
  if (reference_length() == 0)
    throw DataError("WER undefined for an empty reference");
  return static_cast<double>(errors()) /
         static_cast<double>(reference_length());
}

EditCounts align_words(const std::vector<std::string>& reference,
                       const std::vector<std::string>& hypothesis) {
  const std::size_t r = reference.size(), h = hypothesis.size();
  std::vector<std::vector<int>> d(r + 1, std::vector<int>(h + 1));
  for (std::size_t i = 0; i <= r; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= h; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= r; ++i)
    for (std::size_t j = 1; j <= h; ++j) {
      const int sub =
          d[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  EditCounts counts;
  std::size_t i = r, j = h;
  while (i > 0 || j > 0) {
    // preference order on ties: hit, substitution, deletion, insertion
    if (i > 0 && j > 0 && reference[i - 1] == hypothesis[j - 1] &&
        d[i][j] == d[i - 1][j - 1]) {
      ++counts.hits;
      --i;
      --j;
    } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1) {
      ++counts.substitutions;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

Normalizer::Normalizer(
    const std::vector<std::vector<std::vector<std::string>>>& classes) {
  for (const auto& cls : classes) {
    if (cls.size() < 2)
      throw DataError("normalization class needs at least two members");
    auto join = [](const std::vector<std::string>& seq) {
      std::string s;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) s += ' ';
        s += seq[i];
      }
      return s;
    };
    const std::vector<std::string>* rep = &cls.front();
    for (const auto& m : cls)
      if (join(m) < join(*rep)) rep = &m;
    for (const auto& m : cls) {
      if (m.empty()) throw DataError("empty normalization class member");
      auto [it, inserted] = rules_.emplace(m, *rep);
      if (!inserted && it->second != *rep)
        throw DataError("normalization member '" + join(m) +
                        "' appears in two classes");
      max_len_ = std::max(max_len_, m.size());
    }
  }
}

std::vector<std::string> Normalizer::apply(
    const std::vector<std::string>& words) const {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < words.size()) {
    bool matched = false;
    const std::size_t longest = std::min(max_len_, words.size() - i);
    for (std::size_t len = longest; len >= 1 && !matched; --len) {
      std::vector<std::string> cand(words.begin() + i,
                                    words.begin() + i + len);
      auto it = rules_.find(cand);
      if (it != rules_.end()) {
        out.insert(out.end(), it->second.begin(), it->second.end());
        i += len;
        matched = true;
      }
    }
    if (!matched) out.push_back(words[i++]);
  }
  return out;
}

Normalizer default_normalizer() {
  return Normalizer({
      {{"i", "am"}, {"i'm"}},
      {{"color"}, {"colour"}},
      {{"oh"}, {"o"}},
      {{"tyrannise"}, {"tyrannize"}},
  });
}

Normalizer load_normalizer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open normalization file: " + path);
  std::vector<std::vector<std::vector<std::string>>> classes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::vector<std::string>> cls;
    std::istringstream ss(line);
    std::string alt;
    while (std::getline(ss, alt, '|')) {
      std::istringstream ws(alt);
      std::vector<std::string> member;
      std::string w;
      while (ws >> w) member.push_back(w);
      if (member.empty())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": empty alternative");
      cls.push_back(std::move(member));
    }
    classes.push_back(std::move(cls));
  }
  return Normalizer(classes);
}

std::vector<std::string> case_fold(const std::vector<std::string>& words) {
  std::vector<std::string> out = words;
  for (auto& w : out)
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return std::tolower(c); });
  return out;
}

ScoreReport score_transcripts(
    const std::map<std::string, std::vector<std::string>>& reference,
    const std::map<std::string, std::vector<std::string>>& hypothesis,
    const ScoreOptions& options) {
  static const Normalizer builtin = default_normalizer();
  const Normalizer* norm =
      options.normalizer ? options.normalizer : &builtin;
  ScoreReport report;
  for (const auto& [utt, ref] : reference) {
    auto it = hypothesis.find(utt);
    if (it == hypothesis.end())
      throw DataError("missing hypothesis for utterance " + utt);
    std::vector<std::string> r = ref, h = it->second;
    if (options.fold_case) {
      r = case_fold(r);
      h = case_fold(h);
    }
    if (options.normalize) {
      r = norm->apply(r);
      h = norm->apply(h);
    }
    const EditCounts counts = align_words(r, h);
    report.per_utterance[utt] = counts;
    report.total.hits += counts.hits;
    report.total.substitutions += counts.substitutions;
    report.total.deletions += counts.deletions;
    report.total.insertions += counts.insertions;
  }
  for (const auto& [utt, hyp] : hypothesis)
    if (!reference.count(utt))
      throw DataError("hypothesis for unknown utterance " + utt);
  return report;
}

std::map<std::string, std::vector<std::string>> load_trn(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open transcript file: " + path);
  std::map<std::string, std::vector<std::string>> trans;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto open = line.rfind('(');
    const auto close = line.rfind(')');
    if (open == std::string::npos || close == std::string::npos ||
        close < open)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": missing (utterance-id)");
    const std::string utt = line.substr(open + 1, close - open - 1);
    if (utt.empty())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": empty utterance id");
    std::istringstream ss(line.substr(0, open));
    std::vector<std::string> words;
    std::string w;
    while (ss >> w) words.push_back(w);
    if (!trans.emplace(utt, std::move(words)).second)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": duplicate utterance id " + utt);
  }
  return trans;
}

void save_trn(const std::map<std::string, std::vector<std::string>>& trans,
              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write transcript file: " + path);
  for (const auto& [utt, words] : trans) {
    for (const auto& w : words) out << w << ' ';
    out << '(' << utt << ")\n";
  }
}

}  // namespace asrkit
