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

#include "asrkit/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "asrkit/common.hpp"

namespace asrkit {

namespace {

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream iss(s);
  while (std::getline(iss, field, delim)) out.push_back(field);
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

std::string subset_tag_name(SubsetTag tag) {
  return tag == SubsetTag::kClean ? "clean" : "other";
}

SubsetTag parse_subset_tag(const std::string& s) {
  if (s == "clean") return SubsetTag::kClean;
  if (s == "other") return SubsetTag::kOther;
  throw DataError("unknown subset tag: " + s);
}

std::size_t Utterance::transcript_chars() const {
  std::size_t n = 0;
  for (const auto& w : transcript) n += w.size();
  if (transcript.size() > 1) n += transcript.size() - 1;
  return n;
}

double CorpusManifest::total_duration() const {
  return std::accumulate(utterances.begin(), utterances.end(), 0.0,
                         [](double a, const Utterance& u) {
                           return a + u.duration;
                         });
}

CorpusManifest load_manifest(const std::string& path, bool validate_audio) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  CorpusManifest manifest;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 6)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 6 tab-separated fields, got " +
                      std::to_string(fields.size()));
    Utterance utt;
    utt.id = fields[0];
    utt.speaker_id = fields[1];
    utt.audio_path = fields[2];
    utt.subset = parse_subset_tag(fields[3]);
    try {
      utt.duration = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": bad duration field '" + fields[4] + "'");
    }
    if (utt.duration <= 0)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": duration must be positive");
    utt.transcript = split_ws(fields[5]);
    if (!seen.insert(utt.id).second)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": duplicate utterance id \"" + utt.id + "\"");
    if (validate_audio && !std::filesystem::exists(utt.audio_path))
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": missing audio file " + utt.audio_path);
    manifest.utterances.push_back(std::move(utt));
  }
  return manifest;
}

void save_manifest(const CorpusManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  for (const auto& u : manifest.utterances) {
    out << u.id << '\t' << u.speaker_id << '\t' << u.audio_path << '\t'
        << subset_tag_name(u.subset) << '\t' << u.duration << '\t';
    for (std::size_t i = 0; i < u.transcript.size(); ++i) {
      if (i) out << ' ';
      out << u.transcript[i];
    }
    out << '\n';
  }
}

const std::vector<std::vector<std::string>>& Lexicon::pronunciations(
    const std::string& word) const {
  auto it = entries.find(word);
  if (it == entries.end()) throw DataError("word not in lexicon: " + word);
  return it->second;
}

void Lexicon::validate() const {
  if (!phoneme_inventory.count(silence_symbol))
    throw DataError("silence symbol '" + silence_symbol +
                    "' not in phoneme inventory");
  for (const auto& [word, prons] : entries) {
    for (const auto& pron : prons) {
      if (pron.empty())
        throw DataError("empty pronunciation for word: " + word);
      for (const auto& ph : pron)
        if (!phoneme_inventory.count(ph))
          throw DataError("phoneme '" + ph + "' of word '" + word +
                          "' not in inventory");
    }
  }
}

Lexicon load_lexicon(const std::string& path,
                     const std::string& silence_symbol) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon: " + path);
  Lexicon lex;
  lex.silence_symbol = silence_symbol;
  lex.phoneme_inventory.insert(silence_symbol);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected `word<TAB>phones`");
    std::string word = line.substr(0, tab);
    auto phones = split_ws(line.substr(tab + 1));
    if (phones.empty())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": empty pronunciation for '" + word + "'");
    for (const auto& ph : phones) lex.phoneme_inventory.insert(ph);
    lex.entries[word].push_back(std::move(phones));
  }
  lex.validate();
  return lex;
}

void save_lexicon(const Lexicon& lexicon, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write lexicon: " + path);
  for (const auto& [word, prons] : lexicon.entries)
    for (const auto& pron : prons) {
      out << word << '\t';
      for (std::size_t i = 0; i < pron.size(); ++i) {
        if (i) out << ' ';
        out << pron[i];
      }
      out << '\n';
    }
}

void CurriculumPlan::validate() const {
  if (steps.empty()) throw DataError("curriculum plan has no steps");
  for (const auto& s : steps)
    if (s.data_fraction <= 0)
      throw DataError("curriculum step fractions must be positive");
  const auto& last = steps.back();
  if (!last.subset_filter.empty() || last.max_mean_chars)
    throw DataError("final curriculum step must have no filters");
}

double CurriculumPlan::total_fraction() const {
  double t = 0;
  for (const auto& s : steps) t += s.data_fraction;
  return t;
}

CurriculumPlan default_curriculum_plan() {
  CurriculumPlan plan;
  plan.steps.push_back({0.25, {SubsetTag::kClean}, 50});
  plan.steps.push_back({0.25, {SubsetTag::kClean}, 75});
  plan.steps.push_back({0.5, {SubsetTag::kClean}, std::nullopt});
  // "from now on, take everything": the open-ended tail step
  plan.steps.push_back({1.0, {}, std::nullopt});
  return plan;
}

CorpusManifest curriculum_select(const CorpusManifest& manifest,
                                 const CurriculumPlan& plan, double progress,
                                 std::uint64_t seed) {
  plan.validate();
  if (progress < 0 || progress > plan.total_fraction())
    throw DataError("curriculum progress " + std::to_string(progress) +
                    " outside plan (total fraction " +
                    std::to_string(plan.total_fraction()) + ")");

  // Locate the step: step s covers [cum_{s-1}, cum_s), last step closed.
  std::size_t step_idx = plan.steps.size() - 1;
  double cum = 0;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    cum += plan.steps[i].data_fraction;
    if (progress < cum) {
      step_idx = i;
      break;
    }
  }
  const CurriculumStep& step = plan.steps[step_idx];

  CorpusManifest out;
  for (const auto& u : manifest.utterances)
    if (step.subset_filter.empty() || step.subset_filter.count(u.subset))
      out.utterances.push_back(u);

  if (step.max_mean_chars && !out.utterances.empty()) {
    // Seeded shuffle fixes the tie order among equal transcript lengths,
    // then the longest transcripts are removed until the mean bound holds.
    std::vector<std::size_t> order(out.utterances.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> shuffled_pos(out.utterances.size());
    for (std::size_t i = 0; i < order.size(); ++i) shuffled_pos[order[i]] = i;

    std::vector<std::size_t> removal(out.utterances.size());
    std::iota(removal.begin(), removal.end(), 0);
    std::stable_sort(removal.begin(), removal.end(),
                     [&](std::size_t a, std::size_t b) {
                       auto la = out.utterances[a].transcript_chars();
                       auto lb = out.utterances[b].transcript_chars();
                       if (la != lb) return la > lb;
                       return shuffled_pos[a] < shuffled_pos[b];
                     });

    double total_chars = 0;
    for (const auto& u : out.utterances) total_chars += u.transcript_chars();
    std::size_t kept = out.utterances.size();
    std::set<std::size_t> removed;
    for (std::size_t i = 0; i < removal.size() && kept > 0; ++i) {
      if (total_chars / kept <= *step.max_mean_chars) break;
      total_chars -= out.utterances[removal[i]].transcript_chars();
      removed.insert(removal[i]);
      --kept;
    }
    CorpusManifest filtered;
    for (std::size_t i = 0; i < out.utterances.size(); ++i)
      if (!removed.count(i)) filtered.utterances.push_back(out.utterances[i]);
    out = std::move(filtered);
  }
  return out;
}

}  // namespace asrkit
