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

#ifndef ASRKIT_TESTS_TESTUTIL_HPP
#define ASRKIT_TESTS_TESTUTIL_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "asrkit/corpus.hpp"
#include "asrkit/gmm.hpp"
#include "asrkit/lattice.hpp"
#include "asrkit/wav.hpp"

namespace testutil {

class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 rng(std::random_device{}());
    path_ = base / ("asrkit-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string path() const { return path_.string(); }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

// --- synthetic audio corpus -------------------------------------------------
//
// Three "phones" with well-separated spectra: ax = 500 Hz, ow = 2500 Hz,
// ih = 1500 Hz tones; silence is near-zero noise. Words: "da" = ax,
// "bu" = ih, "dabu" = ax ow ih. Word sequences avoid repeating a phone
// across a word boundary, so every phone string has exactly one parse and
// end-to-end recovery at 0% WER is well-posed. The generator is the
// oracle for that recovery.

struct SyntheticCorpus {
  asrkit::CorpusManifest manifest;
  std::string manifest_path;
  std::string lexicon_path;
  std::string lm_text_path;
};

inline std::vector<double> tone_segment(double freq, int samples,
                                        int sample_rate, double amplitude,
                                        std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 0.003);
  std::vector<double> out(samples);
  for (int i = 0; i < samples; ++i)
    out[i] = amplitude * std::sin(2 * M_PI * freq * i / sample_rate) +
             noise(rng);
  return out;
}

inline SyntheticCorpus make_synthetic_corpus(const TempDir& dir,
                                             int num_utterances,
                                             std::uint64_t seed = 7) {
  const int sample_rate = 8000;
  const int phone_samples = 800;  // 100 ms
  const int sil_samples = 640;    // 80 ms
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> word_count(2, 3);
  // successors whose first phone differs from the predecessor's last phone
  const std::vector<std::vector<int>> next_words = {{1}, {0, 2}, {0, 2}};

  const std::vector<std::vector<std::string>> word_phones = {
      {"ax"}, {"ih"}, {"ax", "ow", "ih"}};
  const std::vector<std::string> word_names = {"da", "bu", "dabu"};
  auto phone_freq = [](const std::string& p) {
    if (p == "ax") return 500.0;
    if (p == "ow") return 2500.0;
    return 1500.0;
  };

  SyntheticCorpus corpus;
  std::string lm_text;
  for (int u = 0; u < num_utterances; ++u) {
    const int n = word_count(rng);
    std::vector<std::string> words;
    std::vector<double> samples;
    std::normal_distribution<double> sil(0.0, 0.003);
    for (int i = 0; i < sil_samples; ++i) samples.push_back(sil(rng));
    int pick = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int w = 0; w < n; ++w) {
      if (w > 0) {
        const auto& allowed = next_words[pick];
        pick = allowed[std::uniform_int_distribution<std::size_t>(
            0, allowed.size() - 1)(rng)];
      }
      words.push_back(word_names[pick]);
      for (const auto& p : word_phones[pick]) {
        auto seg =
            tone_segment(phone_freq(p), phone_samples, sample_rate, 0.5, rng);
        samples.insert(samples.end(), seg.begin(), seg.end());
      }
    }
    for (int i = 0; i < sil_samples; ++i) samples.push_back(sil(rng));

    asrkit::Utterance utt;
    utt.id = "utt" + std::to_string(u);
    utt.speaker_id = "spk" + std::to_string(u % 3);
    utt.audio_path = dir.file(utt.id + ".wav");
    utt.transcript = words;
    utt.subset = u % 4 == 3 ? asrkit::SubsetTag::kOther
                            : asrkit::SubsetTag::kClean;
    utt.duration = static_cast<double>(samples.size()) / sample_rate;
    asrkit::write_wav(utt.audio_path, samples, sample_rate);
    corpus.manifest.utterances.push_back(utt);

    for (std::size_t i = 0; i < words.size(); ++i)
      lm_text += (i ? " " : "") + words[i];
    lm_text += "\n";
  }

  corpus.manifest_path = dir.file("corpus.tsv");
  asrkit::save_manifest(corpus.manifest, corpus.manifest_path);
  corpus.lexicon_path = dir.file("lexicon.txt");
  write_text(corpus.lexicon_path,
             "da\tax\nbu\tih\ndabu\tax ow ih\nsil\tsil\n");
  corpus.lm_text_path = dir.file("lm.txt");
  write_text(corpus.lm_text_path, lm_text);
  return corpus;
}

// --- feature-domain HMM fixtures --------------------------------------------

// random diagonal-Gaussian model over `num_states` states
inline asrkit::AcousticModelSet random_model(int num_states, int dim,
                                             std::mt19937_64& rng,
                                             int components = 1) {
  asrkit::AcousticModelSet model;
  std::uniform_real_distribution<double> mean_dist(-3.0, 3.0);
  std::uniform_real_distribution<double> var_dist(0.3, 1.5);
  for (int s = 0; s < num_states; ++s) {
    asrkit::GaussianMixture mix;
    mix.weights.assign(components, 1.0 / components);
    mix.means = asrkit::Matrix(components, dim);
    mix.variances = asrkit::Matrix(components, dim);
    for (int m = 0; m < components; ++m)
      for (int d = 0; d < dim; ++d) {
        mix.means.at(m, d) = mean_dist(rng);
        mix.variances.at(m, d) = var_dist(rng);
      }
    model.mixtures.push_back(std::move(mix));
  }
  return model;
}

inline asrkit::FeatureMatrix random_features(int frames, int dim,
                                             std::mt19937_64& rng) {
  asrkit::FeatureMatrix fm;
  fm.values = asrkit::Matrix(frames, dim);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int t = 0; t < frames; ++t)
    for (int d = 0; d < dim; ++d) fm.values.at(t, d) = dist(rng);
  return fm;
}

// --- lattice fixtures -------------------------------------------------------

// layered random DAG; every node lies on a start->end path
inline asrkit::Lattice random_lattice(std::mt19937_64& rng, int layers = 4,
                                      int width = 2,
                                      const std::vector<std::string>& vocab = {
                                          "a", "b", "c"}) {
  asrkit::Lattice lat;
  lat.utterance_id = "lat";
  std::uniform_real_distribution<double> am(-8.0, -1.0);
  std::uniform_real_distribution<double> lm(-2.0, -0.2);
  std::uniform_int_distribution<int> word(0, static_cast<int>(vocab.size()) -
                                                 1);
  std::vector<std::vector<int>> layer_nodes(layers + 1);
  int id = 0;
  for (int l = 0; l <= layers; ++l) {
    const int count = (l == 0 || l == layers) ? 1 : width;
    for (int i = 0; i < count; ++i) {
      lat.nodes.push_back({id, l});
      layer_nodes[l].push_back(id++);
    }
  }
  lat.start = layer_nodes[0][0];
  lat.end = layer_nodes[layers][0];
  for (int l = 0; l < layers; ++l)
    for (int from : layer_nodes[l])
      for (int to : layer_nodes[l + 1]) {
        asrkit::LatticeArc arc;
        arc.from = from;
        arc.to = to;
        arc.word = vocab[word(rng)];
        arc.am = am(rng);
        arc.lm = lm(rng);
        arc.states = {0};  // one frame per layer
        lat.arcs.push_back(arc);
      }
  return lat;
}

// all complete paths as arc-index sequences (exponential; fixtures only)
inline void enumerate_paths_rec(const asrkit::Lattice& lat,
                                const std::vector<std::vector<int>>& out_arcs,
                                int node, std::vector<int>& prefix,
                                std::vector<std::vector<int>>& paths) {
  if (node == lat.end) {
    paths.push_back(prefix);
    return;
  }
  for (int ai : out_arcs[node]) {
    prefix.push_back(ai);
    enumerate_paths_rec(lat, out_arcs, lat.arcs[ai].to, prefix, paths);
    prefix.pop_back();
  }
}

inline std::vector<std::vector<int>> enumerate_paths(
    const asrkit::Lattice& lat) {
  std::vector<std::vector<int>> paths;
  std::vector<int> prefix;
  enumerate_paths_rec(lat, lat.arcs_from(), lat.start, prefix, paths);
  return paths;
}

inline double path_weight(const asrkit::Lattice& lat,
                          const std::vector<int>& path,
                          const asrkit::LatticeScales& scales) {
  double w = 0;
  for (int ai : path) w += asrkit::arc_weight(lat.arcs[ai], scales);
  return w;
}

inline std::vector<std::string> path_words(const asrkit::Lattice& lat,
                                           const std::vector<int>& path) {
  std::vector<std::string> words;
  for (int ai : path)
    if (lat.arcs[ai].word != asrkit::kEpsilonWord)
      words.push_back(lat.arcs[ai].word);
  return words;
}

}  // namespace testutil

#endif  // ASRKIT_TESTS_TESTUTIL_HPP
