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

#include "asrkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "asrkit/bpe.hpp"
#include "asrkit/lattice.hpp"
#include "asrkit/lm.hpp"
#include "asrkit/search.hpp"
#include "asrkit/seqtrain.hpp"
#include "asrkit/tying.hpp"

namespace asrkit {

namespace {

namespace fs = std::filesystem;

// manifest + resolved-config bookkeeping around one pipeline step
bool begin_step(const std::string& name,
                const std::vector<std::string>& inputs,
                const std::vector<std::string>& outputs, const Config& config,
                const StepOptions& options) {
  const std::string manifest_path = outputs.front() + ".step";
  const StepManifest expected = make_manifest(name, inputs, config, outputs);
  if (!options.force && step_up_to_date(manifest_path, expected)) {
    if (!options.quiet)
      std::cerr << name << ": outputs up to date, skipping\n";
    return false;
  }
  return true;
}

void end_step(const std::string& name,
              const std::vector<std::string>& inputs,
              const std::vector<std::string>& outputs, const Config& config) {
  save_config(config, outputs.front() + ".config");
  save_manifest(make_manifest(name, inputs, config, outputs),
                outputs.front() + ".step");
}

FrontendConfig frontend_config(const Config& config) {
  FrontendConfig fc;
  fc.window_ms = config.get_double("frontend.window_ms", fc.window_ms);
  fc.shift_ms = config.get_double("frontend.shift_ms", fc.shift_ms);
  fc.preemphasis = config.get_double("frontend.preemphasis", fc.preemphasis);
  fc.num_mel_filters =
      config.get_int("frontend.num_mel_filters", fc.num_mel_filters);
  fc.num_cepstra = config.get_int("frontend.num_cepstra", fc.num_cepstra);
  fc.mean_normalize =
      config.get_bool("frontend.mean_normalize", fc.mean_normalize);
  return fc;
}

HmmTopology topology_config(const Config& config) {
  HmmTopology topo;
  topo.states_per_phone =
      config.get_int("hmm.states_per_phone", topo.states_per_phone);
  topo.silence_states =
      config.get_int("hmm.silence_states", topo.silence_states);
  topo.speech_loop = config.get_double("hmm.speech_loop", topo.speech_loop);
  topo.speech_forward =
      config.get_double("hmm.speech_forward", topo.speech_forward);
  topo.silence_loop = config.get_double("hmm.silence_loop", topo.silence_loop);
  topo.silence_forward =
      config.get_double("hmm.silence_forward", topo.silence_forward);
  return topo;
}

DecoderConfig decoder_config(const Config& config) {
  DecoderConfig dc;
  dc.lm_scale = config.get_double("decoder.lm_scale", dc.lm_scale);
  dc.word_insertion_penalty =
      config.get_double("decoder.word_penalty", dc.word_insertion_penalty);
  dc.beam = config.get_double("decoder.beam", dc.beam);
  dc.max_active = config.get_int("decoder.max_active", dc.max_active);
  dc.lattice_density =
      config.get_int("decoder.lattice_density", dc.lattice_density);
  dc.allow_silence =
      config.get_bool("decoder.allow_silence", dc.allow_silence);
  return dc;
}

// static -> derivatives -> optional splice/LDA for one waveform
FeatureMatrix build_features(const Waveform& wav, const FrontendConfig& fc,
                             const std::string& kind,
                             const LdaTransform* lda) {
  FeatureMatrix feats = mfcc(wav, fc);
  if (kind == "static") return feats;
  if (kind == "deriv")
    return add_derivatives(feats, frame_log_energy(wav, fc));
  if (kind == "spliced") return splice(feats);
  if (kind == "lda") {
    if (!lda) throw DataError("feature kind lda needs features.lda");
    return apply_lda(*lda, splice(feats));
  }
  throw DataError("unknown feature kind: " + kind);
}

struct LoadedArchive {
  std::vector<std::string> ids;
  std::vector<FeatureMatrix> features;
};

LoadedArchive load_archive(const std::string& path) {
  LoadedArchive archive;
  for (auto& [id, fm] : read_feature_archive(path)) {
    archive.ids.push_back(id);
    archive.features.push_back(std::move(fm));
  }
  return archive;
}

// alignment map reordered to follow an id list
std::vector<Alignment> ordered_alignments(
    const std::map<std::string, Alignment>& by_utt,
    const std::vector<std::string>& ids) {
  std::vector<Alignment> out;
  for (const auto& id : ids) {
    auto it = by_utt.find(id);
    if (it == by_utt.end())
      throw DataError("no alignment for utterance " + id);
    out.push_back(it->second);
  }
  return out;
}

std::map<std::string, const Utterance*> utterances_by_id(
    const CorpusManifest& manifest) {
  std::map<std::string, const Utterance*> by_id;
  for (const auto& utt : manifest.utterances) by_id[utt.id] = &utt;
  return by_id;
}

StateMapper mapper_for(const std::string& tree_path, const Lexicon& lexicon,
                       const HmmTopology& topology, DecisionTree* tree_out,
                       int* num_states) {
  if (tree_path.empty()) {
    const auto inventory = MonophoneInventory::from_lexicon(lexicon, topology);
    if (num_states) *num_states = inventory.num_states();
    return inventory.mapper();
  }
  *tree_out = load_tree(tree_path);
  if (num_states)
    *num_states = tree_out->leaf_count + topology.silence_states;
  return tree_mapper(*tree_out, lexicon.silence_symbol,
                     topology.silence_states);
}

Matrix gmm_loglik(const AcousticModelSet& model, const FeatureMatrix& feats) {
  Matrix loglik(feats.frames(), model.label_inventory());
  for (std::size_t t = 0; t < feats.frames(); ++t)
    for (std::size_t s = 0; s < model.label_inventory(); ++s)
      loglik.at(t, s) =
          score_frame(model, static_cast<int>(s), feats.values.row(t));
  return loglik;
}

NetworkConfig network_config(const Config& config, int input_dim,
                             int output_dim) {
  NetworkConfig nc;
  nc.layer_type =
      parse_layer_type(config.get_string("nn.layer_type", "feedforward-tanh"));
  nc.num_layers = config.get_int("nn.num_layers", nc.num_layers);
  nc.hidden_units = config.get_int("nn.hidden_units", nc.hidden_units);
  nc.dropout_rate = config.get_double("nn.dropout", nc.dropout_rate);
  nc.l2_coeff = config.get_double("nn.l2", nc.l2_coeff);
  nc.gradient_noise_variance =
      config.get_double("nn.gradient_noise", nc.gradient_noise_variance);
  nc.input_dim = input_dim;
  nc.output_dim = output_dim;
  return nc;
}

TrainingSchedule schedule_config(const Config& config) {
  TrainingSchedule sc;
  sc.base_lr = config.get_double("nn.lr", sc.base_lr);
  sc.warmup_start_lr = config.get_double("nn.warmup_lr", sc.warmup_start_lr);
  sc.warmup_subepochs =
      config.get_int("nn.warmup_subepochs", sc.warmup_subepochs);
  sc.subepoch_fraction =
      config.get_double("nn.subepoch_fraction", sc.subepoch_fraction);
  sc.newbob_decay = config.get_double("nn.newbob_decay", sc.newbob_decay);
  sc.improvement_threshold = config.get_double("nn.improvement_threshold",
                                               sc.improvement_threshold);
  sc.min_lr = config.get_double("nn.min_lr", sc.min_lr);
  sc.batch_size_frames =
      config.get_int("nn.batch_frames", sc.batch_size_frames);
  sc.total_passes = config.get_double("nn.passes", sc.total_passes);
  return sc;
}

}  // namespace

void save_lda(const LdaTransform& transform, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write LDA transform: " + path);
  out.precision(17);
  out << "LDA " << transform.output_dim << ' ' << transform.input_dim << '\n';
  for (int i = 0; i < transform.output_dim; ++i) {
    for (int j = 0; j < transform.input_dim; ++j) {
      if (j) out << ' ';
      out << transform.projection.at(i, j);
    }
    out << '\n';
  }
  for (std::size_t i = 0; i < transform.eigenvalues.size(); ++i) {
    if (i) out << ' ';
    out << transform.eigenvalues[i];
  }
  out << '\n';
}

LdaTransform load_lda(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open LDA transform: " + path);
  std::string tag;
  LdaTransform t;
  in >> tag >> t.output_dim >> t.input_dim;
  if (tag != "LDA" || t.output_dim < 1 || t.input_dim < 1)
    throw DataError(path + ": not an LDA transform file");
  t.projection = Matrix(t.output_dim, t.input_dim);
  for (int i = 0; i < t.output_dim; ++i)
    for (int j = 0; j < t.input_dim; ++j) in >> t.projection.at(i, j);
  double v;
  while (in >> v) t.eigenvalues.push_back(v);
  return t;
}

void save_warp_factors(const std::vector<WarpFactor>& warps,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write warp factors: " + path);
  out.precision(17);
  for (const auto& w : warps) out << w.speaker_id << '\t' << w.alpha << '\n';
}

std::vector<WarpFactor> load_warp_factors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open warp factors: " + path);
  std::vector<WarpFactor> warps;
  std::string speaker;
  double alpha;
  while (in >> speaker >> alpha) warps.push_back({speaker, alpha});
  return warps;
}

void save_speaker_transforms(const std::vector<SpeakerTransform>& transforms,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write speaker transforms: " + path);
  out.precision(17);
  for (const auto& t : transforms) {
    out << "speaker " << t.speaker_id << ' ' << t.b.size() << '\n';
    for (std::size_t i = 0; i < t.A.rows(); ++i) {
      for (std::size_t j = 0; j < t.A.cols(); ++j) {
        if (j) out << ' ';
        out << t.A.at(i, j);
      }
      out << '\n';
    }
    for (std::size_t i = 0; i < t.b.size(); ++i) {
      if (i) out << ' ';
      out << t.b[i];
    }
    out << '\n';
  }
}

std::vector<SpeakerTransform> load_speaker_transforms(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open speaker transforms: " + path);
  std::vector<SpeakerTransform> transforms;
  std::string tag;
  while (in >> tag) {
    if (tag != "speaker")
      throw DataError(path + ": expected speaker block, got " + tag);
    SpeakerTransform t;
    std::size_t dim;
    in >> t.speaker_id >> dim;
    t.A = Matrix(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) in >> t.A.at(i, j);
    t.b.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) in >> t.b[i];
    if (!in) throw DataError(path + ": truncated speaker transform");
    transforms.push_back(std::move(t));
  }
  return transforms;
}

void save_priors(const PriorVector& priors, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write priors: " + path);
  out.precision(17);
  out << priors.prior_scale << '\n';
  for (double p : priors.log_priors) out << p << '\n';
}

PriorVector load_priors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open priors: " + path);
  PriorVector priors;
  if (!(in >> priors.prior_scale))
    throw DataError(path + ": not a priors file");
  double p;
  while (in >> p) priors.log_priors.push_back(p);
  if (priors.log_priors.empty()) throw DataError(path + ": empty priors");
  return priors;
}

void run_extract_features(const std::string& manifest_path,
                          const std::string& archive_out, const Config& config,
                          const StepOptions& options) {
  const FrontendConfig fc = frontend_config(config);
  const std::string kind = config.get_string("features.kind", "deriv");
  const std::string lda_path = config.get_string("features.lda", "");
  const std::string warps_path = config.get_string("features.warps", "");
  const std::string transforms_path =
      config.get_string("features.transforms", "");
  config.reject_unknown_keys({"frontend", "features"});

  std::vector<std::string> inputs{manifest_path};
  if (!lda_path.empty()) inputs.push_back(lda_path);
  if (!warps_path.empty()) inputs.push_back(warps_path);
  if (!transforms_path.empty()) inputs.push_back(transforms_path);
  if (!begin_step("extract-features", inputs, {archive_out}, config, options))
    return;

  const CorpusManifest manifest = load_manifest(manifest_path);
  LdaTransform lda;
  if (!lda_path.empty()) lda = load_lda(lda_path);
  std::map<std::string, double> warp_by_speaker;
  if (!warps_path.empty())
    for (const auto& w : load_warp_factors(warps_path))
      warp_by_speaker[w.speaker_id] = w.alpha;
  std::map<std::string, SpeakerTransform> transform_by_speaker;
  if (!transforms_path.empty())
    for (auto& t : load_speaker_transforms(transforms_path))
      transform_by_speaker[t.speaker_id] = std::move(t);

  std::vector<std::pair<std::string, FeatureMatrix>> entries;
  for (const auto& utt : manifest.utterances) {
    FrontendConfig utt_fc = fc;
    auto wit = warp_by_speaker.find(utt.speaker_id);
    if (wit != warp_by_speaker.end()) utt_fc = apply_warp(fc, wit->second);
    FeatureMatrix feats =
        build_features(read_audio(utt.audio_path), utt_fc, kind,
                       lda_path.empty() ? nullptr : &lda);
    auto tit = transform_by_speaker.find(utt.speaker_id);
    if (tit != transform_by_speaker.end())
      feats = apply_transform(tit->second, feats);
    entries.push_back({utt.id, std::move(feats)});
  }
  write_feature_archive(archive_out, entries);
  end_step("extract-features", inputs, {archive_out}, config);
}

void run_train_mono(const std::string& manifest_path,
                    const std::string& archive_path,
                    const std::string& lexicon_path,
                    const std::string& model_out,
                    const std::string& align_out, const Config& config,
                    const StepOptions& options) {
  const HmmTopology topology = topology_config(config);
  MonophoneTrainConfig tc;
  tc.linear_iterations =
      config.get_int("gmm.linear_iterations", tc.linear_iterations);
  tc.realign_iterations =
      config.get_int("gmm.realign_iterations", tc.realign_iterations);
  tc.split_every = config.get_int("gmm.split_every", tc.split_every);
  tc.max_components = config.get_int("gmm.max_components", tc.max_components);
  config.reject_unknown_keys({"hmm", "gmm"});

  const std::vector<std::string> inputs{manifest_path, archive_path,
                                        lexicon_path};
  const std::vector<std::string> outputs{model_out, align_out};
  if (!begin_step("train-mono", inputs, outputs, config, options)) return;

  const CorpusManifest manifest = load_manifest(manifest_path);
  const Lexicon lexicon = load_lexicon(lexicon_path);
  const LoadedArchive archive = load_archive(archive_path);
  const auto by_id = utterances_by_id(manifest);
  const auto inventory = MonophoneInventory::from_lexicon(lexicon, topology);
  const StateMapper mapper = inventory.mapper();

  std::vector<HmmChain> chains;
  for (const auto& id : archive.ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw DataError("archive utterance not in manifest: " + id);
    chains.push_back(compose_chain(it->second->transcript, lexicon, mapper,
                                   topology));
  }
  const MonophoneTrainResult result = train_monophone(
      archive.features, chains, topology, inventory.num_states(), tc);
  save_model(result.model, model_out);
  std::map<std::string, Alignment> by_utt;
  for (std::size_t i = 0; i < archive.ids.size(); ++i)
    by_utt[archive.ids[i]] = result.alignments[i];
  save_alignments(by_utt, align_out);
  end_step("train-mono", inputs, outputs, config);
}

void run_align(const std::string& manifest_path,
               const std::string& archive_path,
               const std::string& lexicon_path, const std::string& model_path,
               const std::string& tree_path, const std::string& align_out,
               const Config& config, const StepOptions& options) {
  const HmmTopology topology = topology_config(config);
  config.reject_unknown_keys({"hmm"});

  std::vector<std::string> inputs{manifest_path, archive_path, lexicon_path,
                                  model_path};
  if (!tree_path.empty()) inputs.push_back(tree_path);
  if (!begin_step("align", inputs, {align_out}, config, options)) return;

  const CorpusManifest manifest = load_manifest(manifest_path);
  const Lexicon lexicon = load_lexicon(lexicon_path);
  const AcousticModelSet model = load_model(model_path);
  const LoadedArchive archive = load_archive(archive_path);
  const auto by_id = utterances_by_id(manifest);
  DecisionTree tree;
  const StateMapper mapper =
      mapper_for(tree_path, lexicon, topology, &tree, nullptr);

  std::map<std::string, Alignment> by_utt;
  for (std::size_t i = 0; i < archive.ids.size(); ++i) {
    auto it = by_id.find(archive.ids[i]);
    if (it == by_id.end())
      throw DataError("archive utterance not in manifest: " + archive.ids[i]);
    const HmmChain chain = compose_chain(it->second->transcript, lexicon,
                                         mapper, topology);
    by_utt[archive.ids[i]] =
        viterbi_align(archive.features[i], model, chain).alignment;
  }
  save_alignments(by_utt, align_out);
  end_step("align", inputs, {align_out}, config);
}

void run_build_cart(const std::string& manifest_path,
                    const std::string& archive_path,
                    const std::string& lexicon_path,
                    const std::string& align_path,
                    const std::string& questions_path,
                    const std::string& tree_out, const Config& config,
                    const StepOptions& options) {
  const HmmTopology topology = topology_config(config);
  const int leaf_budget = config.get_int("cart.leaves", 9001);
  TreeGrowConfig gc;
  gc.min_split_occupancy =
      config.get_double("cart.min_occupancy", gc.min_split_occupancy);
  gc.min_gain = config.get_double("cart.min_gain", gc.min_gain);
  config.reject_unknown_keys({"hmm", "cart"});

  std::vector<std::string> inputs{manifest_path, archive_path, lexicon_path,
                                  align_path};
  if (!questions_path.empty()) inputs.push_back(questions_path);
  if (!begin_step("build-cart", inputs, {tree_out}, config, options)) return;

  const CorpusManifest manifest = load_manifest(manifest_path);
  const Lexicon lexicon = load_lexicon(lexicon_path);
  const LoadedArchive archive = load_archive(archive_path);
  const auto by_id = utterances_by_id(manifest);
  const auto inventory = MonophoneInventory::from_lexicon(lexicon, topology);
  const StateMapper mapper = inventory.mapper();

  std::vector<HmmChain> chains;
  for (const auto& id : archive.ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw DataError("archive utterance not in manifest: " + id);
    chains.push_back(compose_chain(it->second->transcript, lexicon, mapper,
                                   topology));
  }
  const auto alignments =
      ordered_alignments(load_alignments(align_path), archive.ids);
  const ContextStats stats =
      collect_stats(alignments, chains, archive.features);
  const QuestionSet questions =
      questions_path.empty()
          ? default_questions(lexicon.phoneme_inventory)
          : load_questions(questions_path);
  const DecisionTree tree = grow_tree(stats, questions, leaf_budget, gc);
  save_tree(tree, tree_out);
  end_step("build-cart", inputs, {tree_out}, config);
}

void run_estimate_lda(const std::string& archive_path,
                      const std::string& align_path,
                      const std::string& lda_out, const Config& config,
                      const StepOptions& options) {
  const int out_dim = config.get_int("lda.output_dim", 48);
  config.reject_unknown_keys({"lda"});
  const std::vector<std::string> inputs{archive_path, align_path};
  if (!begin_step("estimate-lda", inputs, {lda_out}, config, options)) return;

  const LoadedArchive archive = load_archive(archive_path);
  const auto alignments =
      ordered_alignments(load_alignments(align_path), archive.ids);
  std::vector<std::vector<int>> labels;
  for (const auto& alignment : alignments) {
    std::vector<int> frame_labels;
    for (const auto& f : alignment) frame_labels.push_back(f.tied_state);
    labels.push_back(std::move(frame_labels));
  }
  save_lda(estimate_lda(archive.features, labels, out_dim), lda_out);
  end_step("estimate-lda", inputs, {lda_out}, config);
}

void run_train_tri(const std::string& manifest_path,
                   const std::string& archive_path,
                   const std::string& lexicon_path,
                   const std::string& tree_path, const std::string& model_out,
                   const std::string& align_out, const Config& config,
                   const StepOptions& options) {
  const HmmTopology topology = topology_config(config);
  MonophoneTrainConfig tc;
  tc.linear_iterations = 0;
  tc.realign_iterations =
      config.get_int("gmm.realign_iterations", tc.realign_iterations);
  tc.split_every = config.get_int("gmm.split_every", tc.split_every);
  tc.max_components = config.get_int("gmm.max_components", tc.max_components);
  config.reject_unknown_keys({"hmm", "gmm"});

  const std::vector<std::string> inputs{manifest_path, archive_path,
                                        lexicon_path, tree_path};
  const std::vector<std::string> outputs{model_out, align_out};
  if (!begin_step("train-tri", inputs, outputs, config, options)) return;

  const CorpusManifest manifest = load_manifest(manifest_path);
  const Lexicon lexicon = load_lexicon(lexicon_path);
  const LoadedArchive archive = load_archive(archive_path);
  const auto by_id = utterances_by_id(manifest);
  DecisionTree tree;
  int num_states = 0;
  const StateMapper mapper =
      mapper_for(tree_path, lexicon, topology, &tree, &num_states);

  std::vector<HmmChain> chains;
  for (const auto& id : archive.ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw DataError("archive utterance not in manifest: " + id);
    chains.push_back(compose_chain(it->second->transcript, lexicon, mapper,
                                   topology));
  }
  // linear start over the tied inventory, then realignment passes
  MonophoneTrainConfig full = tc;
  full.linear_iterations = config.get_int("gmm.linear_iterations", 2);
  const MonophoneTrainResult result = train_monophone(
      archive.features, chains, topology, num_states, full);
  save_model(result.model, model_out);
  std::map<std::string, Alignment> by_utt;
  for (std::size_t i = 0; i < archive.ids.size(); ++i)
    by_utt[archive.ids[i]] = result.alignments[i];
  save_alignments(by_utt, align_out);
  end_step("train-tri", inputs, outputs, config);
}

void run_estimate_vtln(const std::string& manifest_path,
                       const std::string& archive_path,
                       const std::string& lexicon_path,
                       const std::string& model_path,
                       const std::string& align_path,
                       const std::string& warps_out, const Config& config,
                       const StepOptions& options) {
  const FrontendConfig fc = frontend_config(config);
  const std::string kind = config.get_string("features.kind", "deriv");
  const double grid_lo = config.get_double("vtln.grid_lo", 0.88);
  const double grid_hi = config.get_double("vtln.grid_hi", 1.12);
  const double grid_step = config.get_double("vtln.grid_step", 0.02);
  config.reject_unknown_keys({"frontend", "features", "vtln"});

  const std::vector<std::string> inputs{manifest_path, archive_path,
                                        lexicon_path, model_path, align_path};
  if (!begin_step("estimate-vtln", inputs, {warps_out}, config, options))
    return;

  const CorpusManifest manifest = load_manifest(manifest_path);
  const AcousticModelSet model = load_model(model_path);
  const auto align_by_utt = load_alignments(align_path);
  const auto grid = warp_grid(grid_lo, grid_hi, grid_step);

  // group utterances by speaker
  std::map<std::string, std::vector<const Utterance*>> by_speaker;
  for (const auto& utt : manifest.utterances)
    by_speaker[utt.speaker_id].push_back(&utt);

  const FrameScorer scorer = [&](int tied_state,
                                 std::span<const double> feature) {
    return score_frame(model, tied_state, feature);
  };

  std::vector<WarpFactor> warps;
  for (const auto& [speaker, utts] : by_speaker) {
    std::vector<std::vector<int>> frame_states;
    for (const auto* utt : utts) {
      auto it = align_by_utt.find(utt->id);
      if (it == align_by_utt.end())
        throw DataError("no alignment for utterance " + utt->id);
      std::vector<int> states;
      for (const auto& f : it->second) states.push_back(f.tied_state);
      frame_states.push_back(std::move(states));
    }
    auto features_for_alpha = [&](double alpha, std::size_t u) {
      return build_features(read_audio(utts[u]->audio_path),
                            apply_warp(fc, alpha), kind, nullptr);
    };
    warps.push_back(estimate_warp(speaker, frame_states, features_for_alpha,
                                  scorer, grid));
  }
  save_warp_factors(warps, warps_out);
  end_step("estimate-vtln", inputs, {warps_out}, config);
}

void run_estimate_sat(const std::string& manifest_path,
                      const std::string& archive_path,
                      const std::string& model_path,
                      const std::string& align_path,
                      const std::string& transforms_out, const Config& config,
                      const StepOptions& options) {
  const int sweeps = config.get_int("sat.sweeps", 20);
  config.reject_unknown_keys({"sat"});
  const std::vector<std::string> inputs{manifest_path, archive_path,
                                        model_path, align_path};
  if (!begin_step("estimate-sat", inputs, {transforms_out}, config, options))
    return;

  const CorpusManifest manifest = load_manifest(manifest_path);
  const AcousticModelSet model = load_model(model_path);
  const LoadedArchive archive = load_archive(archive_path);
  const auto align_by_utt = load_alignments(align_path);
  const auto by_id = utterances_by_id(manifest);

  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < archive.ids.size(); ++i) {
    auto it = by_id.find(archive.ids[i]);
    if (it == by_id.end())
      throw DataError("archive utterance not in manifest: " + archive.ids[i]);
    by_speaker[it->second->speaker_id].push_back(i);
  }

  std::vector<SpeakerTransform> transforms;
  for (const auto& [speaker, indices] : by_speaker) {
    std::vector<FeatureMatrix> feats;
    std::vector<Alignment> aligns;
    for (std::size_t i : indices) {
      feats.push_back(archive.features[i]);
      auto it = align_by_utt.find(archive.ids[i]);
      if (it == align_by_utt.end())
        throw DataError("no alignment for utterance " + archive.ids[i]);
      aligns.push_back(it->second);
    }
    transforms.push_back(estimate_cmllr(feats, aligns, model, speaker,
                                        sweeps));
  }
  save_speaker_transforms(transforms, transforms_out);
  end_step("estimate-sat", inputs, {transforms_out}, config);
}

void run_train_nn(const std::string& archive_path,
                  const std::string& align_path,
                  const std::string& checkpoint_out,
                  const std::string& devlog_out, const Config& config,
                  const StepOptions& options) {
  const TrainingSchedule schedule = schedule_config(config);
  const double dev_fraction = config.get_double("nn.dev_fraction", 0.1);
  const std::uint64_t seed =
      static_cast<std::uint64_t>(config.get_int("nn.seed", 1));
  const bool dropout_enabled = config.get_bool("nn.enable_dropout", true);
  const bool noise_enabled =
      config.get_bool("nn.enable_gradient_noise", true);
  int output_dim = config.get_int("nn.output_dim", 0);

  const std::vector<std::string> inputs{archive_path, align_path};
  const std::vector<std::string> outputs{checkpoint_out, devlog_out};

  const LoadedArchive archive = load_archive(archive_path);
  const auto alignments =
      ordered_alignments(load_alignments(align_path), archive.ids);
  std::vector<std::vector<int>> targets;
  for (const auto& alignment : alignments) {
    std::vector<int> t;
    for (const auto& f : alignment) t.push_back(f.tied_state);
    targets.push_back(std::move(t));
  }
  if (output_dim == 0)
    for (const auto& t : targets)
      for (int s : t) output_dim = std::max(output_dim, s + 1);
  const NetworkConfig nc = network_config(
      config, static_cast<int>(archive.features[0].dim()), output_dim);
  config.reject_unknown_keys({"nn"});
  if (!begin_step("train-nn", inputs, outputs, config, options)) return;

  // held-out tail of the utterance list as the dev set
  const std::size_t num_dev = std::max<std::size_t>(
      1, static_cast<std::size_t>(archive.features.size() * dev_fraction));
  if (num_dev >= archive.features.size())
    throw DataError("dev fraction leaves no training data");
  const std::size_t num_train = archive.features.size() - num_dev;
  std::vector<FeatureMatrix> train_f(archive.features.begin(),
                                     archive.features.begin() + num_train);
  std::vector<std::vector<int>> train_t(targets.begin(),
                                        targets.begin() + num_train);
  std::vector<FeatureMatrix> dev_f(archive.features.begin() + num_train,
                                   archive.features.end());
  std::vector<std::vector<int>> dev_t(targets.begin() + num_train,
                                      targets.end());

  TrainOptions to;
  to.seed = seed;
  to.enable_dropout = dropout_enabled;
  to.enable_gradient_noise = noise_enabled;
  const TrainResult result =
      train_network(nc, schedule, train_f, train_t, dev_f, dev_t, to);
  save_checkpoint(checkpoint_out, nc, result.params);
  save_priors(estimate_priors(train_t, output_dim),
              checkpoint_out + ".priors");
  write_dev_log(devlog_out, result.records);
  end_step("train-nn", inputs, outputs, config);
}

void run_decode(const std::string& archive_path,
                const std::string& lexicon_path,
                const std::string& model_path, const std::string& tree_path,
                const std::string& arpa_path, const std::string& trn_out,
                const std::string& lattice_out, const Config& config,
                const StepOptions& options) {
  const HmmTopology topology = topology_config(config);
  const DecoderConfig dc = decoder_config(config);
  const std::string model_kind = config.get_string("decoder.model", "gmm");
  const double prior_scale = config.get_double("decoder.prior_scale", 1.0);
  config.reject_unknown_keys({"hmm", "decoder"});

  std::vector<std::string> inputs{archive_path, lexicon_path, model_path,
                                  arpa_path};
  if (!tree_path.empty()) inputs.push_back(tree_path);
  std::vector<std::string> outputs{trn_out};
  if (!lattice_out.empty()) outputs.push_back(lattice_out);
  if (!begin_step("decode", inputs, outputs, config, options)) return;

  const Lexicon lexicon = load_lexicon(lexicon_path);
  const LoadedArchive archive = load_archive(archive_path);
  const NgramLm lm = load_arpa(arpa_path);
  const NgramScorer scorer(lm);
  DecisionTree tree;
  const StateMapper mapper =
      mapper_for(tree_path, lexicon, topology, &tree, nullptr);

  AcousticModelSet gmm;
  NetworkConfig nc;
  std::vector<double> params;
  PriorVector priors;
  if (model_kind == "gmm") {
    gmm = load_model(model_path);
  } else if (model_kind == "nn") {
    std::tie(nc, params) = load_checkpoint(model_path);
    priors = load_priors(model_path + ".priors");
    priors.prior_scale = prior_scale;
  } else {
    throw DataError("decoder.model must be gmm or nn");
  }

  std::map<std::string, std::vector<std::string>> hyps;
  std::vector<Lattice> lattices;
  for (std::size_t i = 0; i < archive.ids.size(); ++i) {
    Matrix loglik =
        model_kind == "gmm"
            ? gmm_loglik(gmm, archive.features[i])
            : scaled_loglik(network_forward(nc, params, archive.features[i]),
                            priors);
    DecodeResult result =
        decode(loglik, lexicon, mapper, topology, scorer, dc);
    hyps[archive.ids[i]] = result.words;
    result.lattice.utterance_id = archive.ids[i];
    if (!lattice_out.empty()) lattices.push_back(std::move(result.lattice));
  }
  save_trn(hyps, trn_out);
  if (!lattice_out.empty()) save_lattices(lattices, lattice_out);
  end_step("decode", inputs, outputs, config);
}

void run_smbr_train(const std::string& archive_path,
                    const std::string& lattice_path,
                    const std::string& align_path,
                    const std::string& checkpoint_in,
                    const std::string& checkpoint_out, const Config& config,
                    const StepOptions& options) {
  const double ce_smoothing = config.get_double("smbr.ce_smoothing", 0.1);
  const double lr = config.get_double("smbr.lr", 1e-4);
  const int iterations = config.get_int("smbr.iterations", 4);
  LatticeScales scales;
  scales.am_scale = config.get_double("smbr.am_scale", 1.0 / 12.0);
  scales.lm_scale = config.get_double("smbr.lm_scale", 1.0);
  const bool exclude_silence = config.get_bool("smbr.exclude_silence", false);
  const int silence_state_base = config.get_int("smbr.silence_state_base", -1);
  config.reject_unknown_keys({"smbr"});

  const std::vector<std::string> inputs{archive_path, lattice_path,
                                        align_path, checkpoint_in};
  const std::vector<std::string> outputs{checkpoint_out};
  if (!begin_step("smbr-train", inputs, outputs, config, options)) return;

  const LoadedArchive archive = load_archive(archive_path);
  auto lattices = load_lattices(lattice_path);
  const auto align_by_utt = load_alignments(align_path);
  auto [nc, params] = load_checkpoint(checkpoint_in);
  const PriorVector priors = load_priors(checkpoint_in + ".priors");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < archive.ids.size(); ++i)
    index[archive.ids[i]] = i;

  std::set<int> silence_states;
  if (exclude_silence && silence_state_base >= 0)
    for (int s = silence_state_base; s < nc.output_dim; ++s)
      silence_states.insert(s);

  NadamOptimizer opt(params.size());
  for (int iter = 0; iter < iterations; ++iter) {
    std::vector<double> grad(params.size(), 0.0);
    for (auto& lat : lattices) {
      auto it = index.find(lat.utterance_id);
      if (it == index.end())
        throw DataError("lattice utterance not in archive: " +
                        lat.utterance_id);
      const FeatureMatrix& feats = archive.features[it->second];
      auto ait = align_by_utt.find(lat.utterance_id);
      if (ait == align_by_utt.end())
        throw DataError("no reference alignment for " + lat.utterance_id);
      std::vector<int> ref;
      for (const auto& f : ait->second) ref.push_back(f.tied_state);

      const Matrix post = network_forward(nc, params, feats);
      const Matrix loglik = scaled_loglik(post, priors);
      set_arc_acoustic_scores(lat, loglik);
      annotate_accuracy(lat, ref,
                        silence_states.empty() ? nullptr : &silence_states);
      const SmbrStats stats =
          smbr_statistics(lat, scales, feats.frames(), nc.output_dim);
      const Matrix dlogpost =
          smbr_training_gradient(stats, ref, ce_smoothing);
      backprop_logpost_gradient(nc, params, feats, dlogpost, &grad);
    }
    opt.step(params, grad, lr);
  }
  save_checkpoint(checkpoint_out, nc, params);
  save_priors(priors, checkpoint_out + ".priors");
  end_step("smbr-train", inputs, outputs, config);
}

void run_rescore(const std::string& lattice_path,
                 const std::string& arpa_path, const std::string& trn_out,
                 const std::string& lattice_out, const Config& config,
                 const StepOptions& options) {
  RescoreConfig rc;
  rc.recombination_order =
      config.get_int("rescore.recombination_order", rc.recombination_order);
  rc.max_hyps_per_node =
      config.get_int("rescore.max_hyps", rc.max_hyps_per_node);
  rc.scales.lm_scale =
      config.get_double("rescore.lm_scale", rc.scales.lm_scale);
  rc.scales.word_penalty =
      config.get_double("rescore.word_penalty", rc.scales.word_penalty);
  config.reject_unknown_keys({"rescore"});

  const std::vector<std::string> inputs{lattice_path, arpa_path};
  std::vector<std::string> outputs{trn_out};
  if (!lattice_out.empty()) outputs.push_back(lattice_out);
  if (!begin_step("rescore", inputs, outputs, config, options)) return;

  const NgramLm lm = load_arpa(arpa_path);
  const NgramScorer scorer(lm);
  std::map<std::string, std::vector<std::string>> hyps;
  std::vector<Lattice> rescored;
  for (const auto& lat : load_lattices(lattice_path)) {
    Lattice out = rescore_pushforward(lat, scorer, rc);
    hyps[out.utterance_id] = lattice_best_path(out, rc.scales).words;
    if (!lattice_out.empty()) rescored.push_back(std::move(out));
  }
  save_trn(hyps, trn_out);
  if (!lattice_out.empty()) save_lattices(rescored, lattice_out);
  end_step("rescore", inputs, outputs, config);
}

void run_lm_estimate(const std::string& text_path,
                     const std::string& arpa_out, const Config& config,
                     const StepOptions& options) {
  KneserNeyConfig kn;
  kn.order = config.get_int("lm.order", kn.order);
  config.reject_unknown_keys({"lm"});
  const std::vector<std::string> inputs{text_path};
  if (!begin_step("lm-estimate", inputs, {arpa_out}, config, options)) return;
  save_arpa(estimate_kneser_ney(load_text(text_path), kn), arpa_out);
  end_step("lm-estimate", inputs, {arpa_out}, config);
}

double run_lm_perplexity(const std::string& arpa_path,
                         const std::string& text_path) {
  return perplexity(load_arpa(arpa_path), load_text(text_path));
}

std::vector<double> run_lm_interpolate(const std::vector<std::string>& arpas,
                                       const std::string& dev_text_path,
                                       const std::string& arpa_out,
                                       const Config& config,
                                       const StepOptions& options) {
  const int iterations = config.get_int("lm.em_iterations", 100);
  config.reject_unknown_keys({"lm"});
  std::vector<std::string> inputs = arpas;
  inputs.push_back(dev_text_path);
  if (arpas.size() != 2)
    throw DataError("lm-interpolate expects exactly two component models");

  std::vector<NgramLm> models;
  for (const auto& p : arpas) models.push_back(load_arpa(p));
  std::vector<const NgramLm*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);
  const auto dev = load_text(dev_text_path);
  const InterpolationResult result =
      optimize_interpolation(ptrs, dev, iterations);
  if (begin_step("lm-interpolate", inputs, {arpa_out}, config, options)) {
    save_arpa(interpolate_static(models[0], models[1], result.weights[0]),
              arpa_out);
    end_step("lm-interpolate", inputs, {arpa_out}, config);
  }
  std::vector<double> out = result.weights;
  out.push_back(result.perplexity);
  return out;
}

void run_bpe_learn(const std::string& text_path, const std::string& model_out,
                   const Config& config, const StepOptions& options) {
  const int merges = config.get_int("bpe.merges", 200);
  config.reject_unknown_keys({"bpe"});
  const std::vector<std::string> inputs{text_path};
  if (!begin_step("bpe-learn", inputs, {model_out}, config, options)) return;
  save_bpe(learn_bpe(load_text(text_path), merges), model_out);
  end_step("bpe-learn", inputs, {model_out}, config);
}

void run_bpe_apply(const std::string& model_path,
                   const std::string& text_path, const std::string& text_out) {
  const BpeModel model = load_bpe(model_path);
  std::ofstream out(text_out);
  if (!out) throw DataError("cannot write segmented text: " + text_out);
  for (const auto& sent : load_text(text_path)) {
    const auto units = model.segment(sent);
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (i) out << ' ';
      out << units[i];
    }
    out << '\n';
  }
}

void run_fusion_decode(const std::string& scores_path,
                       const std::string& arpa_path,
                       const std::string& out_path, const Config& config,
                       const StepOptions& options) {
  FusionConfig fc;
  fc.lm_weight = config.get_double("fusion.lm_weight", fc.lm_weight);
  fc.eos_penalty = config.get_double("fusion.eos_penalty", fc.eos_penalty);
  fc.beam_size = config.get_int("fusion.beam", fc.beam_size);
  fc.nbest = config.get_int("fusion.nbest", fc.nbest);
  fc.subword_units = config.get_bool("fusion.subword_units", fc.subword_units);
  config.reject_unknown_keys({"fusion"});

  std::vector<std::string> inputs{scores_path};
  if (!arpa_path.empty()) inputs.push_back(arpa_path);
  if (!begin_step("fusion-decode", inputs, {out_path}, config, options))
    return;

  std::ifstream in(scores_path);
  if (!in) throw DataError("cannot open score matrix: " + scores_path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError(scores_path + ": empty score file");
  std::istringstream head(line);
  std::string tag;
  head >> tag;
  if (tag != "vocab")
    throw DataError(scores_path + ": expected `vocab` header line");
  std::vector<std::string> vocab;
  std::string label;
  while (head >> label) vocab.push_back(label);
  int eos_id = -1;
  for (std::size_t i = 0; i < vocab.size(); ++i)
    if (vocab[i] == kSentenceEnd) eos_id = static_cast<int>(i);
  if (eos_id < 0)
    throw DataError(scores_path + ": vocabulary has no " +
                    std::string(kSentenceEnd));
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (row.size() != vocab.size())
      throw DataError(scores_path + ": score row width mismatch");
    rows.push_back(std::move(row));
  }
  fc.max_length = static_cast<int>(rows.size()) + 1;

  const StepScorer step = [&](const std::vector<int>& prefix) {
    if (prefix.size() < rows.size()) return rows[prefix.size()];
    // past the matrix only eos remains
    std::vector<double> forced(vocab.size(), kNegInf);
    forced[eos_id] = 0;
    return forced;
  };

  NgramLm lm;
  std::unique_ptr<NgramScorer> scorer;
  if (!arpa_path.empty()) {
    lm = load_arpa(arpa_path);
    scorer = std::make_unique<NgramScorer>(lm);
  }
  const auto hyps =
      fusion_beam_search(step, vocab, eos_id, scorer.get(), fc);

  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write fusion output: " + out_path);
  out.precision(17);
  for (const auto& h : hyps) {
    out << h.score;
    std::vector<std::string> units;
    for (int l : h.labels) units.push_back(vocab[l]);
    const auto words = fc.subword_units ? bpe_decode(units) : units;
    for (const auto& w : words) out << ' ' << w;
    out << '\n';
  }
  end_step("fusion-decode", inputs, {out_path}, config);
}

ScoreReport run_score(const std::string& ref_trn, const std::string& hyp_trn,
                      const std::string& report_out, const Config& config) {
  ScoreOptions so;
  so.fold_case = config.get_bool("score.fold_case", true);
  so.normalize = config.get_bool("score.normalize", false);
  const std::string norm_path = config.get_string("score.normalizer", "");
  config.reject_unknown_keys({"score"});
  std::optional<Normalizer> custom;
  if (!norm_path.empty()) {
    custom.emplace(load_normalizer(norm_path));
    so.normalizer = &*custom;
  }
  const ScoreReport report =
      score_transcripts(load_trn(ref_trn), load_trn(hyp_trn), so);
  if (!report_out.empty()) {
    std::ofstream out(report_out);
    if (!out) throw DataError("cannot write score report: " + report_out);
    out << "WER " << report.wer() * 100 << "%\n";
    out << "errors " << report.total.errors() << " (" << report.total.substitutions
        << " sub, " << report.total.deletions << " del, "
        << report.total.insertions << " ins) over "
        << report.total.reference_length() << " reference words\n";
    for (const auto& [utt, counts] : report.per_utterance)
      out << utt << ' ' << counts.errors() << '/' << counts.reference_length()
          << '\n';
  }
  return report;
}

void run_curriculum_plan(const std::string& manifest_path,
                         double progress, const std::string& manifest_out,
                         const Config& config) {
  const std::uint64_t seed =
      static_cast<std::uint64_t>(config.get_int("curriculum.seed", 1));
  config.reject_unknown_keys({"curriculum"});
  const CorpusManifest manifest = load_manifest(manifest_path);
  const CorpusManifest selected = curriculum_select(
      manifest, default_curriculum_plan(), progress, seed);
  save_manifest(selected, manifest_out);
}

ScoreReport run_full_pipeline(const std::string& manifest_path,
                              const std::string& lexicon_path,
                              const std::string& lm_text_path,
                              const std::string& workdir,
                              const Config& config,
                              const StepOptions& options) {
  fs::create_directories(workdir);
  const std::string archive = workdir + "/features.farc";
  const std::string arpa = workdir + "/lm.arpa";
  const std::string model = workdir + "/mono.am";
  const std::string align = workdir + "/mono.align";
  const std::string hyp = workdir + "/hyp.trn";
  const std::string ref = workdir + "/ref.trn";
  const std::string report = workdir + "/score.txt";

  run_extract_features(manifest_path, archive, config, options);
  run_lm_estimate(lm_text_path, arpa, config, options);
  run_train_mono(manifest_path, archive, lexicon_path, model, align, config,
                 options);
  run_decode(archive, lexicon_path, model, "", arpa, hyp,
             workdir + "/decode.lat", config, options);

  std::map<std::string, std::vector<std::string>> refs;
  for (const auto& utt : load_manifest(manifest_path).utterances)
    refs[utt.id] = utt.transcript;
  save_trn(refs, ref);
  return run_score(ref, hyp, report, config);
}

}  // namespace asrkit
