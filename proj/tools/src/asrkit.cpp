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

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asrkit/pipeline.hpp"

namespace {

// exit codes: 0 ok, 1 usage, 2 bad data or estimation failure, 3 search
// failure
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSearch = 3;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  bool force = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "configuration file");
  cmd->add_option("--set", common.overrides,
                  "override a config key, section.key=value");
  cmd->add_flag("--force", common.force, "re-run even when up to date");
  cmd->add_flag("--quiet", common.quiet, "suppress progress messages");
}

asrkit::Config make_config(const Common& common) {
  asrkit::Config config;
  if (!common.config_path.empty())
    config = asrkit::load_config(common.config_path);
  for (const auto& assignment : common.overrides)
    asrkit::apply_override(config, assignment);
  return config;
}

asrkit::StepOptions make_options(const Common& common) {
  asrkit::StepOptions options;
  options.force = common.force;
  options.quiet = common.quiet;
  return options;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale hybrid HMM speech recognition toolkit"};
  app.require_subcommand(1);

  Common common;
  std::string manifest, archive, lexicon, model, tree, align, out, out2;
  std::string text, arpa, dev_text, lattices, checkpoint, questions, scores;
  std::vector<std::string> arpa_list;
  double progress = 0;

  auto* c_extract = app.add_subcommand("extract-features",
                                       "compute feature archives");
  c_extract->add_option("manifest", manifest)->required();
  c_extract->add_option("archive_out", out)->required();
  add_common(c_extract, common);

  auto* c_mono = app.add_subcommand("train-mono", "train the monophone GMM");
  c_mono->add_option("manifest", manifest)->required();
  c_mono->add_option("archive", archive)->required();
  c_mono->add_option("lexicon", lexicon)->required();
  c_mono->add_option("model_out", out)->required();
  c_mono->add_option("align_out", out2)->required();
  add_common(c_mono, common);

  auto* c_align = app.add_subcommand("align", "forced alignment");
  c_align->add_option("manifest", manifest)->required();
  c_align->add_option("archive", archive)->required();
  c_align->add_option("lexicon", lexicon)->required();
  c_align->add_option("model", model)->required();
  c_align->add_option("align_out", out)->required();
  c_align->add_option("--tree", tree, "CART file for tied-state systems");
  add_common(c_align, common);

  auto* c_cart = app.add_subcommand("build-cart",
                                    "grow the state-tying decision tree");
  c_cart->add_option("manifest", manifest)->required();
  c_cart->add_option("archive", archive)->required();
  c_cart->add_option("lexicon", lexicon)->required();
  c_cart->add_option("align", align)->required();
  c_cart->add_option("tree_out", out)->required();
  c_cart->add_option("--questions", questions, "question set file");
  add_common(c_cart, common);

  auto* c_lda = app.add_subcommand("estimate-lda", "estimate the LDA matrix");
  c_lda->add_option("archive", archive)->required();
  c_lda->add_option("align", align)->required();
  c_lda->add_option("lda_out", out)->required();
  add_common(c_lda, common);

  auto* c_tri = app.add_subcommand("train-tri", "train the tied-state GMM");
  c_tri->add_option("manifest", manifest)->required();
  c_tri->add_option("archive", archive)->required();
  c_tri->add_option("lexicon", lexicon)->required();
  c_tri->add_option("tree", tree)->required();
  c_tri->add_option("model_out", out)->required();
  c_tri->add_option("align_out", out2)->required();
  add_common(c_tri, common);

  auto* c_vtln = app.add_subcommand("estimate-vtln",
                                    "per-speaker warp factors");
  c_vtln->add_option("manifest", manifest)->required();
  c_vtln->add_option("archive", archive)->required();
  c_vtln->add_option("lexicon", lexicon)->required();
  c_vtln->add_option("model", model)->required();
  c_vtln->add_option("align", align)->required();
  c_vtln->add_option("warps_out", out)->required();
  add_common(c_vtln, common);

  auto* c_sat = app.add_subcommand("estimate-sat",
                                   "per-speaker CMLLR transforms");
  c_sat->add_option("manifest", manifest)->required();
  c_sat->add_option("archive", archive)->required();
  c_sat->add_option("model", model)->required();
  c_sat->add_option("align", align)->required();
  c_sat->add_option("transforms_out", out)->required();
  add_common(c_sat, common);

  auto* c_nn = app.add_subcommand("train-nn", "frame-wise CE training");
  c_nn->add_option("archive", archive)->required();
  c_nn->add_option("align", align)->required();
  c_nn->add_option("checkpoint_out", out)->required();
  c_nn->add_option("devlog_out", out2)->required();
  add_common(c_nn, common);

  auto* c_decode = app.add_subcommand("decode", "beam search decoding");
  c_decode->add_option("archive", archive)->required();
  c_decode->add_option("lexicon", lexicon)->required();
  c_decode->add_option("model", model)->required();
  c_decode->add_option("arpa", arpa)->required();
  c_decode->add_option("trn_out", out)->required();
  c_decode->add_option("--tree", tree);
  c_decode->add_option("--lattices", lattices, "lattice output file");
  add_common(c_decode, common);

  auto* c_lat = app.add_subcommand("make-lattices",
                                   "decode with lattice output");
  c_lat->add_option("archive", archive)->required();
  c_lat->add_option("lexicon", lexicon)->required();
  c_lat->add_option("model", model)->required();
  c_lat->add_option("arpa", arpa)->required();
  c_lat->add_option("trn_out", out)->required();
  c_lat->add_option("lattice_out", out2)->required();
  c_lat->add_option("--tree", tree);
  add_common(c_lat, common);

  auto* c_smbr = app.add_subcommand("smbr-train",
                                    "lattice-based sequence training");
  c_smbr->add_option("archive", archive)->required();
  c_smbr->add_option("lattices", lattices)->required();
  c_smbr->add_option("align", align)->required();
  c_smbr->add_option("checkpoint_in", checkpoint)->required();
  c_smbr->add_option("checkpoint_out", out)->required();
  add_common(c_smbr, common);

  auto* c_rescore = app.add_subcommand("rescore",
                                       "push-forward lattice rescoring");
  c_rescore->add_option("lattices", lattices)->required();
  c_rescore->add_option("arpa", arpa)->required();
  c_rescore->add_option("trn_out", out)->required();
  c_rescore->add_option("--lattices-out", out2);
  add_common(c_rescore, common);

  auto* c_lmest = app.add_subcommand("lm-estimate",
                                     "Kneser-Ney n-gram estimation");
  c_lmest->add_option("text", text)->required();
  c_lmest->add_option("arpa_out", out)->required();
  add_common(c_lmest, common);

  auto* c_ppl = app.add_subcommand("lm-perplexity", "perplexity of text");
  c_ppl->add_option("arpa", arpa)->required();
  c_ppl->add_option("text", text)->required();
  add_common(c_ppl, common);

  auto* c_interp = app.add_subcommand("lm-interpolate",
                                      "optimize and merge two models");
  c_interp->add_option("arpa_a", arpa)->required();
  c_interp->add_option("arpa_b", dev_text)->required();  // reused slot
  c_interp->add_option("dev_text", text)->required();
  c_interp->add_option("arpa_out", out)->required();
  add_common(c_interp, common);

  auto* c_bpel = app.add_subcommand("bpe-learn", "learn BPE merges");
  c_bpel->add_option("text", text)->required();
  c_bpel->add_option("model_out", out)->required();
  add_common(c_bpel, common);

  auto* c_bpea = app.add_subcommand("bpe-apply", "segment text with BPE");
  c_bpea->add_option("model", model)->required();
  c_bpea->add_option("text", text)->required();
  c_bpea->add_option("text_out", out)->required();
  add_common(c_bpea, common);

  auto* c_fusion = app.add_subcommand("fusion-decode",
                                      "label-synchronous shallow fusion");
  c_fusion->add_option("scores", scores)->required();
  c_fusion->add_option("out", out)->required();
  c_fusion->add_option("--arpa", arpa, "LM for fusion; omit for none");
  add_common(c_fusion, common);

  auto* c_score = app.add_subcommand("score", "word error rate scoring");
  c_score->add_option("ref_trn", text)->required();
  c_score->add_option("hyp_trn", dev_text)->required();
  c_score->add_option("--report", out);
  add_common(c_score, common);

  auto* c_curr = app.add_subcommand("curriculum-plan",
                                    "select the curriculum subset");
  c_curr->add_option("manifest", manifest)->required();
  c_curr->add_option("progress", progress)->required();
  c_curr->add_option("manifest_out", out)->required();
  add_common(c_curr, common);

  auto* c_pipe = app.add_subcommand("pipeline",
                                    "features->mono->decode->score");
  c_pipe->add_option("manifest", manifest)->required();
  c_pipe->add_option("lexicon", lexicon)->required();
  c_pipe->add_option("lm_text", text)->required();
  c_pipe->add_option("workdir", out)->required();
  add_common(c_pipe, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const asrkit::Config config = make_config(common);
    const asrkit::StepOptions options = make_options(common);
    if (*c_extract) {
      asrkit::run_extract_features(manifest, out, config, options);
    } else if (*c_mono) {
      asrkit::run_train_mono(manifest, archive, lexicon, out, out2, config,
                             options);
    } else if (*c_align) {
      asrkit::run_align(manifest, archive, lexicon, model, tree, out, config,
                        options);
    } else if (*c_cart) {
      asrkit::run_build_cart(manifest, archive, lexicon, align, questions,
                             out, config, options);
    } else if (*c_lda) {
      asrkit::run_estimate_lda(archive, align, out, config, options);
    } else if (*c_tri) {
      asrkit::run_train_tri(manifest, archive, lexicon, tree, out, out2,
                            config, options);
    } else if (*c_vtln) {
      asrkit::run_estimate_vtln(manifest, archive, lexicon, model, align, out,
                                config, options);
    } else if (*c_sat) {
      asrkit::run_estimate_sat(manifest, archive, model, align, out, config,
                               options);
    } else if (*c_nn) {
      asrkit::run_train_nn(archive, align, out, out2, config, options);
    } else if (*c_decode) {
      asrkit::run_decode(archive, lexicon, model, tree, arpa, out, lattices,
                         config, options);
    } else if (*c_lat) {
      asrkit::run_decode(archive, lexicon, model, tree, arpa, out, out2,
                         config, options);
    } else if (*c_smbr) {
      asrkit::run_smbr_train(archive, lattices, align, checkpoint, out,
                             config, options);
    } else if (*c_rescore) {
      asrkit::run_rescore(lattices, arpa, out, out2, config, options);
    } else if (*c_lmest) {
      asrkit::run_lm_estimate(text, out, config, options);
    } else if (*c_ppl) {
      std::cout << "perplexity " << asrkit::run_lm_perplexity(arpa, text)
                << "\n";
    } else if (*c_interp) {
      const auto result = asrkit::run_lm_interpolate({arpa, dev_text}, text,
                                                     out, config, options);
      std::cout << "weight " << result[0] << " perplexity " << result.back()
                << "\n";
    } else if (*c_bpel) {
      asrkit::run_bpe_learn(text, out, config, options);
    } else if (*c_bpea) {
      asrkit::run_bpe_apply(model, text, out);
    } else if (*c_fusion) {
      asrkit::run_fusion_decode(scores, arpa, out, config, options);
    } else if (*c_score) {
      const auto report = asrkit::run_score(text, dev_text, out, config);
      std::cout << "WER " << report.wer() * 100 << "%\n";
    } else if (*c_curr) {
      asrkit::run_curriculum_plan(manifest, progress, out, config);
    } else if (*c_pipe) {
      const auto report = asrkit::run_full_pipeline(manifest, lexicon, text,
                                                    out, config, options);
      std::cout << "WER " << report.wer() * 100 << "%\n";
    }
  } catch (const asrkit::SearchError& e) {
    std::cerr << "search error: " << e.what() << "\n";
    return kExitSearch;
  } catch (const asrkit::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const asrkit::EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
