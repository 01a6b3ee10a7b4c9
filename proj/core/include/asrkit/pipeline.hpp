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

#ifndef ASRKIT_PIPELINE_HPP
#define ASRKIT_PIPELINE_HPP

#include <string>
#include <vector>

#include "asrkit/config.hpp"
#include "asrkit/eval.hpp"
#include "asrkit/frontend.hpp"
#include "asrkit/gmm.hpp"
#include "asrkit/neural.hpp"

namespace asrkit {

// text serializations for the remaining model files
void save_lda(const LdaTransform& transform, const std::string& path);
LdaTransform load_lda(const std::string& path);
void save_warp_factors(const std::vector<WarpFactor>& warps,
                       const std::string& path);
std::vector<WarpFactor> load_warp_factors(const std::string& path);
void save_speaker_transforms(const std::vector<SpeakerTransform>& transforms,
                             const std::string& path);
std::vector<SpeakerTransform> load_speaker_transforms(const std::string& path);
void save_priors(const PriorVector& priors, const std::string& path);
PriorVector load_priors(const std::string& path);

// Library entry points behind the CLI subcommands. Each step writes its
// outputs plus a resolved config and a content-hash manifest next to
// them; a step whose manifest still matches is skipped unless `force`.

struct StepOptions {
  bool force = false;
  bool quiet = false;
};

// config: frontend.*, features.kind (static|deriv|spliced|lda),
// features.lda (transform path), features.warps, features.transforms
void run_extract_features(const std::string& manifest_path,
                          const std::string& archive_out, const Config& config,
                          const StepOptions& options = {});

void run_train_mono(const std::string& manifest_path,
                    const std::string& archive_path,
                    const std::string& lexicon_path,
                    const std::string& model_out,
                    const std::string& align_out, const Config& config,
                    const StepOptions& options = {});

// tree_path empty = monophone state mapping
void run_align(const std::string& manifest_path,
               const std::string& archive_path,
               const std::string& lexicon_path, const std::string& model_path,
               const std::string& tree_path, const std::string& align_out,
               const Config& config, const StepOptions& options = {});

void run_build_cart(const std::string& manifest_path,
                    const std::string& archive_path,
                    const std::string& lexicon_path,
                    const std::string& align_path,
                    const std::string& questions_path,
                    const std::string& tree_out, const Config& config,
                    const StepOptions& options = {});

void run_estimate_lda(const std::string& archive_path,
                      const std::string& align_path,
                      const std::string& lda_out, const Config& config,
                      const StepOptions& options = {});

void run_train_tri(const std::string& manifest_path,
                   const std::string& archive_path,
                   const std::string& lexicon_path,
                   const std::string& tree_path, const std::string& model_out,
                   const std::string& align_out, const Config& config,
                   const StepOptions& options = {});

void run_estimate_vtln(const std::string& manifest_path,
                       const std::string& archive_path,
                       const std::string& lexicon_path,
                       const std::string& model_path,
                       const std::string& align_path,
                       const std::string& warps_out, const Config& config,
                       const StepOptions& options = {});

void run_estimate_sat(const std::string& manifest_path,
                      const std::string& archive_path,
                      const std::string& model_path,
                      const std::string& align_path,
                      const std::string& transforms_out, const Config& config,
                      const StepOptions& options = {});

void run_train_nn(const std::string& archive_path,
                  const std::string& align_path,
                  const std::string& checkpoint_out,
                  const std::string& devlog_out, const Config& config,
                  const StepOptions& options = {});

// model_path: GMM model (`gmm`) or NN checkpoint + priors (`nn`); decodes
// to a .trn and optionally writes lattices
void run_decode(const std::string& archive_path,
                const std::string& lexicon_path,
                const std::string& model_path, const std::string& tree_path,
                const std::string& arpa_path, const std::string& trn_out,
                const std::string& lattice_out, const Config& config,
                const StepOptions& options = {});

void run_smbr_train(const std::string& archive_path,
                    const std::string& lattice_path,
                    const std::string& align_path,
                    const std::string& checkpoint_in,
                    const std::string& checkpoint_out, const Config& config,
                    const StepOptions& options = {});

void run_rescore(const std::string& lattice_path,
                 const std::string& arpa_path, const std::string& trn_out,
                 const std::string& lattice_out, const Config& config,
                 const StepOptions& options = {});

void run_lm_estimate(const std::string& text_path,
                     const std::string& arpa_out, const Config& config,
                     const StepOptions& options = {});

double run_lm_perplexity(const std::string& arpa_path,
                         const std::string& text_path);

// optimizes the weights on dev text, then writes the statically merged
// model; returns {weights..., perplexity}
std::vector<double> run_lm_interpolate(const std::vector<std::string>& arpas,
                                       const std::string& dev_text_path,
                                       const std::string& arpa_out,
                                       const Config& config,
                                       const StepOptions& options = {});

void run_bpe_learn(const std::string& text_path, const std::string& model_out,
                   const Config& config, const StepOptions& options = {});

void run_bpe_apply(const std::string& model_path,
                   const std::string& text_path, const std::string& text_out);

// label score matrix file: `vocab <labels...>` header then T rows of
// natural-log label scores; decodes with shallow fusion against the LM
void run_fusion_decode(const std::string& scores_path,
                       const std::string& arpa_path,
                       const std::string& out_path, const Config& config,
                       const StepOptions& options = {});

ScoreReport run_score(const std::string& ref_trn, const std::string& hyp_trn,
                      const std::string& report_out, const Config& config);

// writes the selected sub-manifest for a training progress point
void run_curriculum_plan(const std::string& manifest_path,
                         double progress, const std::string& manifest_out,
                         const Config& config);

// End-to-end smoke pipeline: features -> monophone training -> decoding
// -> scoring inside `workdir`; returns the final report.
ScoreReport run_full_pipeline(const std::string& manifest_path,
                              const std::string& lexicon_path,
                              const std::string& lm_text_path,
                              const std::string& workdir,
                              const Config& config,
                              const StepOptions& options = {});

}  // namespace asrkit

#endif  // ASRKIT_PIPELINE_HPP
