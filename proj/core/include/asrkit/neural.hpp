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

#ifndef ASRKIT_NEURAL_HPP
#define ASRKIT_NEURAL_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "asrkit/common.hpp"
#include "asrkit/frontend.hpp"

namespace asrkit {

enum class LayerType {
  kFeedforwardTanh,
  kUnidirectionalRecurrent,
  kBidirectionalRecurrent
};

std::string layer_type_name(LayerType t);
LayerType parse_layer_type(const std::string& s);

struct NetworkConfig {
  LayerType layer_type = LayerType::kFeedforwardTanh;
  int num_layers = 2;
  int hidden_units = 128;
  int input_dim = 0;
  int output_dim = 0;  // tied-state count
  double dropout_rate = 0.10;
  double l2_coeff = 0.01;
  double gradient_noise_variance = 0.1;

  void validate() const;
  // width of a hidden layer's output
  int layer_output_dim() const {
    return layer_type == LayerType::kBidirectionalRecurrent ? 2 * hidden_units
                                                            : hidden_units;
  }
};

struct TrainingSchedule {
  double base_lr = 0.008;
  double warmup_start_lr = 0.003;
  int warmup_subepochs = 10;
  double subepoch_fraction = 1.0 / 40.0;
  double newbob_decay = 0.9;
  double improvement_threshold = 0.005;  // relative dev-CE improvement
  double min_lr = 1e-5;
  int batch_size_frames = 20000;
  double total_passes = 12.5;
};

// Linear warmup from warmup_start_lr to base_lr over the first
// warmup_subepochs; exact at subepoch boundaries.
double warmup_lr(const TrainingSchedule& schedule, int subepoch);

// Multiplies lr by the decay when relative dev-score improvement falls
// below the threshold; never below min_lr.
double newbob_step(const std::vector<double>& dev_history, double current_lr,
                   double decay = 0.9, double improvement_threshold = 0.005,
                   double min_lr = 1e-5);

struct NadamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class NadamOptimizer {
 public:
  NadamOptimizer(std::size_t num_params, const NadamConfig& config = {});
  void step(std::vector<double>& params, const std::vector<double>& grad,
            double lr);
  int steps_taken() const { return t_; }

 private:
  NadamConfig config_;
  std::vector<double> m_, v_;
  int t_ = 0;
};

// Named parameter tensor within the flat parameter vector.
struct TensorSpec {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;  // 1 for vectors
};

std::vector<TensorSpec> network_tensors(const NetworkConfig& config);
std::size_t num_parameters(const NetworkConfig& config);
std::vector<double> init_parameters(const NetworkConfig& config,
                                    std::uint64_t seed);

// One dropout mask per hidden layer, shared across the frames of a batch.
struct DropoutMasks {
  std::vector<std::vector<double>> layer_masks;  // scaled inverted masks
};
DropoutMasks sample_dropout_masks(const NetworkConfig& config,
                                  std::mt19937_64& rng);

// Posterior matrix T x K; rows are probability simplices. Deterministic
// (no dropout).
Matrix network_forward(const NetworkConfig& config,
                       const std::vector<double>& params,
                       const FeatureMatrix& features);

// Mean frame cross-entropy + l2/2*||params||^2 over the batch, with the
// gradient in `grad` (same length as params). Masks may be null (no dropout).
double ce_loss_and_gradient(const NetworkConfig& config,
                            const std::vector<double>& params,
                            const std::vector<const FeatureMatrix*>& features,
                            const std::vector<const std::vector<int>*>& targets,
                            std::vector<double>* grad,
                            const DropoutMasks* masks = nullptr);

// Backpropagates an arbitrary d(objective)/d(log posterior) matrix (T x K)
// for one sequence; used by sequence training. Adds into `grad`.
void backprop_logpost_gradient(const NetworkConfig& config,
                               const std::vector<double>& params,
                               const FeatureMatrix& features,
                               const Matrix& dobj_dlogpost,
                               std::vector<double>* grad);

struct SubepochRecord {
  int subepoch = 0;
  double dev_ce = 0;
  double lr = 0;
};

struct TrainResult {
  std::vector<double> params;
  std::vector<SubepochRecord> records;
};

struct TrainOptions {
  std::uint64_t seed = 1;
  bool enable_dropout = true;
  bool enable_gradient_noise = true;
};

// Frame-wise CE training with Nadam, warmup then Newbob scheduling,
// subepoch-based evaluation on the dev set. Bit-reproducible for a fixed
// seed with dropout and noise disabled.
TrainResult train_network(const NetworkConfig& config,
                          const TrainingSchedule& schedule,
                          const std::vector<FeatureMatrix>& features,
                          const std::vector<std::vector<int>>& targets,
                          const std::vector<FeatureMatrix>& dev_features,
                          const std::vector<std::vector<int>>& dev_targets,
                          const TrainOptions& options = {});

double dataset_ce(const NetworkConfig& config,
                  const std::vector<double>& params,
                  const std::vector<FeatureMatrix>& features,
                  const std::vector<std::vector<int>>& targets);

struct PriorVector {
  std::vector<double> log_priors;
  double prior_scale = 1.0;
};

// Add-one smoothed relative state frequencies.
PriorVector estimate_priors(const std::vector<std::vector<int>>& targets,
                            int num_states);

// entry = log posterior - prior_scale * log prior; posterior floored 1e-10
Matrix scaled_loglik(const Matrix& posteriors, const PriorVector& priors);

void save_checkpoint(const std::string& path, const NetworkConfig& config,
                     const std::vector<double>& params);
std::pair<NetworkConfig, std::vector<double>> load_checkpoint(
    const std::string& path);

void write_dev_log(const std::string& path,
                   const std::vector<SubepochRecord>& records);

}  // namespace asrkit

#endif  // ASRKIT_NEURAL_HPP
