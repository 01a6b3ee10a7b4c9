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

#include "asrkit/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace asrkit {

std::string layer_type_name(LayerType t) {
  switch (t) {
    case LayerType::kFeedforwardTanh: return "feedforward-tanh";
    case LayerType::kUnidirectionalRecurrent: return "unidirectional-recurrent";
    case LayerType::kBidirectionalRecurrent: return "bidirectional-recurrent";
  }
  return "?";
}

LayerType parse_layer_type(const std::string& s) {
  if (s == "feedforward-tanh") return LayerType::kFeedforwardTanh;
  if (s == "unidirectional-recurrent")
    return LayerType::kUnidirectionalRecurrent;
  if (s == "bidirectional-recurrent") return LayerType::kBidirectionalRecurrent;
  throw DataError("unknown layer type: " + s);
}

void NetworkConfig::validate() const {
  if (num_layers < 1 || hidden_units < 1 || input_dim < 1 || output_dim < 1)
    throw DataError("network dimensions must be positive");
  if (dropout_rate < 0 || dropout_rate >= 1)
    throw DataError("dropout rate must be in [0, 1)");
}

double warmup_lr(const TrainingSchedule& schedule, int subepoch) {
  if (subepoch >= schedule.warmup_subepochs) return schedule.base_lr;
  return schedule.warmup_start_lr +
         subepoch * (schedule.base_lr - schedule.warmup_start_lr) /
             schedule.warmup_subepochs;
}

double newbob_step(const std::vector<double>& dev_history, double current_lr,
                   double decay, double improvement_threshold, double min_lr) {
  if (dev_history.empty())
    throw DataError("newbob_step requires at least one history entry");
  if (dev_history.size() < 2) return current_lr;
  const double prev = dev_history[dev_history.size() - 2];
  const double cur = dev_history.back();
  const double rel = (prev - cur) / std::abs(prev);
  if (rel < improvement_threshold)
    return std::max(current_lr * decay, min_lr);
  return current_lr;
}

NadamOptimizer::NadamOptimizer(std::size_t num_params,
                               const NadamConfig& config)
    : config_(config), m_(num_params, 0.0), v_(num_params, 0.0) {}

void NadamOptimizer::step(std::vector<double>& params,
                          const std::vector<double>& grad, double lr) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, t_);
  const double bc1_next = 1.0 - std::pow(b1, t_ + 1);
  const double bc2 = 1.0 - std::pow(b2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1 - b1) * grad[i];
    v_[i] = b2 * v_[i] + (1 - b2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1_next;
    const double g_hat = grad[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= lr * (b1 * m_hat + (1 - b1) * g_hat) /
                 (std::sqrt(v_hat) + config_.epsilon);
  }
}

std::vector<TensorSpec> network_tensors(const NetworkConfig& config) {
  config.validate();
  std::vector<TensorSpec> specs;
  std::size_t offset = 0;
  auto add = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    specs.push_back({name, offset, rows, cols});
    offset += rows * cols;
  };
  const int h = config.hidden_units;
  int in = config.input_dim;
  for (int l = 0; l < config.num_layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + "/";
    switch (config.layer_type) {
      case LayerType::kFeedforwardTanh:
        add(prefix + "W", h, in);
        add(prefix + "b", h, 1);
        break;
      case LayerType::kUnidirectionalRecurrent:
        add(prefix + "W", h, in);
        add(prefix + "U", h, h);
        add(prefix + "b", h, 1);
        break;
      case LayerType::kBidirectionalRecurrent:
        add(prefix + "Wf", h, in);
        add(prefix + "Uf", h, h);
        add(prefix + "bf", h, 1);
        add(prefix + "Wb", h, in);
        add(prefix + "Ub", h, h);
        add(prefix + "bb", h, 1);
        break;
    }
    in = config.layer_output_dim();
  }
  add("out/W", config.output_dim, in);
  add("out/b", config.output_dim, 1);
  return specs;
}

std::size_t num_parameters(const NetworkConfig& config) {
  auto specs = network_tensors(config);
  const auto& last = specs.back();
  return last.offset + last.rows * last.cols;
}

std::vector<double> init_parameters(const NetworkConfig& config,
                                    std::uint64_t seed) {
  auto specs = network_tensors(config);
  std::vector<double> params(num_parameters(config), 0.0);
  std::mt19937_64 rng(seed);
  for (const auto& spec : specs) {
    if (spec.cols == 1) continue;  // biases start at zero
    const double r = std::sqrt(6.0 / static_cast<double>(spec.rows + spec.cols));
    std::uniform_real_distribution<double> dist(-r, r);
    for (std::size_t i = 0; i < spec.rows * spec.cols; ++i)
      params[spec.offset + i] = dist(rng);
  }
  return params;
}

DropoutMasks sample_dropout_masks(const NetworkConfig& config,
                                  std::mt19937_64& rng) {
  DropoutMasks masks;
  const double p = config.dropout_rate;
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int l = 0; l < config.num_layers; ++l) {
    std::vector<double> mask(config.layer_output_dim());
    for (double& m : mask)
      m = (p > 0 && dist(rng) < p) ? 0.0 : 1.0 / (1.0 - p);
    masks.layer_masks.push_back(std::move(mask));
  }
  return masks;
}

namespace {

// read-only view of a named tensor inside the flat parameter vector
struct View {
  const double* p;
  std::size_t rows, cols;
  double at(std::size_t r, std::size_t c) const { return p[r * cols + c]; }
};

struct MutView {
  double* p;
  std::size_t rows, cols;
  double& at(std::size_t r, std::size_t c) { return p[r * cols + c]; }
};

struct TensorMap {
  std::vector<TensorSpec> specs;

  View view(const std::vector<double>& params, const std::string& name) const {
    for (const auto& s : specs)
      if (s.name == name) return {params.data() + s.offset, s.rows, s.cols};
    throw DataError("no tensor named " + name);
  }
  MutView view(std::vector<double>& params, const std::string& name) const {
    for (const auto& s : specs)
      if (s.name == name) return {params.data() + s.offset, s.rows, s.cols};
    throw DataError("no tensor named " + name);
  }
};

struct ForwardCache {
  std::vector<Matrix> inputs;  // input fed to each layer (and to the output)
  std::vector<Matrix> h_fwd;   // hidden states (tanh outputs), per layer
  std::vector<Matrix> h_bwd;   // backward-direction states (bi only)
  Matrix logits;
  Matrix post;
};

void affine_rows(const Matrix& x, const View& w, const View& b, Matrix& out) {
  const std::size_t t_max = x.rows();
  out = Matrix(t_max, w.rows);
  for (std::size_t t = 0; t < t_max; ++t)
    for (std::size_t i = 0; i < w.rows; ++i) {
      double s = b.at(i, 0);
      for (std::size_t j = 0; j < w.cols; ++j) s += w.at(i, j) * x.at(t, j);
      out.at(t, i) = s;
    }
}

ForwardCache forward_pass(const NetworkConfig& config,
                          const std::vector<double>& params,
                          const TensorMap& map, const Matrix& input,
                          const DropoutMasks* masks) {
  ForwardCache cache;
  const std::size_t t_max = input.rows();
  const int h = config.hidden_units;
  Matrix x = input;
  for (int l = 0; l < config.num_layers; ++l) {
    cache.inputs.push_back(x);
    const std::string prefix = "layer" + std::to_string(l) + "/";
    Matrix out;
    if (config.layer_type == LayerType::kFeedforwardTanh) {
      affine_rows(x, map.view(params, prefix + "W"),
                  map.view(params, prefix + "b"), out);
      for (double& v : out.data()) v = std::tanh(v);
      cache.h_fwd.push_back(out);
      cache.h_bwd.push_back({});
    } else if (config.layer_type == LayerType::kUnidirectionalRecurrent) {
      auto w = map.view(params, prefix + "W");
      auto u = map.view(params, prefix + "U");
      auto b = map.view(params, prefix + "b");
      out = Matrix(t_max, h);
      for (std::size_t t = 0; t < t_max; ++t)
        for (int i = 0; i < h; ++i) {
          double s = b.at(i, 0);
          for (std::size_t j = 0; j < x.cols(); ++j)
            s += w.at(i, j) * x.at(t, j);
          if (t > 0)
            for (int j = 0; j < h; ++j) s += u.at(i, j) * out.at(t - 1, j);
          out.at(t, i) = std::tanh(s);
        }
      cache.h_fwd.push_back(out);
      cache.h_bwd.push_back({});
    } else {
      auto run = [&](bool reverse, const char* ws, const char* us,
                     const char* bs) {
        auto w = map.view(params, prefix + ws);
        auto u = map.view(params, prefix + us);
        auto b = map.view(params, prefix + bs);
        Matrix hid(t_max, h);
        for (std::size_t step = 0; step < t_max; ++step) {
          const std::size_t t = reverse ? t_max - 1 - step : step;
          for (int i = 0; i < h; ++i) {
            double s = b.at(i, 0);
            for (std::size_t j = 0; j < x.cols(); ++j)
              s += w.at(i, j) * x.at(t, j);
            if (step > 0) {
              const std::size_t tp = reverse ? t + 1 : t - 1;
              for (int j = 0; j < h; ++j) s += u.at(i, j) * hid.at(tp, j);
            }
            hid.at(t, i) = std::tanh(s);
          }
        }
        return hid;
      };
      Matrix hf = run(false, "Wf", "Uf", "bf");
      Matrix hb = run(true, "Wb", "Ub", "bb");
      out = Matrix(t_max, 2 * h);
      for (std::size_t t = 0; t < t_max; ++t) {
        for (int i = 0; i < h; ++i) {
          out.at(t, i) = hf.at(t, i);
          out.at(t, h + i) = hb.at(t, i);
        }
      }
      cache.h_fwd.push_back(std::move(hf));
      cache.h_bwd.push_back(std::move(hb));
    }
    if (masks) {
      const auto& mask = masks->layer_masks[l];
      for (std::size_t t = 0; t < t_max; ++t)
        for (std::size_t i = 0; i < out.cols(); ++i) out.at(t, i) *= mask[i];
    }
    x = std::move(out);
  }
  cache.inputs.push_back(x);
  affine_rows(x, map.view(params, "out/W"), map.view(params, "out/b"),
              cache.logits);
  cache.post = Matrix(t_max, config.output_dim);
  for (std::size_t t = 0; t < t_max; ++t) {
    double mx = kNegInf;
    for (int k = 0; k < config.output_dim; ++k)
      mx = std::max(mx, cache.logits.at(t, k));
    double z = 0;
    for (int k = 0; k < config.output_dim; ++k)
      z += std::exp(cache.logits.at(t, k) - mx);
    for (int k = 0; k < config.output_dim; ++k)
      cache.post.at(t, k) = std::exp(cache.logits.at(t, k) - mx) / z;
  }
  return cache;
}

// Backpropagates dL/dlogits; adds parameter gradients into `grad` and
// ignores the gradient w.r.t. the network input.
void backward_pass(const NetworkConfig& config,
                   const std::vector<double>& params, const TensorMap& map,
                   const ForwardCache& cache, const Matrix& dlogits,
                   std::vector<double>& grad, const DropoutMasks* masks) {
  const std::size_t t_max = dlogits.rows();
  const int h = config.hidden_units;
  TensorMap gmap = map;

  // output layer
  {
    auto w = map.view(params, "out/W");
    auto gw = gmap.view(grad, "out/W");
    auto gb = gmap.view(grad, "out/b");
    const Matrix& x = cache.inputs.back();
    for (std::size_t t = 0; t < t_max; ++t)
      for (std::size_t i = 0; i < w.rows; ++i) {
        const double d = dlogits.at(t, i);
        gb.at(i, 0) += d;
        for (std::size_t j = 0; j < w.cols; ++j)
          gw.at(i, j) += d * x.at(t, j);
      }
    (void)h;
  }

  // dL/d(output-layer input)
  Matrix dx(t_max, cache.inputs.back().cols());
  {
    auto w = map.view(params, "out/W");
    for (std::size_t t = 0; t < t_max; ++t)
      for (std::size_t j = 0; j < w.cols; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < w.rows; ++i)
          s += w.at(i, j) * dlogits.at(t, i);
        dx.at(t, j) = s;
      }
  }

  for (int l = config.num_layers - 1; l >= 0; --l) {
    const std::string prefix = "layer" + std::to_string(l) + "/";
    const Matrix& x = cache.inputs[l];
    if (masks) {
      const auto& mask = masks->layer_masks[l];
      for (std::size_t t = 0; t < t_max; ++t)
        for (std::size_t i = 0; i < dx.cols(); ++i) dx.at(t, i) *= mask[i];
    }
    Matrix dx_prev(t_max, x.cols());

    if (config.layer_type == LayerType::kFeedforwardTanh) {
      auto w = map.view(params, prefix + "W");
      auto gw = gmap.view(grad, prefix + "W");
      auto gb = gmap.view(grad, prefix + "b");
      const Matrix& hid = cache.h_fwd[l];
      for (std::size_t t = 0; t < t_max; ++t)
        for (std::size_t i = 0; i < w.rows; ++i) {
          const double hv = hid.at(t, i);
          const double da = dx.at(t, i) * (1 - hv * hv);
          gb.at(i, 0) += da;
          for (std::size_t j = 0; j < w.cols; ++j) {
            gw.at(i, j) += da * x.at(t, j);
            dx_prev.at(t, j) += w.at(i, j) * da;
          }
        }
    } else if (config.layer_type == LayerType::kUnidirectionalRecurrent) {
      auto w = map.view(params, prefix + "W");
      auto u = map.view(params, prefix + "U");
      auto gw = gmap.view(grad, prefix + "W");
      auto gu = gmap.view(grad, prefix + "U");
      auto gb = gmap.view(grad, prefix + "b");
      const Matrix& hid = cache.h_fwd[l];
      std::vector<double> carry(h, 0.0);
      for (std::size_t t = t_max; t-- > 0;) {
        std::vector<double> da(h);
        for (int i = 0; i < h; ++i) {
          const double hv = hid.at(t, i);
          da[i] = (dx.at(t, i) + carry[i]) * (1 - hv * hv);
          gb.at(i, 0) += da[i];
          for (std::size_t j = 0; j < x.cols(); ++j) {
            gw.at(i, j) += da[i] * x.at(t, j);
            dx_prev.at(t, j) += w.at(i, j) * da[i];
          }
          if (t > 0)
            for (int j = 0; j < h; ++j) gu.at(i, j) += da[i] * hid.at(t - 1, j);
        }
        std::fill(carry.begin(), carry.end(), 0.0);
        if (t > 0)
          for (int j = 0; j < h; ++j)
            for (int i = 0; i < h; ++i) carry[j] += u.at(i, j) * da[i];
      }
    } else {
      auto run = [&](bool reverse, const Matrix& hid, const char* ws,
                     const char* us, const char* bs, int col_off) {
        auto w = map.view(params, prefix + ws);
        auto u = map.view(params, prefix + us);
        auto gw = gmap.view(grad, prefix + ws);
        auto gu = gmap.view(grad, prefix + us);
        auto gb = gmap.view(grad, prefix + bs);
        std::vector<double> carry(h, 0.0);
        for (std::size_t step = t_max; step-- > 0;) {
          // iterate against the direction's time order
          const std::size_t t = reverse ? t_max - 1 - step : step;
          std::vector<double> da(h);
          for (int i = 0; i < h; ++i) {
            const double hv = hid.at(t, i);
            da[i] = (dx.at(t, col_off + i) + carry[i]) * (1 - hv * hv);
            gb.at(i, 0) += da[i];
            for (std::size_t j = 0; j < x.cols(); ++j) {
              gw.at(i, j) += da[i] * x.at(t, j);
              dx_prev.at(t, j) += w.at(i, j) * da[i];
            }
            const bool has_prev = step > 0;
            if (has_prev) {
              const std::size_t tp = reverse ? t + 1 : t - 1;
              for (int j = 0; j < h; ++j) gu.at(i, j) += da[i] * hid.at(tp, j);
            }
          }
          std::fill(carry.begin(), carry.end(), 0.0);
          if (step > 0)
            for (int j = 0; j < h; ++j)
              for (int i = 0; i < h; ++i) carry[j] += u.at(i, j) * da[i];
        }
      };
      run(false, cache.h_fwd[l], "Wf", "Uf", "bf", 0);
      run(true, cache.h_bwd[l], "Wb", "Ub", "bb", h);
    }
    dx = std::move(dx_prev);
  }
}

Matrix to_matrix(const FeatureMatrix& fm) { return fm.values; }

}  // namespace

Matrix network_forward(const NetworkConfig& config,
                       const std::vector<double>& params,
                       const FeatureMatrix& features) {
  if (features.dim() != static_cast<std::size_t>(config.input_dim))
    throw DataError("network_forward: input dimension mismatch");
  TensorMap map{network_tensors(config)};
  return forward_pass(config, params, map, to_matrix(features), nullptr).post;
}

double ce_loss_and_gradient(const NetworkConfig& config,
                            const std::vector<double>& params,
                            const std::vector<const FeatureMatrix*>& features,
                            const std::vector<const std::vector<int>*>& targets,
                            std::vector<double>* grad,
                            const DropoutMasks* masks) {
  TensorMap map{network_tensors(config)};
  if (grad) grad->assign(params.size(), 0.0);
  std::size_t total_frames = 0;
  for (const auto* f : features) total_frames += f->frames();
  if (total_frames == 0) throw DataError("empty training batch");

  double ce = 0;
  for (std::size_t s = 0; s < features.size(); ++s) {
    const auto& fm = *features[s];
    const auto& tgt = *targets[s];
    if (tgt.size() != fm.frames())
      throw DataError("target length does not match frame count");
    ForwardCache cache =
        forward_pass(config, params, map, to_matrix(fm), masks);
    Matrix dlogits(fm.frames(), config.output_dim);
    for (std::size_t t = 0; t < fm.frames(); ++t) {
      const int k = tgt[t];
      if (k < 0 || k >= config.output_dim)
        throw DataError("target state out of range");
      ce -= std::log(std::max(cache.post.at(t, k), 1e-300));
      if (grad)
        for (int j = 0; j < config.output_dim; ++j)
          dlogits.at(t, j) =
              (cache.post.at(t, j) - (j == k ? 1.0 : 0.0)) /
              static_cast<double>(total_frames);
    }
    if (grad) backward_pass(config, params, map, cache, dlogits, *grad, masks);
  }
  ce /= static_cast<double>(total_frames);

  double l2 = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    l2 += params[i] * params[i];
    if (grad) (*grad)[i] += config.l2_coeff * params[i];
  }
  return ce + 0.5 * config.l2_coeff * l2;
}

void backprop_logpost_gradient(const NetworkConfig& config,
                               const std::vector<double>& params,
                               const FeatureMatrix& features,
                               const Matrix& dobj_dlogpost,
                               std::vector<double>* grad) {
  TensorMap map{network_tensors(config)};
  ForwardCache cache =
      forward_pass(config, params, map, to_matrix(features), nullptr);
  const std::size_t t_max = features.frames();
  Matrix dlogits(t_max, config.output_dim);
  // d logpost_k / d logit_j = delta_kj - p_j
  for (std::size_t t = 0; t < t_max; ++t) {
    double total = 0;
    for (int k = 0; k < config.output_dim; ++k)
      total += dobj_dlogpost.at(t, k);
    for (int j = 0; j < config.output_dim; ++j)
      dlogits.at(t, j) =
          dobj_dlogpost.at(t, j) - cache.post.at(t, j) * total;
  }
  backward_pass(config, params, map, cache, dlogits, *grad, nullptr);
}

double dataset_ce(const NetworkConfig& config,
                  const std::vector<double>& params,
                  const std::vector<FeatureMatrix>& features,
                  const std::vector<std::vector<int>>& targets) {
  std::vector<const FeatureMatrix*> fp;
  std::vector<const std::vector<int>*> tp;
  for (std::size_t i = 0; i < features.size(); ++i) {
    fp.push_back(&features[i]);
    tp.push_back(&targets[i]);
  }
  NetworkConfig eval_config = config;
  eval_config.l2_coeff = 0;  // dev score is plain CE
  return ce_loss_and_gradient(eval_config, params, fp, tp, nullptr, nullptr);
}

TrainResult train_network(const NetworkConfig& config,
                          const TrainingSchedule& schedule,
                          const std::vector<FeatureMatrix>& features,
                          const std::vector<std::vector<int>>& targets,
                          const std::vector<FeatureMatrix>& dev_features,
                          const std::vector<std::vector<int>>& dev_targets,
                          const TrainOptions& options) {
  config.validate();
  if (features.empty() || features.size() != targets.size())
    throw DataError("train_network: features/targets mismatch");

  std::size_t total_frames = 0;
  for (const auto& f : features) total_frames += f.frames();
  const std::size_t subepoch_frames = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(total_frames * schedule.subepoch_fraction)));
  const int num_subepochs = std::max(
      1, static_cast<int>(
             std::llround(schedule.total_passes / schedule.subepoch_fraction)));

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t pos = 0;
  auto next_utt = [&]() {
    if (pos == order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      pos = 0;
    }
    return order[pos++];
  };

  TrainResult result;
  result.params = init_parameters(config, options.seed);
  NadamOptimizer opt(result.params.size());
  std::vector<double> grad;
  std::vector<double> dev_history;
  std::normal_distribution<double> noise(
      0.0, std::sqrt(config.gradient_noise_variance));

  double lr = warmup_lr(schedule, 0);
  for (int se = 0; se < num_subepochs; ++se) {
    std::size_t consumed = 0;
    while (consumed < subepoch_frames) {
      std::vector<const FeatureMatrix*> batch_f;
      std::vector<const std::vector<int>*> batch_t;
      std::size_t batch_frames = 0;
      while (batch_frames < static_cast<std::size_t>(
                                schedule.batch_size_frames) &&
             consumed + batch_frames < subepoch_frames) {
        const std::size_t u = next_utt();
        batch_f.push_back(&features[u]);
        batch_t.push_back(&targets[u]);
        batch_frames += features[u].frames();
      }
      consumed += batch_frames;

      DropoutMasks masks;
      const bool use_dropout =
          options.enable_dropout && config.dropout_rate > 0;
      if (use_dropout) masks = sample_dropout_masks(config, rng);
      const double loss =
          ce_loss_and_gradient(config, result.params, batch_f, batch_t, &grad,
                               use_dropout ? &masks : nullptr);
      if (!std::isfinite(loss))
        throw EstimationError(
            "non-finite training loss at subepoch " + std::to_string(se) +
            " (lr " + std::to_string(lr) + ")");
      if (options.enable_gradient_noise && config.gradient_noise_variance > 0)
        for (double& g : grad) g += noise(rng);
      opt.step(result.params, grad, lr);
    }

    const double dev_ce =
        dataset_ce(config, result.params, dev_features, dev_targets);
    result.records.push_back({se, dev_ce, lr});
    dev_history.push_back(dev_ce);

    if (se + 1 <= schedule.warmup_subepochs)
      lr = warmup_lr(schedule, se + 1);
    else
      lr = newbob_step(dev_history, lr, schedule.newbob_decay,
                       schedule.improvement_threshold, schedule.min_lr);
  }
  return result;
}

PriorVector estimate_priors(const std::vector<std::vector<int>>& targets,
                            int num_states) {
  std::vector<double> counts(num_states, 1.0);  // add-one smoothing
  double total = num_states;
  for (const auto& seq : targets)
    for (int s : seq) {
      if (s < 0 || s >= num_states)
        throw DataError("estimate_priors: state out of range");
      counts[s] += 1;
      total += 1;
    }
  PriorVector pv;
  pv.log_priors.resize(num_states);
  for (int s = 0; s < num_states; ++s)
    pv.log_priors[s] = std::log(counts[s] / total);
  return pv;
}

Matrix scaled_loglik(const Matrix& posteriors, const PriorVector& priors) {
  if (posteriors.cols() != priors.log_priors.size())
    throw DataError("scaled_loglik: shape mismatch");
  Matrix out(posteriors.rows(), posteriors.cols());
  for (std::size_t t = 0; t < posteriors.rows(); ++t)
    for (std::size_t k = 0; k < posteriors.cols(); ++k)
      out.at(t, k) = std::log(std::max(posteriors.at(t, k), 1e-10)) -
                     priors.prior_scale * priors.log_priors[k];
  return out;
}

void save_checkpoint(const std::string& path, const NetworkConfig& config,
                     const std::vector<double>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << "NNCK 1\n";
  out << "layer_type " << layer_type_name(config.layer_type) << "\n";
  out << "num_layers " << config.num_layers << "\n";
  out << "hidden_units " << config.hidden_units << "\n";
  out << "input_dim " << config.input_dim << "\n";
  out << "output_dim " << config.output_dim << "\n";
  out << "dropout_rate " << config.dropout_rate << "\n";
  out << "l2_coeff " << config.l2_coeff << "\n";
  out << "gradient_noise_variance " << config.gradient_noise_variance << "\n";
  out << "binary\n";
  for (const auto& spec : network_tensors(config)) {
    std::uint32_t name_len = static_cast<std::uint32_t>(spec.name.size());
    out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    out.write(spec.name.data(), name_len);
    std::uint64_t count = spec.rows * spec.cols;
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(params.data() + spec.offset),
              static_cast<std::streamsize>(count * sizeof(double)));
  }
}

std::pair<NetworkConfig, std::vector<double>> load_checkpoint(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string line;
  std::getline(in, line);
  if (line != "NNCK 1") throw DataError(path + ": not a checkpoint file");
  NetworkConfig config;
  while (std::getline(in, line)) {
    if (line == "binary") break;
    auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string val = line.substr(sp + 1);
    if (key == "layer_type") config.layer_type = parse_layer_type(val);
    else if (key == "num_layers") config.num_layers = std::stoi(val);
    else if (key == "hidden_units") config.hidden_units = std::stoi(val);
    else if (key == "input_dim") config.input_dim = std::stoi(val);
    else if (key == "output_dim") config.output_dim = std::stoi(val);
    else if (key == "dropout_rate") config.dropout_rate = std::stod(val);
    else if (key == "l2_coeff") config.l2_coeff = std::stod(val);
    else if (key == "gradient_noise_variance")
      config.gradient_noise_variance = std::stod(val);
    else throw DataError(path + ": unknown checkpoint key '" + key + "'");
  }
  std::vector<double> params(num_parameters(config), 0.0);
  for (const auto& spec : network_tensors(config)) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (name != spec.name)
      throw DataError(path + ": unexpected tensor '" + name + "'");
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (count != spec.rows * spec.cols)
      throw DataError(path + ": tensor size mismatch for " + name);
    in.read(reinterpret_cast<char*>(params.data() + spec.offset),
            static_cast<std::streamsize>(count * sizeof(double)));
  }
  if (!in) throw DataError(path + ": truncated checkpoint");
  return {config, std::move(params)};
}

void write_dev_log(const std::string& path,
                   const std::vector<SubepochRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dev log: " + path);
  out << "# subepoch ce lr\n";
  for (const auto& r : records)
    out << r.subepoch << ' ' << r.dev_ce << ' ' << r.lr << '\n';
}

}  // namespace asrkit
