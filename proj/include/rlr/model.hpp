// Copyright 2026 The rlr Authors
//
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rlr/matrix.hpp"
#include "rlr/rng.hpp"

namespace rlr {

/// One affine layer: weights are [out x in] row-major, so output o is
/// dot(weights.row(o), input) + biases[o].
struct DenseLayer {
  Matrix weights;
  std::vector<double> biases;

  std::size_t in_dim() const noexcept { return weights.cols(); }
  std::size_t out_dim() const noexcept { return weights.rows(); }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Parameter gradients share the layer layout.
using Gradients = std::vector<DenseLayer>;

/// Activations recorded by forward(). Bound to the model state that produced
/// it: any parameter update makes it stale.
struct ForwardCache {
  std::vector<Matrix> inputs;  // inputs[l] feeds layer l; inputs.back() is the embedding
  Matrix logits;
  std::uint64_t model_id = 0;
  std::uint64_t model_version = 0;
};

/// Fully connected network: ReLU between layers, identity on the logits.
class MlpModel {
 public:
  /// All-zero parameters. layer_dims = {input, hidden..., K}.
  explicit MlpModel(std::vector<std::size_t> layer_dims);

  /// He-style init: hidden weights ~ N(0, 2/fan_in), output weights
  /// ~ N(0, 1/fan_in), biases zero.
  static MlpModel initialized(std::vector<std::size_t> layer_dims, std::uint64_t seed);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t input_dim() const noexcept { return dims_.front(); }
  std::size_t num_classes() const noexcept { return dims_.back(); }
  std::size_t embedding_dim() const noexcept { return dims_[dims_.size() - 2]; }
  std::size_t num_parameters() const;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  /// Mutable access invalidates outstanding caches.
  std::vector<DenseLayer>& mutable_layers();

  std::uint64_t version() const noexcept { return version_; }

  ForwardCache forward(const Matrix& batch) const;

  /// Penultimate-layer activations (the input itself when there is no
  /// hidden layer).
  Matrix embed(const Matrix& batch) const;

  /// Batch-mean parameter gradients for per-sample logit gradients
  /// loss_grads [B x K].
  Gradients backward(const ForwardCache& cache, const Matrix& loss_grads) const;

  Gradients zero_gradients() const;

  friend bool operator==(const MlpModel& a, const MlpModel& b) {
    return a.dims_ == b.dims_ && a.layers_ == b.layers_;
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<DenseLayer> layers_;
  std::uint64_t id_;
  std::uint64_t version_ = 0;
};

enum class OptimizerKind { kSgdMomentum, kAdam };

std::string_view optimizer_name(OptimizerKind k);  // "sgd" | "adam"
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgdMomentum;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Constant schedule with one optional step decay; 0 disables it.
  std::size_t decay_epoch = 0;
  double decay_factor = 0.1;

  static OptimizerConfig sgd_defaults() { return {}; }
  static OptimizerConfig adam_defaults();

  double learning_rate_at(std::size_t epoch) const;
  void validate() const;
};

/// SGD with momentum: v <- mu v + (g + lambda theta); theta <- theta - lr v.
void sgd_momentum_update(std::span<double> params, std::span<const double> grads,
                         std::span<double> velocity, double lr, double momentum,
                         double weight_decay);

/// Adam with bias correction; weight decay is added to the gradient (L2),
/// not decoupled. `step` is the 1-based update count.
void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> first_moment, std::span<double> second_moment, double lr,
                 double beta1, double beta2, double eps, double weight_decay, std::uint64_t step);

/// Owns the per-parameter moment buffers, shaped like the model. Weight
/// decay applies to weights only; biases are never decayed.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, const MlpModel& model);

  /// Throws NumericalError naming the first non-finite gradient entry.
  void step(MlpModel& model, const Gradients& grads, double lr);

  const OptimizerConfig& config() const noexcept { return cfg_; }
  std::uint64_t steps() const noexcept { return steps_; }
  const Gradients& first_moment() const noexcept { return first_; }
  const Gradients& second_moment() const noexcept { return second_; }

 private:
  OptimizerConfig cfg_;
  Gradients first_;   // velocity for SGD
  Gradients second_;  // unused for SGD
  std::uint64_t steps_ = 0;
};

/// Checkpoint file: JSON with
///   {"format": "rlr-checkpoint", "version": 1, "seed": <u64>,
///    "layer_dims": [...],
///    "layers": [{"weights": [row-major out x in], "biases": [...]}, ...]}
/// Doubles are written in shortest round-trip form.
void save_checkpoint(const std::filesystem::path& path, const MlpModel& model, std::uint64_t seed);

struct Checkpoint {
  MlpModel model;
  std::uint64_t seed;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json checkpoint_to_json(const MlpModel& model, std::uint64_t seed);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

}  // namespace rlr
