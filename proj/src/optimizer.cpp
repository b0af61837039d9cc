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

#include <cmath>
#include <string>

#include "rlr/error.hpp"
#include "rlr/model.hpp"

namespace rlr {

std::string_view optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgdMomentum;
  if (name == "adam") return OptimizerKind::kAdam;
  throw InvalidConfig("unknown optimizer: " + std::string(name));
}

OptimizerConfig OptimizerConfig::adam_defaults() {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kAdam;
  cfg.learning_rate = 3e-4;
  return cfg;
}

double OptimizerConfig::learning_rate_at(std::size_t epoch) const {
  return decay_epoch != 0 && epoch >= decay_epoch ? learning_rate * decay_factor : learning_rate;
}

void OptimizerConfig::validate() const {
  // A zero learning rate is allowed: it freezes the model.
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidConfig("optimizer.learning_rate must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidConfig("optimizer.momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InvalidConfig("optimizer.weight_decay must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw InvalidConfig("optimizer.adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw InvalidConfig("optimizer.adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw InvalidConfig("optimizer.adam_eps must be > 0");
  if (!(decay_factor > 0.0)) throw InvalidConfig("optimizer.decay_factor must be > 0");
}

void sgd_momentum_update(std::span<double> params, std::span<const double> grads,
                         std::span<double> velocity, double lr, double momentum,
                         double weight_decay) {
  if (grads.size() != params.size() || velocity.size() != params.size()) {
    throw ShapeError("sgd update: parameter, gradient and velocity sizes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + (grads[i] + weight_decay * params[i]);
    params[i] -= lr * velocity[i];
  }
}

void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> first_moment, std::span<double> second_moment, double lr,
                 double beta1, double beta2, double eps, double weight_decay, std::uint64_t step) {
  if (grads.size() != params.size() || first_moment.size() != params.size() ||
      second_moment.size() != params.size()) {
    throw ShapeError("adam update: buffer sizes differ");
  }
  if (step == 0) throw InvalidInput("adam step count is 1-based");
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] + weight_decay * params[i];
    first_moment[i] = beta1 * first_moment[i] + (1.0 - beta1) * g;
    second_moment[i] = beta2 * second_moment[i] + (1.0 - beta2) * g * g;
    const double m_hat = first_moment[i] / c1;
    const double v_hat = second_moment[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

Optimizer::Optimizer(const OptimizerConfig& cfg, const MlpModel& model)
    : cfg_(cfg), first_(model.zero_gradients()) {
  cfg_.validate();
  if (cfg_.kind == OptimizerKind::kAdam) second_ = model.zero_gradients();
}

namespace {

void check_finite(std::span<const double> g, std::size_t layer, const char* what) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw NumericalError("non-finite gradient at layer " + std::to_string(layer) + " " + what +
                           "[" + std::to_string(i) + "] = " + std::to_string(g[i]));
    }
  }
}

}  // namespace

void Optimizer::step(MlpModel& model, const Gradients& grads, double lr) {
  if (grads.size() != model.layers().size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    const auto& layer = model.layers()[l];
    if (grads[l].weights.rows() != layer.weights.rows() ||
        grads[l].weights.cols() != layer.weights.cols() ||
        grads[l].biases.size() != layer.biases.size()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
    }
    check_finite(grads[l].weights.values(), l, "weights");
    check_finite(grads[l].biases, l, "biases");
  }
  ++steps_;
  auto& layers = model.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (cfg_.kind == OptimizerKind::kSgdMomentum) {
      sgd_momentum_update(layers[l].weights.values(), grads[l].weights.values(),
                          first_[l].weights.values(), lr, cfg_.momentum, cfg_.weight_decay);
      sgd_momentum_update(layers[l].biases, grads[l].biases, first_[l].biases, lr, cfg_.momentum,
                          0.0);
    } else {
      adam_update(layers[l].weights.values(), grads[l].weights.values(),
                  first_[l].weights.values(), second_[l].weights.values(), lr, cfg_.adam_beta1,
                  cfg_.adam_beta2, cfg_.adam_eps, cfg_.weight_decay, steps_);
      adam_update(layers[l].biases, grads[l].biases, first_[l].biases, second_[l].biases, lr,
                  cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps, 0.0, steps_);
    }
  }
}

}  // namespace rlr
