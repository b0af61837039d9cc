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

#include "rlr/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "rlr/error.hpp"
#include "rlr/kernels.hpp"

namespace rlr {

namespace {

std::uint64_t next_model_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

MlpModel::MlpModel(std::vector<std::size_t> layer_dims)
    : dims_(std::move(layer_dims)), id_(next_model_id()) {
  if (dims_.size() < 2) throw ShapeError("a model needs at least input and output dims");
  for (std::size_t d : dims_) {
    if (d == 0) throw ShapeError("layer dims must be positive");
  }
  layers_.reserve(dims_.size() - 1);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    layers_.push_back({Matrix(dims_[l + 1], dims_[l]), std::vector<double>(dims_[l + 1], 0.0)});
  }
}

MlpModel MlpModel::initialized(std::vector<std::size_t> layer_dims, std::uint64_t seed) {
  MlpModel model(std::move(layer_dims));
  Rng rng(seed);
  for (std::size_t l = 0; l < model.layers_.size(); ++l) {
    auto& layer = model.layers_[l];
    const bool output = l + 1 == model.layers_.size();
    const double fan_in = static_cast<double>(layer.in_dim());
    const double stddev = std::sqrt((output ? 1.0 : 2.0) / fan_in);
    for (double& w : layer.weights.values()) w = stddev * rng.normal();
  }
  return model;
}

std::size_t MlpModel::num_parameters() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.values().size() + layer.biases.size();
  return n;
}

std::vector<DenseLayer>& MlpModel::mutable_layers() {
  ++version_;
  return layers_;
}

ForwardCache MlpModel::forward(const Matrix& batch) const {
  if (batch.cols() != input_dim()) {
    throw ShapeError("input dim " + std::to_string(batch.cols()) + " does not match model input " +
                     std::to_string(input_dim()));
  }
  const auto& k = kernels::active();
  ForwardCache cache;
  cache.model_id = id_;
  cache.model_version = version_;
  cache.inputs.reserve(layers_.size());
  cache.inputs.push_back(batch);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const Matrix& in = cache.inputs.back();
    Matrix out(in.rows(), layer.out_dim());
    for (std::size_t b = 0; b < in.rows(); ++b) {
      k.matvec_bias(layer.weights.values().data(), layer.biases.data(), in.row(b).data(),
                    out.row(b).data(), layer.out_dim(), layer.in_dim());
    }
    if (l + 1 == layers_.size()) {
      cache.logits = std::move(out);
    } else {
      for (double& v : out.values()) v = std::max(v, 0.0);
      cache.inputs.push_back(std::move(out));
    }
  }
  return cache;
}

Matrix MlpModel::embed(const Matrix& batch) const {
  ForwardCache cache = forward(batch);
  return std::move(cache.inputs.back());
}

Gradients MlpModel::zero_gradients() const {
  Gradients g;
  g.reserve(layers_.size());
  for (const auto& layer : layers_) {
    g.push_back({Matrix(layer.out_dim(), layer.in_dim()), std::vector<double>(layer.out_dim(), 0.0)});
  }
  return g;
}

Gradients MlpModel::backward(const ForwardCache& cache, const Matrix& loss_grads) const {
  if (cache.model_id != id_ || cache.model_version != version_) {
    throw ContractViolation("forward cache is stale: the model changed after forward()");
  }
  const std::size_t batch = cache.logits.rows();
  if (loss_grads.rows() != batch || loss_grads.cols() != num_classes()) {
    throw ShapeError("loss gradient shape does not match the cached logits");
  }
  if (batch == 0) throw ShapeError("backward on an empty batch");
  const auto& k = kernels::active();
  Gradients grads = zero_gradients();

  // delta holds d(mean loss)/d(pre-activation) of the current layer.
  Matrix delta = loss_grads;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (double& v : delta.values()) v *= inv_batch;

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const Matrix& in = cache.inputs[l];
    auto& g = grads[l];
    for (std::size_t b = 0; b < batch; ++b) {
      const auto d = delta.row(b);
      const auto x = in.row(b);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        if (d[o] == 0.0) continue;
        k.axpy(d[o], x.data(), g.weights.row(o).data(), x.size());
        g.biases[o] += d[o];
      }
    }
    if (l == 0) break;
    Matrix prev(batch, layer.in_dim());
    for (std::size_t b = 0; b < batch; ++b) {
      const auto d = delta.row(b);
      auto p = prev.row(b);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        if (d[o] == 0.0) continue;
        k.axpy(d[o], layer.weights.row(o).data(), p.data(), p.size());
      }
      // ReLU: the cached input of layer l is relu(pre-activation).
      const auto act = in.row(b);
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (!(act[j] > 0.0)) p[j] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return grads;
}

}  // namespace rlr
