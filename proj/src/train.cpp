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

#include "rlr/train.hpp"

#include <algorithm>
#include <cmath>

#include "rlr/error.hpp"
#include "rlr/rng.hpp"

namespace rlr {

double batch_top1_hit_rate(const Matrix& logits, std::span<const TargetLabels> labels) {
  if (logits.rows() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    const auto row = logits.row(b);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    hits += labels[b].contains(best) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

TrainResult train(MlpModel& model, const Dataset& data, const LossConfig& loss_cfg,
                  const OptimizerConfig& opt_cfg, const TrainConfig& train_cfg) {
  data.validate();
  loss_cfg.validate();
  if (train_cfg.batch_size == 0) throw InvalidConfig("training.batch_size must be positive");
  if (train_cfg.trace_stride == 0) throw InvalidConfig("output.trace_stride must be positive");
  if (data.dim() != model.input_dim()) throw ShapeError("dataset dim does not match the model input");
  if (data.num_classes != model.num_classes()) {
    throw ShapeError("dataset K does not match the model output");
  }
  if (!is_logistic_family(loss_cfg.variant) && !data.single_label()) {
    throw UnsupportedVariant(std::string(variant_name(loss_cfg.variant)) +
                             " needs single-label data");
  }

  Optimizer optimizer(opt_cfg, model);
  Rng shuffle_rng(train_cfg.seed);
  TrainResult result;
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  const std::size_t K = data.num_classes;
  std::vector<LossOutput> outputs;

  for (std::size_t epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    const double lr = opt_cfg.learning_rate_at(epoch);
    const auto order = shuffle_rng.permutation(n);
    double epoch_loss = 0.0;
    std::size_t epoch_hits = 0;

    for (std::size_t start = 0; start < n; start += train_cfg.batch_size) {
      const std::size_t batch = std::min(train_cfg.batch_size, n - start);
      Matrix inputs(batch, d);
      std::vector<TargetLabels> labels;
      labels.reserve(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        const auto src = data.features.row(order[start + b]);
        std::copy(src.begin(), src.end(), inputs.row(b).begin());
        labels.push_back(data.labels[order[start + b]]);
      }

      const ForwardCache cache = model.forward(inputs);
      Matrix loss_grads(batch, K);
      outputs.clear();
      bool finite = true;
      for (std::size_t b = 0; b < batch; ++b) {
        const auto row = cache.logits.row(b);
        if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); })) {
          finite = false;
          break;
        }
        outputs.push_back(evaluate_loss(Logits(row), labels[b], loss_cfg));
        std::copy(outputs.back().grad.begin(), outputs.back().grad.end(), loss_grads.row(b).begin());
        finite = finite && std::isfinite(outputs.back().loss);
      }

      const double acc = batch_top1_hit_rate(cache.logits, labels);
      ++result.steps;
      const bool last_of_epoch = start + batch >= n;
      if (!finite) {
        if (!outputs.empty()) {
          record_step(result.trace, outputs, {result.steps, epoch, acc, lr});
        }
        result.diverged = true;
        result.message = "loss became non-finite at step " + std::to_string(result.steps);
        return result;
      }
      if ((result.steps - 1) % train_cfg.trace_stride == 0 || last_of_epoch) {
        record_step(result.trace, outputs, {result.steps, epoch, acc, lr});
      }
      for (const auto& o : outputs) epoch_loss += o.loss;
      epoch_hits += static_cast<std::size_t>(std::lround(acc * static_cast<double>(batch)));

      try {
        optimizer.step(model, model.backward(cache, loss_grads), lr);
      } catch (const NumericalError& e) {
        result.diverged = true;
        result.message = e.what();
        return result;
      }
    }
    result.trace.epochs.push_back({epoch, epoch_loss / static_cast<double>(n),
                                   static_cast<double>(epoch_hits) / static_cast<double>(n)});
  }
  return result;
}

}  // namespace rlr
