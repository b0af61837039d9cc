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
#include <string>

#include "rlr/data.hpp"
#include "rlr/diagnostics.hpp"
#include "rlr/losses.hpp"
#include "rlr/model.hpp"

namespace rlr {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;     // drives the per-epoch shuffles
  std::size_t trace_stride = 1;  // record every n-th step (last step of an epoch always)
};

struct TrainResult {
  TrainingTrace trace;
  bool diverged = false;
  std::string message;
  std::size_t steps = 0;
};

/// Mini-batch training on the per-sample mean loss. Each epoch visits a
/// fresh permutation of the rows; the last partial batch is kept. Training
/// stops early, returning the partial trace, if a loss turns non-finite or
/// the optimizer rejects a gradient.
TrainResult train(MlpModel& model, const Dataset& data, const LossConfig& loss_cfg,
                  const OptimizerConfig& opt_cfg, const TrainConfig& train_cfg);

/// Fraction of rows whose arg-max logit (lowest index on ties) is one of
/// the row's labels.
double batch_top1_hit_rate(const Matrix& logits, std::span<const TargetLabels> labels);

}  // namespace rlr
