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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlr/losses.hpp"

namespace rlr {

/// One row of the training trace.
///
/// grad_ratio is mean(pos_grad_norm) / (mean(neg_grad_norm) + 1e-12) over the
/// batch, where the norms are L2 norms of the logit gradient restricted to
/// the positive and negative classes of each sample (see gradient_ratio()).
struct TraceRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double total_loss = 0.0;
  double pos_loss = 0.0;
  double neg_loss = 0.0;
  double grad_ratio = 0.0;
  double train_batch_acc = 0.0;
  double lr = 0.0;
  bool flagged = false;  // a non-finite value was seen in this batch

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct EpochSummary {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double train_acc = 0.0;

  friend bool operator==(const EpochSummary&, const EpochSummary&) = default;
};

struct TrainingTrace {
  std::vector<TraceRecord> records;
  std::vector<EpochSummary> epochs;
  nlohmann::json run_meta = nlohmann::json::object();
};

constexpr double kGradRatioEps = 1e-12;

/// The single definition of the positive-to-negative gradient ratio.
double gradient_ratio(double mean_pos_norm, double mean_neg_norm);

struct StepContext {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double train_batch_acc = 0.0;
  double lr = 0.0;
};

/// Appends one record holding batch-mean losses and the gradient ratio.
/// Non-finite inputs produce a flagged row; the caller decides whether to
/// abort. Throws InvalidInput on an empty batch or a non-increasing step.
const TraceRecord& record_step(TrainingTrace& trace, std::span<const LossOutput> batch,
                               const StepContext& ctx);

enum class TraceFormat { kCsv, kJson };

/// CSV header, in order.
inline constexpr const char* kTraceCsvHeader =
    "step,epoch,total_loss,pos_loss,neg_loss,grad_ratio,train_batch_acc,lr";

void export_trace(const TrainingTrace& trace, TraceFormat format, const std::filesystem::path& path);
std::string trace_to_csv(const TrainingTrace& trace);
nlohmann::json trace_to_json(const TrainingTrace& trace);

TrainingTrace import_trace_csv(const std::filesystem::path& path);
TrainingTrace import_trace_json(const std::filesystem::path& path);

struct NcdSummary {
  double median_early_grad_ratio = 0.0;
  int pos_loss_trend_sign = 0;  // sign of the least-squares slope
  int neg_loss_trend_sign = 0;
  double pos_loss_slope = 0.0;
  double neg_loss_slope = 0.0;
  std::size_t window = 0;  // records in the early window
};

/// Summarizes the first early_fraction of the records (at least 2 rows).
/// Requires >= 10 records.
NcdSummary summarize_ncd(const TrainingTrace& trace, double early_fraction = 0.1);

}  // namespace rlr
