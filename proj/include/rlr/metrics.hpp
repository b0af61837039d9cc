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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlr/losses.hpp"
#include "rlr/matrix.hpp"

namespace rlr {

// All ranking and arg-max helpers in this module break ties by the lowest
// index, so every metric is a pure function of its inputs.

/// Metrics reported for one evaluation. Fields that the task does not define
/// stay empty and serialize as null, never as 0.
struct EvalReport {
  std::string task;
  std::optional<double> top1;
  std::optional<double> balanced_per_class_acc;
  std::optional<double> per_image_acc_top5;
  std::optional<double> per_class_acc_top5;
  std::optional<double> per_image_map;
  std::optional<double> per_class_map;
  std::optional<double> rank1;
  std::optional<double> map_retrieval;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);

  /// Looks a metric up by its serialized key; empty when unpopulated.
  std::optional<double> get(std::string_view key) const;
};

std::size_t argmax(std::span<const double> row);

/// Indices of the t largest entries, descending, lowest index first on ties.
std::vector<std::size_t> top_k(std::span<const double> row, std::size_t t);

double top1_accuracy(const Matrix& logits, std::span<const TargetLabels> labels);

struct BalancedAccuracy {
  double value = 0.0;
  std::vector<std::size_t> absent_classes;  // classes with no ground-truth rows
};

/// Mean over present classes of the fraction of that class's rows whose
/// prediction set contains the class.
BalancedAccuracy balanced_accuracy(std::span<const std::vector<std::size_t>> predictions,
                                   std::span<const TargetLabels> labels, std::size_t num_classes);

/// Mean of precision@i over the relevant positions i of a ranked list.
/// Throws InsufficientData when nothing is relevant.
double average_precision(const std::vector<bool>& ranked_relevance);

struct MultilabelReport {
  double per_image_acc = 0.0;
  double per_class_acc = 0.0;
  double per_image_map = 0.0;
  double per_class_map = 0.0;
  std::size_t images = 0;
  std::size_t skipped_images = 0;
  std::size_t classes = 0;  // classes with at least one positive image
};

/// Per-image accuracy: |top-t and truth| / min(t, |truth|), averaged over
/// images. Per-class accuracy: recall of each class within the images' top-t
/// sets, averaged over classes present in the truth. Per-image mAP ranks the
/// classes of each image; per-class mAP ranks the images of each class.
MultilabelReport multilabel_report(const Matrix& scores,
                                   std::span<const std::vector<std::size_t>> truth,
                                   std::size_t t = 5);

enum class DistanceMetric { kCosine, kEuclidean };

DistanceMetric parse_distance(std::string_view name);

struct RetrievalReport {
  double rank1 = 0.0;
  double map = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // queries with no gallery match
};

/// Single-query retrieval: each query ranks the gallery by ascending
/// distance (cosine distance 1 - cos, or squared Euclidean), ties by gallery
/// index.
RetrievalReport retrieval_eval(const Matrix& query_emb, const Matrix& gallery_emb,
                               std::span<const std::size_t> query_ids,
                               std::span<const std::size_t> gallery_ids,
                               DistanceMetric metric = DistanceMetric::kCosine);

double distance(std::span<const double> a, std::span<const double> b, DistanceMetric metric);

enum class WilcoxonMethod { kAuto, kExact, kNormal };

struct WilcoxonResult {
  double statistic = 0.0;  // W = min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;    // two-sided
  std::size_t n = 0;       // non-zero differences used
  std::size_t zeros_dropped = 0;
  bool exact = false;
};

/// Two-sided Wilcoxon signed-rank test on a - b. Zero differences are
/// dropped; tied magnitudes get average ranks. kAuto enumerates all 2^n sign
/// patterns for n <= 20 and otherwise uses the normal approximation with tie
/// and continuity correction. Throws InsufficientData when fewer than 5
/// non-zero differences remain.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method = WilcoxonMethod::kAuto);

}  // namespace rlr
