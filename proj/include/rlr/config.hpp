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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlr/losses.hpp"
#include "rlr/metrics.hpp"
#include "rlr/model.hpp"

namespace rlr {

enum class Task { kClassify, kRetrieve, kMultilabel };

std::string_view task_name(Task t);
Task parse_task(std::string_view name);

struct DataConfig {
  std::string generator = "blobs";  // blobs | retrieval | sparse_multilabel | file
  bool standardize = true;
  std::optional<std::uint64_t> seed;  // fixed data across runs; default derives from the run seed

  // blobs
  std::size_t classes = 100;
  std::size_t dim = 32;
  std::size_t train_per_class = 50;
  std::size_t test_per_class = 20;
  double separation = 4.0;

  // retrieval
  std::size_t train_classes = 60;
  std::size_t test_classes = 40;
  std::size_t n_per_class = 10;
  DistanceMetric distance = DistanceMetric::kCosine;

  // sparse_multilabel (classes, dim shared with blobs)
  std::size_t train_samples = 2000;
  std::size_t test_samples = 1000;
  double avg_positives = 3.0;
  double imbalance_ratio = 50.0;
  double signal = 3.0;
  double noise = 1.0;

  // file
  Task task = Task::kClassify;
  std::string train_path;
  std::string test_path;
  std::string query_path;
  std::string gallery_path;
  std::size_t num_classes = 0;  // 0: infer

  Task resolved_task() const;
};

struct RunConfig {
  std::string run_id = "run";
  DataConfig data;
  std::vector<std::size_t> hidden{64};
  LossConfig loss;
  OptimizerConfig optimizer;
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "runs";
  std::size_t trace_stride = 1;

  /// Strict parse: unknown keys and wrongly typed values throw InvalidConfig
  /// naming the dotted key path. Relative file paths resolve against
  /// base_dir.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);

  /// Every field, defaults included, so the run can be repeated exactly.
  nlohmann::json to_json() const;
};

}  // namespace rlr
