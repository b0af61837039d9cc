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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rlr/config.hpp"
#include "rlr/data.hpp"
#include "rlr/metrics.hpp"
#include "rlr/model.hpp"
#include "rlr/train.hpp"

namespace rlr {

/// Seeds derived from one run seed.
struct RunSeeds {
  std::uint64_t data;
  std::uint64_t init;
  std::uint64_t shuffle;
};

RunSeeds derive_seeds(const RunConfig& cfg, std::uint64_t run_seed);

/// Data for one run, already standardized when the config asks for it.
/// Retrieval runs fill query/gallery; the other tasks fill test.
struct PreparedData {
  Task task = Task::kClassify;
  Dataset train;
  Dataset test;
  Dataset query;
  Dataset gallery;
  std::optional<Standardizer> standardizer;
};

/// Raw (unstandardized) datasets for a config and seed.
PreparedData generate_data(const RunConfig& cfg, std::uint64_t run_seed);
PreparedData prepare_data(const RunConfig& cfg, std::uint64_t run_seed);

struct RunOutcome {
  MlpModel model;
  TrainResult train;
  EvalReport report;
  std::optional<Standardizer> standardizer;
  double wall_seconds = 0.0;
};

/// Builds the model, trains it, and evaluates it on the held-out split.
RunOutcome run_experiment(const RunConfig& cfg, std::uint64_t run_seed);

/// Populates exactly the metrics defined for `task`. Retrieval uses the
/// penultimate-layer embedding.
EvalReport evaluate(const MlpModel& model, const PreparedData& data, DistanceMetric distance);

EvalReport evaluate_classify(const MlpModel& model, const Dataset& data);
EvalReport evaluate_multilabel(const MlpModel& model, const Dataset& data);
EvalReport evaluate_retrieval(const MlpModel& model, const Dataset& query, const Dataset& gallery,
                              DistanceMetric distance);

/// Files written by write_run(), relative to its directory.
struct RunFiles {
  std::filesystem::path checkpoint;
  std::filesystem::path trace_csv;
  std::filesystem::path trace_json;
  std::filesystem::path report;
  std::filesystem::path resolved_config;
};

RunFiles run_files(const RunConfig& cfg, const std::filesystem::path& dir);

/// Writes checkpoint, trace (CSV and JSON), eval report, and the resolved
/// config. Everything except the JSON trace's wall time is a pure function
/// of (config, seed).
RunFiles write_run(const RunConfig& cfg, std::uint64_t run_seed, const RunOutcome& outcome,
                   const std::filesystem::path& dir);

/// Checkpoint plus the input standardization fitted at training time.
void save_model(const std::filesystem::path& path, const MlpModel& model, std::uint64_t seed,
                const std::optional<Standardizer>& standardizer);

struct LoadedModel {
  MlpModel model;
  std::uint64_t seed = 0;
  std::optional<Standardizer> standardizer;
};

LoadedModel load_model(const std::filesystem::path& path);

std::string dump_report(const EvalReport& report);

/// Headline metric key for a task: top1, rank1, or per_class_acc_top5.
std::string default_metric(Task task);

/// Throws InvalidConfig naming the sections that differ when two configs
/// differ anywhere but loss, run_id and output.
void check_comparable(const RunConfig& a, const RunConfig& b);

struct Comparison {
  std::string metric;
  std::vector<std::uint64_t> seeds;
  std::vector<double> a;
  std::vector<double> b;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::optional<WilcoxonResult> wilcoxon;
  std::string insufficient;  // set instead of wilcoxon when the test cannot run

  nlohmann::json to_json() const;
};

/// Paired runs of both configs on seeds [first, last], then a two-sided
/// Wilcoxon signed-rank test on the per-seed metric.
Comparison compare_runs(const RunConfig& a, const RunConfig& b, std::uint64_t first,
                        std::uint64_t last, const std::string& metric = {});

}  // namespace rlr
