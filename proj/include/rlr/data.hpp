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
#include <string>
#include <vector>

#include <json.hpp>

#include "rlr/losses.hpp"
#include "rlr/matrix.hpp"

namespace rlr {

enum class SplitTag { kTrain, kVal, kTest };

std::string_view split_name(SplitTag t);

struct DatasetMeta {
  std::string generator;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
};

/// Feature matrix [N x d] with one label set per row.
struct Dataset {
  Matrix features;
  std::vector<TargetLabels> labels;
  std::size_t num_classes = 0;
  SplitTag split = SplitTag::kTrain;
  DatasetMeta meta;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
  bool single_label() const;

  /// Throws InvalidInput if any invariant (N > 0, finite rows, labels < K,
  /// row count agreement) fails.
  void validate() const;

  Dataset subset(std::span<const std::size_t> rows) const;
};

struct TrainTest {
  Dataset train;
  Dataset test;
};

/// K Gaussian blobs with unit variance. Class means lie on a sphere of
/// radius `separation`; every class gets exactly n_per_class rows, stored
/// class-major.
Dataset gen_blobs(std::size_t num_classes, std::size_t dim, std::size_t n_per_class,
                  double separation, std::uint64_t seed);

/// Train and test draws from the same class means.
TrainTest gen_blobs_split(std::size_t num_classes, std::size_t dim, std::size_t train_per_class,
                          std::size_t test_per_class, double separation, std::uint64_t seed);

/// Zero-shot retrieval split: identities [0, K_train) for training,
/// [K_train, K_train + K_test) for evaluation. Every identity has two view
/// offsets (unit-variance draws) and its samples alternate between views.
/// Per test identity, sample 0 is the query and the rest go to the gallery.
struct RetrievalSplit {
  Dataset train;
  Dataset gallery;
  Dataset query;
  std::vector<std::size_t> train_classes;
  std::vector<std::size_t> test_classes;
};

RetrievalSplit gen_retrieval(std::size_t train_classes, std::size_t test_classes,
                             std::size_t dim, std::size_t n_per_class, double separation,
                             std::uint64_t seed);

struct SparseMultilabelParams {
  std::size_t num_classes = 200;
  std::size_t num_samples = 2000;
  std::size_t dim = 64;
  double avg_positives = 3.0;
  double imbalance_ratio = 50.0;
  double signal = 3.0;  // prototype norm
  double noise = 1.0;   // per-dimension noise stddev
  std::uint64_t seed = 0;
};

struct SparseMultilabelData {
  Dataset train;
  Dataset test;
  std::vector<double> prevalence;  // expected per-class label rate
};

/// Class prevalence follows pi_k ~ (k+1)^-a with a chosen so that
/// pi_0 / pi_{K-1} = imbalance_ratio, scaled so the expected number of
/// labels per sample (after the at-least-one fallback) equals avg_positives.
std::vector<double> sparse_prevalence(std::size_t num_classes, double avg_positives,
                                      double imbalance_ratio);

Dataset gen_sparse_multilabel(const SparseMultilabelParams& params);
SparseMultilabelData gen_sparse_multilabel_split(const SparseMultilabelParams& params,
                                                 std::size_t test_samples);

/// Per-dimension zero-mean / unit-variance transform fitted on one split.
class Standardizer {
 public:
  static Standardizer fit(const Dataset& data);
  static Standardizer from_parts(std::vector<double> mean, std::vector<double> scale);
  void apply(Dataset& data) const;

  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& scale() const noexcept { return scale_; }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// Delimited text: a header row `f0,...,f{d-1},labels`, then one row per
/// sample. The labels cell holds `;`-separated class indices.
struct DelimitedSchema {
  char delimiter = ',';
  char label_separator = ';';
  std::string label_column = "labels";
  std::vector<std::string> feature_columns;  // empty: every other column
  std::size_t num_classes = 0;               // 0: infer as max label + 1
};

Dataset load_delimited(const std::filesystem::path& path, const DelimitedSchema& schema = {});
void save_delimited(const std::filesystem::path& path, const Dataset& data,
                    const DelimitedSchema& schema = {});

}  // namespace rlr
