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

#include "rlr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rlr/error.hpp"
#include "rlr/rng.hpp"
#include "rlr/text.hpp"

namespace rlr {

namespace text {

bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  // strtod needs a terminated buffer; from_chars for double is not in GCC 11.
  std::string buf(field);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size();
}

bool parse_size(std::string_view field, std::size_t& out) {
  field = trim(field);
  if (field.empty()) return false;
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace text

std::string_view split_name(SplitTag t) {
  switch (t) {
    case SplitTag::kTrain:
      return "train";
    case SplitTag::kVal:
      return "val";
    case SplitTag::kTest:
      return "test";
  }
  return "?";
}

bool Dataset::single_label() const {
  return std::all_of(labels.begin(), labels.end(),
                     [](const TargetLabels& y) { return y.single_label(); });
}

void Dataset::validate() const {
  if (labels.empty()) throw InvalidInput("dataset is empty");
  if (features.rows() != labels.size()) {
    throw InvalidInput("feature rows and label rows disagree");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].num_classes() != num_classes) {
      throw InvalidInput("row " + std::to_string(i) + " has labels for a different K");
    }
    for (double v : features.row(i)) {
      if (!std::isfinite(v)) throw InvalidInput("row " + std::to_string(i) + " is not finite");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = Matrix(rows.size(), dim());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(labels[rows[i]]);
  }
  out.num_classes = num_classes;
  out.split = split;
  out.meta = meta;
  return out;
}

namespace {

// Stream tags for mix_seed; fixed so that generated data never depends on
// call order.
constexpr std::uint64_t kMeansStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kTestStream = 3;
constexpr std::uint64_t kViewStream = 4;
constexpr std::uint64_t kLabelStream = 5;

Matrix sphere_points(std::size_t count, std::size_t dim, double radius, Rng& rng) {
  Matrix means(count, dim);
  for (std::size_t c = 0; c < count; ++c) {
    auto row = means.row(c);
    double norm2 = 0.0;
    for (double& v : row) {
      v = rng.normal();
      norm2 += v * v;
    }
    const double s = norm2 > 0.0 ? radius / std::sqrt(norm2) : 0.0;
    for (double& v : row) v *= s;
  }
  return means;
}

Dataset sample_blobs(const Matrix& means, std::size_t n_per_class, Rng& rng) {
  const std::size_t K = means.rows();
  Dataset out;
  out.num_classes = K;
  out.features = Matrix(K * n_per_class, means.cols());
  out.labels.reserve(K * n_per_class);
  std::size_t r = 0;
  for (std::size_t c = 0; c < K; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i, ++r) {
      auto row = out.features.row(r);
      const auto mu = means.row(c);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = mu[j] + rng.normal();
      out.labels.push_back(TargetLabels::single(c, K));
    }
  }
  return out;
}

void check_blob_args(std::size_t K, std::size_t dim) {
  if (K < 2) throw InvalidInput("blobs need K >= 2");
  if (dim < 2) throw InvalidInput("blobs need dim >= 2");
}

nlohmann::json blob_params(std::size_t K, std::size_t dim, double separation) {
  return {{"classes", K}, {"dim", dim}, {"separation", separation}};
}

}  // namespace

Dataset gen_blobs(std::size_t num_classes, std::size_t dim, std::size_t n_per_class,
                  double separation, std::uint64_t seed) {
  check_blob_args(num_classes, dim);
  if (n_per_class < 1) throw InvalidInput("blobs need n_per_class >= 1");
  Rng mean_rng(mix_seed(seed, kMeansStream));
  Rng sample_rng(mix_seed(seed, kTrainStream));
  const Matrix means = sphere_points(num_classes, dim, separation, mean_rng);
  Dataset out = sample_blobs(means, n_per_class, sample_rng);
  out.meta = {"blobs", blob_params(num_classes, dim, separation), seed};
  out.meta.params["n_per_class"] = n_per_class;
  return out;
}

TrainTest gen_blobs_split(std::size_t num_classes, std::size_t dim, std::size_t train_per_class,
                          std::size_t test_per_class, double separation, std::uint64_t seed) {
  check_blob_args(num_classes, dim);
  if (train_per_class < 1 || test_per_class < 1) {
    throw InvalidInput("blobs need at least one train and one test sample per class");
  }
  Rng mean_rng(mix_seed(seed, kMeansStream));
  Rng train_rng(mix_seed(seed, kTrainStream));
  Rng test_rng(mix_seed(seed, kTestStream));
  const Matrix means = sphere_points(num_classes, dim, separation, mean_rng);
  TrainTest out{sample_blobs(means, train_per_class, train_rng),
                sample_blobs(means, test_per_class, test_rng)};
  out.train.split = SplitTag::kTrain;
  out.test.split = SplitTag::kTest;
  auto params = blob_params(num_classes, dim, separation);
  params["train_per_class"] = train_per_class;
  params["test_per_class"] = test_per_class;
  out.train.meta = {"blobs", params, seed};
  out.test.meta = out.train.meta;
  return out;
}

RetrievalSplit gen_retrieval(std::size_t train_classes, std::size_t test_classes,
                             std::size_t dim, std::size_t n_per_class, double separation,
                             std::uint64_t seed) {
  if (train_classes < 2 || test_classes < 2) {
    throw InvalidInput("retrieval split needs at least 2 train and 2 test identities");
  }
  if (n_per_class < 2) {
    throw InvalidInput("retrieval split needs n_per_class >= 2 to form query and gallery");
  }
  check_blob_args(train_classes, dim);
  const std::size_t total = train_classes + test_classes;
  Rng mean_rng(mix_seed(seed, kMeansStream));
  Rng view_rng(mix_seed(seed, kViewStream));
  Rng sample_rng(mix_seed(seed, kTrainStream));
  const Matrix means = sphere_points(total, dim, separation, mean_rng);
  Matrix views(total * 2, dim);
  for (double& v : views.values()) v = view_rng.normal();

  RetrievalSplit out;
  out.train.num_classes = train_classes;
  out.gallery.num_classes = total;
  out.query.num_classes = total;
  out.train.features = Matrix(train_classes * n_per_class, dim);
  out.gallery.features = Matrix(test_classes * (n_per_class - 1), dim);
  out.query.features = Matrix(test_classes, dim);

  std::size_t train_row = 0;
  std::size_t gallery_row = 0;
  for (std::size_t id = 0; id < total; ++id) {
    const bool is_train = id < train_classes;
    (is_train ? out.train_classes : out.test_classes).push_back(id);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      std::span<double> row;
      if (is_train) {
        row = out.train.features.row(train_row++);
        out.train.labels.push_back(TargetLabels::single(id, train_classes));
      } else if (i == 0) {
        row = out.query.features.row(id - train_classes);
        out.query.labels.push_back(TargetLabels::single(id, total));
      } else {
        row = out.gallery.features.row(gallery_row++);
        out.gallery.labels.push_back(TargetLabels::single(id, total));
      }
      const auto mu = means.row(id);
      const auto view = views.row(id * 2 + (i % 2));
      for (std::size_t j = 0; j < dim; ++j) row[j] = mu[j] + view[j] + sample_rng.normal();
    }
  }
  const nlohmann::json params{{"train_classes", train_classes},
                              {"test_classes", test_classes},
                              {"dim", dim},
                              {"n_per_class", n_per_class},
                              {"separation", separation}};
  for (Dataset* d : {&out.train, &out.gallery, &out.query}) d->meta = {"retrieval", params, seed};
  out.train.split = SplitTag::kTrain;
  out.gallery.split = SplitTag::kTest;
  out.query.split = SplitTag::kTest;
  return out;
}

std::vector<double> sparse_prevalence(std::size_t num_classes, double avg_positives,
                                      double imbalance_ratio) {
  if (num_classes < 2) throw InvalidConfig("sparse multi-label data needs K >= 2");
  if (!(avg_positives >= 1.0)) throw InvalidConfig("avg_positives must be >= 1");
  if (!(imbalance_ratio >= 1.0)) throw InvalidConfig("imbalance_ratio must be >= 1");
  const double exponent = std::log(imbalance_ratio) / std::log(static_cast<double>(num_classes));
  std::vector<double> shape(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    shape[k] = std::pow(static_cast<double>(k + 1), -exponent);
  }
  // Expected label count with the "at least one label" fallback is
  // sum(c * shape) + prod(1 - c * shape); it is increasing in c.
  const auto expected = [&shape](double c) {
    double sum = 0.0;
    double none = 1.0;
    for (double s : shape) {
      sum += c * s;
      none *= 1.0 - c * s;
    }
    return sum + none;
  };
  double hi = 1.0 / shape.front();
  if (expected(hi) < avg_positives) {
    throw InvalidConfig("avg_positives is infeasible for this K and imbalance_ratio");
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (expected(mid) < avg_positives ? lo : hi) = mid;
  }
  for (double& s : shape) s *= hi;
  return shape;
}

namespace {

Dataset sample_multilabel(const SparseMultilabelParams& p, const std::vector<double>& prevalence,
                          const Matrix& prototypes, std::size_t n, Rng& rng) {
  const std::size_t K = p.num_classes;
  std::vector<double> cdf(K);
  std::partial_sum(prevalence.begin(), prevalence.end(), cdf.begin());
  Dataset out;
  out.num_classes = K;
  out.features = Matrix(n, p.dim);
  out.labels.reserve(n);
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < n; ++i) {
    positives.clear();
    for (std::size_t k = 0; k < K; ++k) {
      if (rng.uniform() < prevalence[k]) positives.push_back(k);
    }
    if (positives.empty()) {
      const double u = rng.uniform() * cdf.back();
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      positives.push_back(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), K - 1));
    }
    auto row = out.features.row(i);
    for (double& v : row) v = p.noise * rng.normal();
    for (std::size_t k : positives) {
      const auto proto = prototypes.row(k);
      for (std::size_t j = 0; j < p.dim; ++j) row[j] += proto[j];
    }
    out.labels.emplace_back(positives, K);
  }
  return out;
}

nlohmann::json multilabel_params(const SparseMultilabelParams& p) {
  return {{"classes", p.num_classes},     {"samples", p.num_samples},
          {"dim", p.dim},                 {"avg_positives", p.avg_positives},
          {"imbalance_ratio", p.imbalance_ratio}, {"signal", p.signal},
          {"noise", p.noise}};
}

}  // namespace

SparseMultilabelData gen_sparse_multilabel_split(const SparseMultilabelParams& params,
                                                 std::size_t test_samples) {
  if (params.num_samples < 1) throw InvalidConfig("sparse multi-label data needs N >= 1");
  if (params.dim < 1) throw InvalidConfig("sparse multi-label data needs dim >= 1");
  if (!(params.avg_positives < static_cast<double>(params.num_classes))) {
    throw InvalidConfig("avg_positives must be well below K");
  }
  SparseMultilabelData out;
  out.prevalence = sparse_prevalence(params.num_classes, params.avg_positives,
                                     params.imbalance_ratio);
  Rng proto_rng(mix_seed(params.seed, kMeansStream));
  const Matrix prototypes = sphere_points(params.num_classes, params.dim, params.signal, proto_rng);
  Rng train_rng(mix_seed(params.seed, kLabelStream));
  Rng test_rng(mix_seed(params.seed, kTestStream));
  out.train = sample_multilabel(params, out.prevalence, prototypes, params.num_samples, train_rng);
  out.train.meta = {"sparse_multilabel", multilabel_params(params), params.seed};
  out.train.split = SplitTag::kTrain;
  if (test_samples > 0) {
    out.test = sample_multilabel(params, out.prevalence, prototypes, test_samples, test_rng);
    out.test.meta = out.train.meta;
    out.test.split = SplitTag::kTest;
  }
  return out;
}

Dataset gen_sparse_multilabel(const SparseMultilabelParams& params) {
  return gen_sparse_multilabel_split(params, 0).train;
}

Standardizer Standardizer::fit(const Dataset& data) {
  if (data.size() == 0) throw InvalidInput("cannot standardize an empty dataset");
  const std::size_t d = data.dim();
  const auto n = static_cast<double>(data.size());
  Standardizer s;
  s.mean_.assign(d, 0.0);
  s.scale_.assign(d, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.features.row(i);
    for (std::size_t j = 0; j < d; ++j) s.mean_[j] += row[j];
  }
  for (double& m : s.mean_) m /= n;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.features.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = row[j] - s.mean_[j];
      s.scale_[j] += c * c;
    }
  }
  for (double& v : s.scale_) {
    v = std::sqrt(v / n);
    if (!(v > 0.0)) v = 1.0;  // constant column: center only
  }
  return s;
}

Standardizer Standardizer::from_parts(std::vector<double> mean, std::vector<double> scale) {
  if (mean.size() != scale.size()) throw ShapeError("standardizer mean and scale differ in size");
  for (double v : scale) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("standardizer scale must be positive");
  }
  Standardizer s;
  s.mean_ = std::move(mean);
  s.scale_ = std::move(scale);
  return s;
}

void Standardizer::apply(Dataset& data) const {
  if (data.dim() != mean_.size()) throw ShapeError("standardizer fitted on a different dim");
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = data.features.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean_[j]) / scale_[j];
  }
}

Dataset load_delimited(const std::filesystem::path& path, const DelimitedSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + ": empty dataset file");
  ++line_no;
  const auto header = text::split(line, schema.delimiter);
  std::size_t label_col = header.size();
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = text::trim(header[c]);
    if (name == schema.label_column) {
      label_col = c;
    } else if (schema.feature_columns.empty() ||
               std::find(schema.feature_columns.begin(), schema.feature_columns.end(), name) !=
                   schema.feature_columns.end()) {
      feature_cols.push_back(c);
    }
  }
  if (label_col == header.size()) {
    throw ParseError(path.string() + ":1: missing label column '" + schema.label_column + "'", 1);
  }
  if (!schema.feature_columns.empty() && feature_cols.size() != schema.feature_columns.size()) {
    throw ParseError(path.string() + ":1: header lacks a declared feature column", 1);
  }

  std::vector<double> values;
  std::vector<std::vector<std::size_t>> label_sets;
  std::size_t max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    const auto fields = text::split(line, schema.delimiter);
    if (fields.size() != header.size()) {
      throw ParseError(where + "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()) + " (line " +
                           std::to_string(line_no) + ")",
                       line_no);
    }
    for (std::size_t c : feature_cols) {
      double v = 0.0;
      if (!text::parse_double(fields[c], v) || !std::isfinite(v)) {
        throw ParseError(where + "bad feature value '" + std::string(fields[c]) + "' (line " +
                             std::to_string(line_no) + ")",
                         line_no);
      }
      values.push_back(v);
    }
    std::vector<std::size_t> labels;
    for (auto cell : text::split(fields[label_col], schema.label_separator)) {
      std::size_t k = 0;
      if (!text::parse_size(cell, k)) {
        throw ParseError(where + "bad label '" + std::string(cell) + "' (line " +
                             std::to_string(line_no) + ")",
                         line_no);
      }
      if (schema.num_classes != 0 && k >= schema.num_classes) {
        throw InvalidConfig(where + "label " + std::to_string(k) + " >= declared K=" +
                            std::to_string(schema.num_classes));
      }
      max_label = std::max(max_label, k);
      labels.push_back(k);
    }
    label_sets.push_back(std::move(labels));
  }
  if (label_sets.empty()) throw InvalidInput(path.string() + ": empty dataset (no data rows)");

  Dataset out;
  out.num_classes = schema.num_classes != 0 ? schema.num_classes : max_label + 1;
  if (out.num_classes < 2) out.num_classes = 2;
  out.features = Matrix(label_sets.size(), feature_cols.size(), std::move(values));
  out.labels.reserve(label_sets.size());
  for (std::size_t i = 0; i < label_sets.size(); ++i) {
    try {
      out.labels.emplace_back(std::move(label_sets[i]), out.num_classes);
    } catch (const InvalidInput& e) {
      throw ParseError(path.string() + ": row " + std::to_string(i + 1) + ": " + e.what(), i + 2);
    }
  }
  out.meta.generator = "file";
  out.meta.params = {{"path", path.string()}};
  return out;
}

void save_delimited(const std::filesystem::path& path, const Dataset& data,
                    const DelimitedSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'f' << j << schema.delimiter;
  out << schema.label_column << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features.row(i)) out << text::format_double(v) << schema.delimiter;
    const auto pos = data.labels[i].positives();
    for (std::size_t k = 0; k < pos.size(); ++k) {
      if (k) out << schema.label_separator;
      out << pos[k];
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace rlr
