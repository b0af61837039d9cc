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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rlr/data.hpp"
#include "rlr/error.hpp"
#include "rlr/kernels.hpp"

using namespace rlr;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rlr_test_data";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Nearest class mean, means estimated from train.
double centroid_accuracy(const Dataset& train, const Dataset& test) {
  const std::size_t K = train.num_classes;
  const std::size_t d = train.dim();
  std::vector<double> means(K * d, 0.0);
  std::vector<double> counts(K, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const std::size_t y = train.labels[i].label();
    counts[y] += 1.0;
    for (std::size_t j = 0; j < d; ++j) means[y * d + j] += train.features(i, j);
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < d; ++j) means[k * d + j] /= counts[k];
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      const double dist = kernels::squared_distance(test.features.row(i),
                                                    std::span<const double>(&means[k * d], d));
      if (dist < best_d) best_d = dist, best = k;
    }
    hits += best == test.labels[i].label();
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

}  // namespace

TEST_CASE("blobs: shape, class-major order and determinism") {
  const auto a = gen_blobs(4, 3, 5, 2.0, 11);
  CHECK(a.size() == 20);
  CHECK(a.dim() == 3);
  CHECK(a.num_classes == 4);
  CHECK(a.single_label());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.labels[i].label() == i / 5);
  const auto b = gen_blobs(4, 3, 5, 2.0, 11);
  CHECK(a.features == b.features);
  CHECK_FALSE(a.features == gen_blobs(4, 3, 5, 2.0, 12).features);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("blobs: class means sit at the requested radius") {
  const auto d = gen_blobs(3, 8, 4000, 5.0, 2);
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> mean(8, 0.0);
    for (std::size_t i = k * 4000; i < (k + 1) * 4000; ++i) {
      for (std::size_t j = 0; j < 8; ++j) mean[j] += d.features(i, j) / 4000.0;
    }
    const double r = std::sqrt(std::inner_product(mean.begin(), mean.end(), mean.begin(), 0.0));
    CHECK(r == doctest::Approx(5.0).epsilon(0.03));
  }
}

TEST_CASE("blobs: centroid oracle on a well separated K=100 problem") {
  const auto split = gen_blobs_split(100, 64, 100, 100, 6.0, 7);
  const double acc = centroid_accuracy(split.train, split.test);
  CHECK(acc > 0.9);
}

TEST_CASE("blobs: zero separation is chance level") {
  const auto split = gen_blobs_split(2, 4, 2000, 2000, 0.0, 5);
  const double acc = centroid_accuracy(split.train, split.test);
  CHECK(std::abs(acc - 0.5) < 0.05);
}

TEST_CASE("retrieval: disjoint identities and query/gallery layout") {
  const auto r = gen_retrieval(6, 4, 5, 3, 4.0, 1);
  CHECK(r.train.size() == 18);
  CHECK(r.train.num_classes == 6);
  CHECK(r.query.size() == 4);
  CHECK(r.gallery.size() == 8);
  for (const auto& y : r.train.labels) CHECK(y.label() < 6);
  for (const auto& y : r.query.labels) CHECK(y.label() >= 6);
  for (const auto& y : r.gallery.labels) CHECK(y.label() >= 6);
  CHECK_THROWS_AS(gen_retrieval(6, 4, 5, 1, 4.0, 1), InvalidInput);
}

TEST_CASE("retrieval: huge separation makes raw nearest neighbour perfect") {
  const auto r = gen_retrieval(5, 20, 16, 4, 50.0, 3);
  std::size_t hits = 0;
  for (std::size_t q = 0; q < r.query.size(); ++q) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < r.gallery.size(); ++g) {
      const double d = kernels::squared_distance(r.query.features.row(q), r.gallery.features.row(g));
      if (d < best_d) best_d = d, best = g;
    }
    hits += r.gallery.labels[best].label() == r.query.labels[q].label();
  }
  CHECK(hits == r.query.size());
}

TEST_CASE("sparse multi-label: prevalence profile") {
  const auto p = sparse_prevalence(200, 3.0, 50.0);
  REQUIRE(p.size() == 200);
  CHECK(p.front() / p.back() == doctest::Approx(50.0));
  for (std::size_t k = 1; k < p.size(); ++k) CHECK(p[k] <= p[k - 1]);
  const auto flat = sparse_prevalence(20, 2.0, 1.0);
  for (double v : flat) CHECK(v == doctest::Approx(flat.front()));
  CHECK_THROWS_AS(sparse_prevalence(5, 10.0, 2.0), InvalidConfig);
}

TEST_CASE("sparse multi-label: label counts") {
  SparseMultilabelParams params;
  params.num_classes = 200;
  params.num_samples = 4000;
  params.dim = 8;
  params.seed = 4;
  const auto d = gen_sparse_multilabel(params);
  double total = 0.0;
  for (const auto& y : d.labels) {
    REQUIRE(y.positives().size() >= 1);
    total += static_cast<double>(y.positives().size());
  }
  CHECK(total / 4000.0 == doctest::Approx(3.0).epsilon(0.05));
  CHECK_FALSE(d.single_label());
}

TEST_CASE("standardizer: fit on train, zero-variance columns pass through") {
  Dataset d;
  d.features = Matrix(3, 2, {1.0, 5.0, 2.0, 5.0, 3.0, 5.0});
  d.num_classes = 2;
  for (int i = 0; i < 3; ++i) d.labels.push_back(TargetLabels::single(0, 2));
  const auto s = Standardizer::fit(d);
  CHECK(s.mean()[0] == 2.0);
  CHECK(s.scale()[1] == 1.0);
  s.apply(d);
  CHECK(d.features(0, 0) == doctest::Approx(-std::sqrt(1.5)));
  CHECK(d.features(2, 1) == 0.0);
  CHECK_THROWS_AS(Standardizer::from_parts({0.0}, {0.0}), InvalidInput);
}

TEST_CASE("delimited: round trip") {
  SparseMultilabelParams params;
  params.num_classes = 12;
  params.num_samples = 40;
  params.dim = 5;
  params.imbalance_ratio = 3.0;
  params.seed = 8;
  const auto d = gen_sparse_multilabel(params);
  const auto path = temp_path("roundtrip.csv");
  save_delimited(path, d);
  DelimitedSchema schema;
  schema.num_classes = 12;
  const auto back = load_delimited(path, schema);
  REQUIRE(back.size() == d.size());
  REQUIRE(back.dim() == d.dim());
  CHECK(back.labels == d.labels);
  for (std::size_t i = 0; i < d.features.values().size(); ++i) {
    CHECK(std::abs(back.features.values()[i] - d.features.values()[i]) < 1e-9);
  }
}

TEST_CASE("delimited: malformed row names its line") {
  std::string text = "f0,f1,labels\n";
  for (int line = 2; line <= 16; ++line) text += "0.5,1.5,0\n";
  text += "0.5,oops,1\n";  // line 17
  text += "0.5,1.5,1\n";
  const auto path = temp_path("malformed.csv");
  write_file(path, text);
  try {
    load_delimited(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 17);
    CHECK(std::string(e.what()).find("line 17") != std::string::npos);
  }
}

TEST_CASE("delimited: empty input and out-of-range labels") {
  const auto empty = temp_path("empty.csv");
  write_file(empty, "");
  CHECK_THROWS_WITH_AS(load_delimited(empty), doctest::Contains("empty dataset"), InvalidInput);

  const auto header_only = temp_path("header_only.csv");
  write_file(header_only, "f0,labels\n");
  CHECK_THROWS_WITH_AS(load_delimited(header_only), doctest::Contains("empty dataset"), InvalidInput);

  const auto big = temp_path("big_label.csv");
  write_file(big, "f0,labels\n1.0,7\n");
  DelimitedSchema schema;
  schema.num_classes = 5;
  CHECK_THROWS_AS(load_delimited(big, schema), InvalidConfig);

  CHECK_THROWS_AS(load_delimited(temp_path("does_not_exist.csv")), IoError);
}

TEST_CASE("subset keeps the selected rows in order") {
  const auto d = gen_blobs(3, 2, 4, 1.0, 1);
  const std::vector<std::size_t> rows{5, 0, 11};
  const auto s = d.subset(rows);
  CHECK(s.size() == 3);
  CHECK(s.labels[0] == d.labels[5]);
  CHECK(s.features(2, 1) == d.features(11, 1));
}
