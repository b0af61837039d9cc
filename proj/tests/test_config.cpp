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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "rlr/config.hpp"
#include "rlr/error.hpp"
#include "rlr/experiment.hpp"

using namespace rlr;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config() {
  return nlohmann::json::parse(R"({
    "run_id": "tiny",
    "data": {"generator": "blobs", "classes": 5, "dim": 6, "train_per_class": 20,
             "test_per_class": 10, "separation": 4.0},
    "model": {"hidden": [8]},
    "loss": {"variant": "ss-lr", "r": 2, "beta": 4},
    "optimizer": {"kind": "adam", "learning_rate": 0.01},
    "training": {"epochs": 3, "batch_size": 16, "seed": 3}
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("config: unknown keys are rejected with their path") {
  auto j = small_config();
  j["data"]["foo"] = 1;
  CHECK_THROWS_WITH_AS(RunConfig::from_json(j), doctest::Contains("unknown key data.foo"), InvalidConfig);
}

TEST_CASE("config: bad values are rejected") {
  auto j = small_config();
  j["loss"]["variant"] = "focal";
  CHECK_THROWS_AS(RunConfig::from_json(j), InvalidConfig);
  j = small_config();
  j["training"]["batch_size"] = 0;
  CHECK_THROWS_AS(RunConfig::from_json(j), InvalidConfig);
  j = small_config();
  j["loss"]["m"] = 150;
  CHECK_THROWS_AS(RunConfig::from_json(j), InvalidConfig);
}

TEST_CASE("config: to_json round trip") {
  const auto cfg = RunConfig::from_json(small_config());
  const auto back = RunConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.loss.variant == LossVariant::kSsLR);
  CHECK(back.hidden == std::vector<std::size_t>{8});
}

TEST_CASE("seeds: derived streams differ and data seed can be pinned") {
  auto cfg = RunConfig::from_json(small_config());
  const auto s1 = derive_seeds(cfg, 1);
  const auto s2 = derive_seeds(cfg, 2);
  CHECK(s1.data != s1.init);
  CHECK(s1.init != s2.init);
  cfg.data.seed = 77;
  CHECK(derive_seeds(cfg, 1).data == derive_seeds(cfg, 2).data);
}

TEST_CASE("run_experiment is deterministic down to the bytes") {
  const auto cfg = RunConfig::from_json(small_config());
  const fs::path root = fs::temp_directory_path() / "rlr_test_config";
  fs::remove_all(root);
  const auto a = write_run(cfg, 5, run_experiment(cfg, 5), root / "a");
  const auto b = write_run(cfg, 5, run_experiment(cfg, 5), root / "b");
  CHECK(slurp(a.trace_csv) == slurp(b.trace_csv));
  CHECK(slurp(a.report) == slurp(b.report));
  CHECK(slurp(a.checkpoint) == slurp(b.checkpoint));
  CHECK_FALSE(slurp(a.trace_csv).empty());

  const auto c = write_run(cfg, 6, run_experiment(cfg, 6), root / "c");
  CHECK(slurp(a.trace_csv) != slurp(c.trace_csv));
}

TEST_CASE("checkpoint round trip keeps the standardizer") {
  const auto cfg = RunConfig::from_json(small_config());
  const auto out = run_experiment(cfg, 2);
  const fs::path path = fs::temp_directory_path() / "rlr_test_config_ckpt.json";
  save_model(path, out.model, 2, out.standardizer);
  const auto back = load_model(path);
  CHECK(back.model == out.model);
  CHECK(back.seed == 2);
  REQUIRE(back.standardizer.has_value());
  CHECK(back.standardizer->mean() == out.standardizer->mean());
}

TEST_CASE("compare: confounded configs are refused") {
  const auto a = RunConfig::from_json(small_config());
  auto jb = small_config();
  jb["loss"]["variant"] = "lr";
  jb["run_id"] = "other";
  CHECK_NOTHROW(check_comparable(a, RunConfig::from_json(jb)));
  jb["training"]["epochs"] = 4;
  CHECK_THROWS_WITH_AS(check_comparable(a, RunConfig::from_json(jb)),
                       doctest::Contains("refusing to compare"), InvalidConfig);
}

TEST_CASE("multilabel evaluation refuses single-label data") {
  const auto cfg = RunConfig::from_json(small_config());
  const auto out = run_experiment(cfg, 1);
  const auto data = prepare_data(cfg, 1);
  CHECK_THROWS_AS(evaluate_multilabel(out.model, data.test), UnsupportedVariant);
}
