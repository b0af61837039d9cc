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

#include "rlr/config.hpp"

#include <concepts>
#include <fstream>
#include <set>

#include "rlr/error.hpp"

namespace rlr {

std::string_view task_name(Task t) {
  switch (t) {
    case Task::kClassify:
      return "classify";
    case Task::kRetrieve:
      return "retrieve";
    case Task::kMultilabel:
      return "multilabel";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "classify") return Task::kClassify;
  if (name == "retrieve") return Task::kRetrieve;
  if (name == "multilabel") return Task::kMultilabel;
  throw InvalidConfig("unknown task: " + std::string(name));
}

Task DataConfig::resolved_task() const {
  if (generator == "blobs") return Task::kClassify;
  if (generator == "retrieval") return Task::kRetrieve;
  if (generator == "sparse_multilabel") return Task::kMultilabel;
  return task;
}

namespace {

bool non_negative_int(const nlohmann::json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Reads one JSON object, remembering which keys were consumed so finish()
// can reject the rest.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidConfig(path_ + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const nlohmann::json& child(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <std::unsigned_integral T>
  void read(const char* key, T& out) {
    if (const auto* v = take(key)) {
      if (!non_negative_int(*v)) fail(key, "a non-negative integer");
      out = v->get<T>();
    }
  }

  void read(const char* key, double& out) {
    if (const auto* v = take(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }

  void read(const char* key, bool& out) {
    if (const auto* v = take(key)) {
      if (!v->is_boolean()) fail(key, "a boolean");
      out = v->get<bool>();
    }
  }

  void read(const char* key, std::string& out) {
    if (const auto* v = take(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }

  void read(const char* key, std::vector<std::size_t>& out) {
    if (const auto* v = take(key)) {
      if (!v->is_array()) fail(key, "an array of non-negative integers");
      out.clear();
      for (const auto& e : *v) {
        if (!non_negative_int(e)) fail(key, "an array of non-negative integers");
        out.push_back(e.get<std::size_t>());
      }
    }
  }

  template <typename Parse, typename T>
  void read_enum(const char* key, T& out, Parse parse) {
    std::string name;
    read(key, name);
    if (name.empty()) return;
    try {
      out = parse(name);
    } catch (const Error& e) {
      throw InvalidConfig(path_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!used_.count(key)) throw InvalidConfig("unknown key " + path_ + "." + key);
    }
  }

  std::string key_path(const char* key) const { return path_ + "." + key; }

 private:
  const nlohmann::json* take(const char* key) {
    if (!j_.contains(key)) return nullptr;
    used_.insert(key);
    return &j_.at(key);
  }

  [[noreturn]] void fail(const char* key, const char* expected) const {
    throw InvalidConfig(path_ + "." + key + " must be " + expected);
  }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty() || base.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

void require(bool ok, const std::string& key, const char* what) {
  if (!ok) throw InvalidConfig(key + " " + what);
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  Section root(j, "config");
  root.read("run_id", cfg.run_id);
  require(!cfg.run_id.empty(), "config.run_id", "must not be empty");

  if (!root.has("data")) throw InvalidConfig("missing section data");
  {
    Section s(root.child("data"), "data");
    auto& d = cfg.data;
    s.read("generator", d.generator);
    s.read("standardize", d.standardize);
    if (s.has("seed")) {
      std::uint64_t seed = 0;
      s.read("seed", seed);
      d.seed = seed;
    }
    if (d.generator == "blobs") {
      s.read("classes", d.classes);
      s.read("dim", d.dim);
      s.read("train_per_class", d.train_per_class);
      s.read("test_per_class", d.test_per_class);
      s.read("separation", d.separation);
      require(d.classes >= 2, "data.classes", "must be >= 2");
      require(d.dim >= 2, "data.dim", "must be >= 2");
      require(d.train_per_class >= 1, "data.train_per_class", "must be >= 1");
      require(d.test_per_class >= 1, "data.test_per_class", "must be >= 1");
      require(d.separation >= 0.0, "data.separation", "must be >= 0");
    } else if (d.generator == "retrieval") {
      s.read("train_classes", d.train_classes);
      s.read("test_classes", d.test_classes);
      s.read("dim", d.dim);
      s.read("n_per_class", d.n_per_class);
      s.read("separation", d.separation);
      s.read_enum("distance", d.distance, parse_distance);
      require(d.train_classes >= 2, "data.train_classes", "must be >= 2");
      require(d.test_classes >= 2, "data.test_classes", "must be >= 2");
      require(d.n_per_class >= 2, "data.n_per_class", "must be >= 2");
    } else if (d.generator == "sparse_multilabel") {
      s.read("classes", d.classes);
      s.read("dim", d.dim);
      s.read("train_samples", d.train_samples);
      s.read("test_samples", d.test_samples);
      s.read("avg_positives", d.avg_positives);
      s.read("imbalance_ratio", d.imbalance_ratio);
      s.read("signal", d.signal);
      s.read("noise", d.noise);
      require(d.classes >= 2, "data.classes", "must be >= 2");
      require(d.train_samples >= 1, "data.train_samples", "must be >= 1");
      require(d.test_samples >= 1, "data.test_samples", "must be >= 1");
    } else if (d.generator == "file") {
      s.read_enum("task", d.task, parse_task);
      s.read("train_path", d.train_path);
      s.read("test_path", d.test_path);
      s.read("query_path", d.query_path);
      s.read("gallery_path", d.gallery_path);
      s.read("num_classes", d.num_classes);
      s.read_enum("distance", d.distance, parse_distance);
      require(!d.train_path.empty(), "data.train_path", "is required for generator file");
      if (d.task == Task::kRetrieve) {
        require(!d.query_path.empty() && !d.gallery_path.empty(), "data.query_path/gallery_path",
                "are required for task retrieve");
      } else {
        require(!d.test_path.empty(), "data.test_path", "is required for this task");
      }
      d.train_path = resolve(base_dir, d.train_path);
      d.test_path = resolve(base_dir, d.test_path);
      d.query_path = resolve(base_dir, d.query_path);
      d.gallery_path = resolve(base_dir, d.gallery_path);
    } else {
      throw InvalidConfig("data.generator: unknown generator '" + d.generator + "'");
    }
    s.finish();
  }

  if (root.has("model")) {
    Section s(root.child("model"), "model");
    s.read("hidden", cfg.hidden);
    for (std::size_t h : cfg.hidden) require(h > 0, "model.hidden", "entries must be positive");
    s.finish();
  }

  if (root.has("loss")) {
    Section s(root.child("loss"), "loss");
    s.read_enum("variant", cfg.loss.variant, parse_variant);
    s.read("m", cfg.loss.m);
    s.read("beta", cfg.loss.beta);
    s.read("r", cfg.loss.r);
    s.read("detach_weight", cfg.loss.detach_weight);
    s.finish();
    try {
      cfg.loss.validate();
    } catch (const Error& e) {
      throw InvalidConfig(e.what());
    }
  }

  if (root.has("optimizer")) {
    Section s(root.child("optimizer"), "optimizer");
    auto& o = cfg.optimizer;
    OptimizerKind kind = o.kind;
    s.read_enum("kind", kind, parse_optimizer);
    if (kind == OptimizerKind::kAdam) o = OptimizerConfig::adam_defaults();
    s.read("learning_rate", o.learning_rate);
    s.read("momentum", o.momentum);
    s.read("weight_decay", o.weight_decay);
    s.read("adam_beta1", o.adam_beta1);
    s.read("adam_beta2", o.adam_beta2);
    s.read("adam_eps", o.adam_eps);
    s.read("decay_epoch", o.decay_epoch);
    s.read("decay_factor", o.decay_factor);
    s.finish();
    o.validate();
  }

  if (root.has("training")) {
    Section s(root.child("training"), "training");
    s.read("epochs", cfg.epochs);
    s.read("batch_size", cfg.batch_size);
    s.read("seed", cfg.seed);
    require(cfg.batch_size >= 1, "training.batch_size", "must be >= 1");
    s.finish();
  }

  if (root.has("output")) {
    Section s(root.child("output"), "output");
    std::string dir = cfg.output_dir.string();
    s.read("directory", dir);
    cfg.output_dir = dir;
    s.read("trace_stride", cfg.trace_stride);
    require(cfg.trace_stride >= 1, "output.trace_stride", "must be >= 1");
    s.finish();
  }
  root.finish();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, path.parent_path());
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json data{{"generator", this->data.generator}, {"standardize", this->data.standardize}};
  if (this->data.seed) data["seed"] = *this->data.seed;
  const auto& d = this->data;
  const char* distance = d.distance == DistanceMetric::kCosine ? "cosine" : "euclidean";
  if (d.generator == "blobs") {
    data.update({{"classes", d.classes},
                 {"dim", d.dim},
                 {"train_per_class", d.train_per_class},
                 {"test_per_class", d.test_per_class},
                 {"separation", d.separation}});
  } else if (d.generator == "retrieval") {
    data.update({{"train_classes", d.train_classes},
                 {"test_classes", d.test_classes},
                 {"dim", d.dim},
                 {"n_per_class", d.n_per_class},
                 {"separation", d.separation},
                 {"distance", distance}});
  } else if (d.generator == "sparse_multilabel") {
    data.update({{"classes", d.classes},
                 {"dim", d.dim},
                 {"train_samples", d.train_samples},
                 {"test_samples", d.test_samples},
                 {"avg_positives", d.avg_positives},
                 {"imbalance_ratio", d.imbalance_ratio},
                 {"signal", d.signal},
                 {"noise", d.noise}});
  } else {
    data.update({{"task", task_name(d.task)},
                 {"train_path", d.train_path},
                 {"test_path", d.test_path},
                 {"query_path", d.query_path},
                 {"gallery_path", d.gallery_path},
                 {"num_classes", d.num_classes},
                 {"distance", distance}});
  }
  return {
      {"run_id", run_id},
      {"data", data},
      {"model", {{"hidden", hidden}}},
      {"loss",
       {{"variant", variant_name(loss.variant)},
        {"m", loss.m},
        {"beta", loss.beta},
        {"r", loss.r},
        {"detach_weight", loss.detach_weight}}},
      {"optimizer",
       {{"kind", optimizer_name(optimizer.kind)},
        {"learning_rate", optimizer.learning_rate},
        {"momentum", optimizer.momentum},
        {"weight_decay", optimizer.weight_decay},
        {"adam_beta1", optimizer.adam_beta1},
        {"adam_beta2", optimizer.adam_beta2},
        {"adam_eps", optimizer.adam_eps},
        {"decay_epoch", optimizer.decay_epoch},
        {"decay_factor", optimizer.decay_factor}}},
      {"training", {{"epochs", epochs}, {"batch_size", batch_size}, {"seed", seed}}},
      {"output", {{"directory", output_dir.string()}, {"trace_stride", trace_stride}}},
  };
}

}  // namespace rlr
