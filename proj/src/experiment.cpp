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

#include "rlr/experiment.hpp"

#include <chrono>
#include <fstream>

#include "rlr/error.hpp"
#include "rlr/rng.hpp"

namespace rlr {

namespace {
constexpr std::uint64_t kDataTag = 101;
constexpr std::uint64_t kInitTag = 102;
constexpr std::uint64_t kShuffleTag = 103;
}  // namespace

RunSeeds derive_seeds(const RunConfig& cfg, std::uint64_t run_seed) {
  return {cfg.data.seed ? *cfg.data.seed : mix_seed(run_seed, kDataTag),
          mix_seed(run_seed, kInitTag), mix_seed(run_seed, kShuffleTag)};
}

PreparedData generate_data(const RunConfig& cfg, std::uint64_t run_seed) {
  const auto& d = cfg.data;
  const std::uint64_t seed = derive_seeds(cfg, run_seed).data;
  PreparedData out;
  out.task = d.resolved_task();
  if (d.generator == "blobs") {
    auto split = gen_blobs_split(d.classes, d.dim, d.train_per_class, d.test_per_class,
                                 d.separation, seed);
    out.train = std::move(split.train);
    out.test = std::move(split.test);
  } else if (d.generator == "retrieval") {
    auto split = gen_retrieval(d.train_classes, d.test_classes, d.dim, d.n_per_class, d.separation,
                               seed);
    out.train = std::move(split.train);
    out.query = std::move(split.query);
    out.gallery = std::move(split.gallery);
  } else if (d.generator == "sparse_multilabel") {
    SparseMultilabelParams p;
    p.num_classes = d.classes;
    p.num_samples = d.train_samples;
    p.dim = d.dim;
    p.avg_positives = d.avg_positives;
    p.imbalance_ratio = d.imbalance_ratio;
    p.signal = d.signal;
    p.noise = d.noise;
    p.seed = seed;
    auto split = gen_sparse_multilabel_split(p, d.test_samples);
    out.train = std::move(split.train);
    out.test = std::move(split.test);
  } else if (d.generator == "file") {
    DelimitedSchema schema;
    schema.num_classes = d.num_classes;
    out.train = load_delimited(d.train_path, schema);
    if (out.task == Task::kRetrieve) {
      out.query = load_delimited(d.query_path);
      out.gallery = load_delimited(d.gallery_path);
    } else {
      schema.num_classes = out.train.num_classes;
      out.test = load_delimited(d.test_path, schema);
    }
  } else {
    throw InvalidConfig("data.generator: unknown generator '" + d.generator + "'");
  }
  return out;
}

PreparedData prepare_data(const RunConfig& cfg, std::uint64_t run_seed) {
  PreparedData out = generate_data(cfg, run_seed);
  if (cfg.data.standardize) {
    out.standardizer = Standardizer::fit(out.train);
    for (Dataset* d : {&out.train, &out.test, &out.query, &out.gallery}) {
      if (d->size() > 0) out.standardizer->apply(*d);
    }
  }
  return out;
}

EvalReport evaluate_classify(const MlpModel& model, const Dataset& data) {
  if (!data.single_label()) throw UnsupportedVariant("classify task needs single-label data");
  const Matrix logits = model.forward(data.features).logits;
  EvalReport rep;
  rep.task = "classify";
  rep.top1 = top1_accuracy(logits, data.labels);
  std::vector<std::vector<std::size_t>> predictions(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) predictions[i] = {argmax(logits.row(i))};
  rep.balanced_per_class_acc = balanced_accuracy(predictions, data.labels, data.num_classes).value;
  rep.evaluated = data.size();
  return rep;
}

EvalReport evaluate_multilabel(const MlpModel& model, const Dataset& data) {
  if (data.single_label()) {
    throw UnsupportedVariant("multilabel task refused: every row has exactly one label");
  }
  const Matrix scores = model.forward(data.features).logits;
  std::vector<std::vector<std::size_t>> truth;
  truth.reserve(data.size());
  for (const auto& y : data.labels) truth.emplace_back(y.positives().begin(), y.positives().end());
  const auto ml = multilabel_report(scores, truth, 5);
  EvalReport rep;
  rep.task = "multilabel";
  rep.per_image_acc_top5 = ml.per_image_acc;
  rep.per_class_acc_top5 = ml.per_class_acc;
  rep.per_image_map = ml.per_image_map;
  rep.per_class_map = ml.per_class_map;
  rep.evaluated = ml.images;
  rep.skipped = ml.skipped_images;
  return rep;
}

EvalReport evaluate_retrieval(const MlpModel& model, const Dataset& query, const Dataset& gallery,
                              DistanceMetric distance) {
  if (!query.single_label() || !gallery.single_label()) {
    throw UnsupportedVariant("retrieve task needs one identity per row");
  }
  std::vector<std::size_t> qid;
  std::vector<std::size_t> gid;
  for (const auto& y : query.labels) qid.push_back(y.label());
  for (const auto& y : gallery.labels) gid.push_back(y.label());
  const auto rr = retrieval_eval(model.embed(query.features), model.embed(gallery.features), qid, gid,
                                 distance);
  EvalReport rep;
  rep.task = "retrieve";
  rep.rank1 = rr.rank1;
  rep.map_retrieval = rr.map;
  rep.evaluated = rr.evaluated;
  rep.skipped = rr.skipped;
  return rep;
}

EvalReport evaluate(const MlpModel& model, const PreparedData& data, DistanceMetric distance) {
  switch (data.task) {
    case Task::kClassify:
      return evaluate_classify(model, data.test);
    case Task::kMultilabel:
      return evaluate_multilabel(model, data.test);
    case Task::kRetrieve:
      return evaluate_retrieval(model, data.query, data.gallery, distance);
  }
  throw InvalidConfig("unknown task");
}

RunOutcome run_experiment(const RunConfig& cfg, std::uint64_t run_seed) {
  const auto start = std::chrono::steady_clock::now();
  const RunSeeds seeds = derive_seeds(cfg, run_seed);
  PreparedData data = prepare_data(cfg, run_seed);

  std::vector<std::size_t> dims{data.train.dim()};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(data.train.num_classes);

  RunOutcome out{MlpModel::initialized(dims, seeds.init), {}, {}, data.standardizer, 0.0};
  TrainConfig tc{cfg.epochs, cfg.batch_size, seeds.shuffle, cfg.trace_stride};
  out.train = train(out.model, data.train, cfg.loss, cfg.optimizer, tc);
  if (!out.train.diverged) out.report = evaluate(out.model, data, cfg.data.distance);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.train.trace.run_meta = {{"run_id", cfg.run_id},
                              {"seed", run_seed},
                              {"loss", cfg.to_json()["loss"]},
                              {"optimizer", cfg.to_json()["optimizer"]},
                              {"data", cfg.to_json()["data"]},
                              {"steps", out.train.steps},
                              {"diverged", out.train.diverged},
                              {"message", out.train.message},
                              {"wall_seconds", out.wall_seconds}};
  return out;
}

RunFiles run_files(const RunConfig& cfg, const std::filesystem::path& dir) {
  return {dir / (cfg.run_id + ".ckpt.json"), dir / (cfg.run_id + ".trace.csv"),
          dir / (cfg.run_id + ".trace.json"), dir / "eval.json", dir / "config.resolved.json"};
}

void save_model(const std::filesystem::path& path, const MlpModel& model, std::uint64_t seed,
                const std::optional<Standardizer>& standardizer) {
  auto j = checkpoint_to_json(model, seed);
  if (standardizer) {
    j["standardizer"] = {{"mean", standardizer->mean()}, {"scale", standardizer->scale()}};
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  Checkpoint ckpt = checkpoint_from_json(j);
  LoadedModel out{std::move(ckpt.model), ckpt.seed, std::nullopt};
  if (j.contains("standardizer")) {
    out.standardizer =
        Standardizer::from_parts(j["standardizer"].at("mean").get<std::vector<double>>(),
                                 j["standardizer"].at("scale").get<std::vector<double>>());
  }
  return out;
}

std::string dump_report(const EvalReport& report) { return report.to_json().dump(2) + "\n"; }

RunFiles write_run(const RunConfig& cfg, std::uint64_t run_seed, const RunOutcome& outcome,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const RunFiles files = run_files(cfg, dir);
  save_model(files.checkpoint, outcome.model, run_seed, outcome.standardizer);
  export_trace(outcome.train.trace, TraceFormat::kCsv, files.trace_csv);
  export_trace(outcome.train.trace, TraceFormat::kJson, files.trace_json);
  {
    std::ofstream out(files.report, std::ios::binary);
    if (!out) throw IoError("cannot write " + files.report.string());
    out << dump_report(outcome.report);
  }
  {
    auto resolved = cfg.to_json();
    resolved["training"]["seed"] = run_seed;
    std::ofstream out(files.resolved_config, std::ios::binary);
    if (!out) throw IoError("cannot write " + files.resolved_config.string());
    out << resolved.dump(2) << '\n';
  }
  return files;
}

std::string default_metric(Task task) {
  switch (task) {
    case Task::kClassify:
      return "top1";
    case Task::kRetrieve:
      return "rank1";
    case Task::kMultilabel:
      return "per_class_acc_top5";
  }
  return "top1";
}

namespace {
nlohmann::json comparable_part(const RunConfig& cfg) {
  auto j = cfg.to_json();
  j.erase("loss");
  j.erase("run_id");
  j.erase("output");
  return j;
}
}  // namespace

void check_comparable(const RunConfig& a, const RunConfig& b) {
  const auto ja = comparable_part(a);
  const auto jb = comparable_part(b);
  if (ja == jb) return;
  std::string where;
  for (const auto& [k, v] : ja.items()) {
    if (!jb.contains(k) || jb[k] != v) where += (where.empty() ? "" : ", ") + k;
  }
  throw InvalidConfig("refusing to compare: configs differ outside the loss section (" + where +
                      ")");
}

nlohmann::json Comparison::to_json() const {
  nlohmann::json j{{"metric", metric}, {"seeds", seeds}, {"a", a},
                   {"b", b},           {"mean_a", mean_a}, {"mean_b", mean_b},
                   {"mean_diff", mean_a - mean_b}};
  if (wilcoxon) {
    j["wilcoxon"] = {{"statistic", wilcoxon->statistic}, {"w_plus", wilcoxon->w_plus},
                     {"w_minus", wilcoxon->w_minus},     {"p_value", wilcoxon->p_value},
                     {"n", wilcoxon->n},                 {"zeros_dropped", wilcoxon->zeros_dropped},
                     {"exact", wilcoxon->exact}};
  } else {
    j["wilcoxon"] = {{"insufficient_data", insufficient}};
  }
  return j;
}

Comparison compare_runs(const RunConfig& a, const RunConfig& b, std::uint64_t first,
                        std::uint64_t last, const std::string& metric) {
  check_comparable(a, b);
  if (last < first) throw InvalidInput("empty seed range");
  Comparison out;
  out.metric = metric.empty() ? default_metric(a.data.resolved_task()) : metric;
  for (std::uint64_t s = first;; ++s) {
    const RunOutcome ra = run_experiment(a, s);
    const RunOutcome rb = run_experiment(b, s);
    const auto ma = ra.report.get(out.metric);
    const auto mb = rb.report.get(out.metric);
    if (ra.train.diverged || rb.train.diverged) {
      throw NumericalError("seed " + std::to_string(s) + ": training diverged");
    }
    if (!ma || !mb) throw InvalidConfig("metric '" + out.metric + "' is not defined for this task");
    out.seeds.push_back(s);
    out.a.push_back(*ma);
    out.b.push_back(*mb);
    if (s == last) break;
  }
  for (std::size_t i = 0; i < out.a.size(); ++i) {
    out.mean_a += out.a[i];
    out.mean_b += out.b[i];
  }
  out.mean_a /= static_cast<double>(out.a.size());
  out.mean_b /= static_cast<double>(out.b.size());
  try {
    out.wilcoxon = wilcoxon_signed_rank(out.a, out.b);
  } catch (const InsufficientData& e) {
    out.insufficient = e.what();
  }
  return out;
}

}  // namespace rlr
