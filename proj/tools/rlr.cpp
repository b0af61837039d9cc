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

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rlr/config.hpp"
#include "rlr/error.hpp"
#include "rlr/experiment.hpp"
#include "rlr/losses.hpp"
#include "rlr/metrics.hpp"
#include "rlr/text.hpp"

namespace fs = std::filesystem;
using namespace rlr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitThreshold = 1;
constexpr int kExitUsage = 2;
constexpr const char* kOutputRootEnv = "RLR_OUTPUT_ROOT";
constexpr double kGradTolerance = 1e-5;

struct SeedRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
};

// "7" or "1..10", inclusive.
SeedRange parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  SeedRange r;
  try {
    if (dots == std::string::npos) {
      r.first = r.last = std::stoull(s);
    } else {
      r.first = std::stoull(s.substr(0, dots));
      r.last = std::stoull(s.substr(dots + 2));
    }
  } catch (const std::exception&) {
    throw InvalidInput("bad seed range '" + s + "' (expected N or A..B)");
  }
  if (r.last < r.first) throw InvalidInput("empty seed range '" + s + "'");
  return r;
}

fs::path output_root(const RunConfig& cfg) {
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
  return cfg.output_dir;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

// ---- gen-data ----------------------------------------------------------

struct GenDataArgs {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
  const RunConfig cfg = RunConfig::load(a.config);
  if (cfg.data.generator == "file") throw InvalidConfig("data.generator: 'file' has nothing to generate");
  const PreparedData data = generate_data(cfg, a.seed);
  const fs::path dir = a.out.empty() ? output_root(cfg) / cfg.run_id / "data" : fs::path(a.out);
  fs::create_directories(dir);
  std::vector<std::pair<std::string, const Dataset*>> parts{{"train", &data.train}};
  if (data.task == Task::kRetrieve) {
    parts.emplace_back("query", &data.query);
    parts.emplace_back("gallery", &data.gallery);
  } else {
    parts.emplace_back("test", &data.test);
  }
  for (const auto& [name, ds] : parts) {
    const fs::path p = dir / (name + ".csv");
    save_delimited(p, *ds);
    std::cout << name << ": " << ds->size() << " rows, dim " << ds->dim() << ", K "
              << ds->num_classes << " -> " << p.string() << '\n';
  }
  return kExitOk;
}

// ---- grad-check --------------------------------------------------------

struct GradCheckArgs {
  std::string variant = "all";
  std::vector<std::size_t> ks{100};
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  double m = 25.0;
  double beta = 10.0;
  double r = 2.0;
};

int cmd_grad_check(const GradCheckArgs& a) {
  std::vector<std::string> names;
  if (a.variant == "all") {
    names = {"sr", "lr", "hs-lr", "ss-lr", "ss-lr-detach", "hs-sr"};
  } else {
    names = {a.variant};
  }
  bool ok = true;
  std::printf("%-13s %5s %7s %14s %8s  %s\n", "variant", "K", "trials", "max_rel_err", "redraws",
              "result");
  for (const auto& name : names) {
    LossConfig cfg;
    cfg.m = a.m;
    cfg.beta = a.beta;
    cfg.r = a.r;
    if (name == "ss-lr-detach") {
      cfg.variant = LossVariant::kSsLR;
      cfg.detach_weight = true;
    } else {
      cfg.variant = parse_variant(name);
    }
    cfg.validate();
    for (std::size_t k : a.ks) {
      const auto res = grad_check(cfg, k, a.trials, a.seed);
      const bool pass = res.max_rel_error < kGradTolerance;
      ok = ok && pass;
      std::printf("%-13s %5zu %7zu %14.3e %8zu  %s\n", name.c_str(), k, res.trials,
                  res.max_rel_error, res.redraws, pass ? "PASS" : "FAIL");
    }
  }
  return ok ? kExitOk : kExitThreshold;
}

// ---- train -------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string seeds;
  std::string out;
};

void print_report(std::uint64_t seed, const RunOutcome& o) {
  std::cout << "seed " << seed << ": " << o.train.steps << " steps";
  if (o.train.diverged) {
    std::cout << ", diverged (" << o.train.message << ")\n";
    return;
  }
  const auto j = o.report.to_json();
  for (const auto& [k, v] : j.items()) {
    if (v.is_number_float()) std::cout << ", " << k << " " << fmt(v.get<double>());
  }
  std::cout << ", " << fmt(o.wall_seconds) << " s\n";
}

// One row per seed, then mean and std rows over the metrics the task defines.
std::string summary_csv(const std::vector<std::pair<std::uint64_t, EvalReport>>& rows) {
  static const std::vector<std::string> keys{"top1",          "balanced_per_class_acc",
                                             "per_image_acc_top5", "per_class_acc_top5",
                                             "per_image_map", "per_class_map",
                                             "rank1",         "map_retrieval"};
  std::vector<std::string> used;
  for (const auto& k : keys) {
    if (!rows.empty() && rows.front().second.get(k)) used.push_back(k);
  }
  std::string out = "seed";
  for (const auto& k : used) out += "," + k;
  out += "\n";
  for (const auto& [seed, rep] : rows) {
    out += std::to_string(seed);
    for (const auto& k : used) {
      const auto v = rep.get(k);
      out += "," + (v ? text::format_double(*v) : std::string("nan"));
    }
    out += "\n";
  }
  std::string mean_row = "mean";
  std::string std_row = "std";
  for (const auto& k : used) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [seed, rep] : rows) {
      if (auto v = rep.get(k)) sum += *v, ++n;
    }
    const double mean = n ? sum / static_cast<double>(n) : std::nan("");
    double ss = 0.0;
    for (const auto& [seed, rep] : rows) {
      if (auto v = rep.get(k)) ss += (*v - mean) * (*v - mean);
    }
    // Sample standard deviation.
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    mean_row += "," + text::format_double(mean);
    std_row += "," + text::format_double(sd);
  }
  return out + mean_row + "\n" + std_row + "\n";
}

int cmd_train(const TrainArgs& a) {
  const RunConfig cfg = RunConfig::load(a.config);
  const fs::path root = a.out.empty() ? output_root(cfg) / cfg.run_id : fs::path(a.out);
  if (a.seeds.empty()) {
    const RunOutcome o = run_experiment(cfg, cfg.seed);
    const RunFiles files = write_run(cfg, cfg.seed, o, root);
    print_report(cfg.seed, o);
    std::cout << "wrote " << files.checkpoint.parent_path().string() << '\n';
    return o.train.diverged ? kExitThreshold : kExitOk;
  }
  const SeedRange range = parse_seed_range(a.seeds);
  std::vector<std::pair<std::uint64_t, EvalReport>> rows;
  bool diverged = false;
  for (std::uint64_t s = range.first;; ++s) {
    const RunOutcome o = run_experiment(cfg, s);
    write_run(cfg, s, o, root / ("seed-" + std::to_string(s)));
    print_report(s, o);
    diverged = diverged || o.train.diverged;
    rows.emplace_back(s, o.report);
    if (s == range.last) break;
  }
  const std::string summary = summary_csv(rows);
  write_text(root / "summary.csv", summary);
  std::cout << summary << "wrote " << (root / "summary.csv").string() << '\n';
  return diverged ? kExitThreshold : kExitOk;
}

// ---- eval --------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string query;
  std::string gallery;
  std::string task = "classify";
  std::string distance = "cosine";
  std::string out;
};

Dataset load_for_model(const fs::path& path, const LoadedModel& m, bool cap_classes) {
  DelimitedSchema schema;
  if (cap_classes) schema.num_classes = m.model.num_classes();
  Dataset d = load_delimited(path, schema);
  if (d.dim() != m.model.input_dim()) {
    throw ShapeError(path.string() + " has " + std::to_string(d.dim()) +
                     " features; the checkpoint expects " + std::to_string(m.model.input_dim()));
  }
  if (m.standardizer) m.standardizer->apply(d);
  return d;
}

int cmd_eval(const EvalArgs& a) {
  const Task task = parse_task(a.task);
  const LoadedModel m = load_model(a.checkpoint);
  EvalReport rep;
  if (task == Task::kRetrieve) {
    if (a.query.empty() || a.gallery.empty()) {
      throw InvalidInput("retrieve needs --query and --gallery");
    }
    // Identities are arbitrary labels here, not model classes.
    rep = evaluate_retrieval(m.model, load_for_model(a.query, m, false),
                             load_for_model(a.gallery, m, false), parse_distance(a.distance));
  } else {
    if (a.data.empty()) throw InvalidInput(std::string(task_name(task)) + " needs --data");
    const Dataset d = load_for_model(a.data, m, true);
    rep = task == Task::kClassify ? evaluate_classify(m.model, d) : evaluate_multilabel(m.model, d);
  }
  const std::string text = dump_report(rep);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text(a.out, text);
    std::cout << "wrote " << a.out << '\n';
  }
  return kExitOk;
}

// ---- compare -----------------------------------------------------------

struct CompareArgs {
  std::string config_a;
  std::string config_b;
  std::string seeds = "1..10";
  std::string metric;
  std::string out;
};

int cmd_compare(const CompareArgs& a) {
  const RunConfig ca = RunConfig::load(a.config_a);
  const RunConfig cb = RunConfig::load(a.config_b);
  check_comparable(ca, cb);
  const SeedRange range = parse_seed_range(a.seeds);
  const Comparison c = compare_runs(ca, cb, range.first, range.last, a.metric);

  std::string table = "seed," + ca.run_id + "," + cb.run_id + ",diff\n";
  std::printf("%-6s %14s %14s %10s\n", "seed", ca.run_id.c_str(), cb.run_id.c_str(), "diff");
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    const double d = c.a[i] - c.b[i];
    std::printf("%-6llu %14.6f %14.6f %10.6f\n", static_cast<unsigned long long>(c.seeds[i]),
                c.a[i], c.b[i], d);
    table += std::to_string(c.seeds[i]) + "," + text::format_double(c.a[i]) + "," +
             text::format_double(c.b[i]) + "," + text::format_double(d) + "\n";
  }
  std::printf("metric %s: mean %s %.6f, mean %s %.6f, mean diff %.6f\n", c.metric.c_str(),
              ca.run_id.c_str(), c.mean_a, cb.run_id.c_str(), c.mean_b, c.mean_a - c.mean_b);
  if (c.wilcoxon) {
    std::printf("wilcoxon: W %.1f, n %zu, %s p %.6g\n", c.wilcoxon->statistic, c.wilcoxon->n,
                c.wilcoxon->exact ? "exact" : "normal", c.wilcoxon->p_value);
  } else {
    std::printf("wilcoxon: insufficient data (%s)\n", c.insufficient.c_str());
  }
  auto summary = c.to_json();
  summary["config_a"] = ca.run_id;
  summary["config_b"] = cb.run_id;
  const fs::path dir = a.out.empty() ? output_root(ca) / ("compare-" + ca.run_id + "-vs-" + cb.run_id)
                                     : fs::path(a.out);
  write_text(dir / "compare.csv", table);
  write_text(dir / "compare.json", summary.dump(2) + "\n");
  std::cout << "wrote " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Focus-rectified logistic regression toolkit.\n"
               "Output root defaults to the config's output.directory; set " +
               std::string(kOutputRootEnv) + " to override it."};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a config's synthetic splits as CSV");
  gen_cmd->add_option("--config", gen.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--seed", gen.seed, "Run seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory (default <root>/<run_id>/data)");

  GradCheckArgs gc;
  auto* gc_cmd = app.add_subcommand("grad-check", "Compare analytic loss gradients to finite differences");
  gc_cmd->add_option("--variant", gc.variant, "sr|lr|hs-lr|ss-lr|ss-lr-detach|hs-sr|all")
      ->check(CLI::IsMember({"sr", "lr", "hs-lr", "ss-lr", "ss-lr-detach", "hs-sr", "all"}))
      ->capture_default_str();
  gc_cmd->add_option("--k", gc.ks, "Number of classes; repeat or comma-separate for several")
      ->delimiter(',')
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  gc_cmd->add_option("--trials", gc.trials, "Random inputs per K")->capture_default_str()
      ->check(CLI::PositiveNumber);
  gc_cmd->add_option("--seed", gc.seed, "Seed")->capture_default_str();
  gc_cmd->add_option("--m", gc.m, "Hard-selection percentage")->capture_default_str();
  gc_cmd->add_option("--beta", gc.beta, "Negative weight scale")->capture_default_str();
  gc_cmd->add_option("--r", gc.r, "Soft-selection exponent")->capture_default_str();

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "Train and evaluate one config");
  tr_cmd->add_option("--config", tr.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--seeds", tr.seeds, "Seed or inclusive range A..B (default: config seed)");
  tr_cmd->add_option("--out", tr.out, "Output directory (default <root>/<run_id>)");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on delimited data");
  ev_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint written by train")
      ->required()
      ->check(CLI::ExistingFile);
  ev_cmd->add_option("--task", ev.task, "classify|retrieve|multilabel")
      ->check(CLI::IsMember({"classify", "retrieve", "multilabel"}))
      ->capture_default_str();
  ev_cmd->add_option("--data", ev.data, "Dataset for classify/multilabel")->check(CLI::ExistingFile);
  ev_cmd->add_option("--query", ev.query, "Query set for retrieve")->check(CLI::ExistingFile);
  ev_cmd->add_option("--gallery", ev.gallery, "Gallery set for retrieve")->check(CLI::ExistingFile);
  ev_cmd->add_option("--distance", ev.distance, "cosine|euclidean")
      ->check(CLI::IsMember({"cosine", "euclidean"}))
      ->capture_default_str();
  ev_cmd->add_option("--out", ev.out, "Report path (default: stdout)");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Paired multi-seed comparison of two loss settings");
  cmp_cmd->add_option("--config-a", cmp.config_a, "First config")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--config-b", cmp.config_b, "Second config")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--seeds", cmp.seeds, "Inclusive seed range A..B")->capture_default_str();
  cmp_cmd->add_option("--metric", cmp.metric, "Report key to compare (default: task headline)");
  cmp_cmd->add_option("--out", cmp.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*gc_cmd) return cmd_grad_check(gc);
    if (*tr_cmd) return cmd_train(tr);
    if (*ev_cmd) return cmd_eval(ev);
    if (*cmp_cmd) return cmd_compare(cmp);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitThreshold;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
