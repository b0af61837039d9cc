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

// One PASS/FAIL line per acceptance criterion; exits 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rlr/diagnostics.hpp"
#include "rlr/error.hpp"
#include "rlr/experiment.hpp"
#include "rlr/losses.hpp"
#include "rlr/metrics.hpp"
#include "rlr/rng.hpp"

using namespace rlr;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kGradTol = 1e-5;
constexpr double kGradBudgetSeconds = 60.0;
constexpr double kFixtureTol = 1e-10;
constexpr double kEquivTol = 1e-12;
constexpr double kEarlyRatioMax = 0.2;
constexpr double kRunBudgetSeconds = 300.0;
constexpr double kTop1Margin = 0.03;
constexpr double kSrSlack = 0.01;
constexpr double kAlpha = 0.05;
constexpr double kWilcoxonAgree = 0.02;
constexpr std::uint64_t kFirstSeed = 1;
constexpr std::uint64_t kLastSeed = 10;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunConfig config(const std::string& name) {
  return RunConfig::load(fs::path(RLR_CONFIG_DIR) / (name + ".json"));
}

RunConfig with_variant(RunConfig cfg, LossVariant v) {
  cfg.loss.variant = v;
  cfg.run_id = cfg.run_id + "-" + std::string(variant_name(v));
  return cfg;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Per-seed metric for a config, or NaN for a diverged run.
std::vector<double> metric_over_seeds(const RunConfig& cfg, const std::string& metric) {
  std::vector<double> out;
  for (auto s = kFirstSeed; s <= kLastSeed; ++s) {
    const auto run = run_experiment(cfg, s);
    const auto v = run.train.diverged ? std::nullopt : run.report.get(metric);
    out.push_back(v ? *v : std::nan(""));
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LossConfig loss_cfg(LossVariant v, double m, double beta, double r, bool detach = false) {
  LossConfig c;
  c.variant = v;
  c.m = m;
  c.beta = beta;
  c.r = r;
  c.detach_weight = detach;
  return c;
}

void gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Mode {
    LossVariant v;
    bool detach;
  };
  const Mode modes[] = {{LossVariant::kSR, false},   {LossVariant::kLR, false},
                        {LossVariant::kHsLR, false}, {LossVariant::kSsLR, false},
                        {LossVariant::kSsLR, true},  {LossVariant::kHsSR, false}};
  double worst = 0.0;
  std::uint64_t seed = 1;
  for (const auto& mode : modes) {
    for (std::size_t k : {2u, 5u, 10u, 100u}) {
      const auto res = grad_check(loss_cfg(mode.v, 25.0, 10.0, 2.0, mode.detach), k, 100, seed++);
      worst = std::max(worst, res.max_rel_error);
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst < kGradTol && secs < kGradBudgetSeconds,
         "max rel error " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s");
}

void fixtures_check() {
  const double ln2 = std::log(2.0);
  double worst = 0.0;
  bool ratio_exact = true;
  auto zeros = [](std::size_t k) { return Logits(std::vector<double>(k, 0.0)); };
  for (std::size_t k : {2u, 5u, 10u, 100u}) {
    const auto y = TargetLabels::single(0, k);
    worst = std::max(worst, std::abs(sr_loss(zeros(k), y).loss - std::log(static_cast<double>(k))));
    const auto lr = lr_loss(zeros(k), y);
    worst = std::max(worst, std::abs(lr.loss - static_cast<double>(k) * ln2));
    ratio_exact = ratio_exact && lr.neg_loss / lr.pos_loss == static_cast<double>(k - 1);
  }
  const auto hs = hs_lr_loss(zeros(5), TargetLabels::single(0, 5), loss_cfg(LossVariant::kHsLR, 25, 10, 2));
  worst = std::max(worst, std::abs(hs.loss - 11.0 * ln2));
  const auto ss = ss_lr_loss(zeros(10), TargetLabels::single(0, 10), loss_cfg(LossVariant::kSsLR, 25, 10, 2));
  worst = std::max(worst, std::abs(ss.loss - 3.5 * ln2));
  report(2, worst <= kFixtureTol && ratio_exact,
         "max abs error " + fmt("%.3g", worst) + (ratio_exact ? ", ratio K-1 exact" : ", ratio K-1 off"));
}

void equivalence() {
  Rng rng(2024);
  double worst = 0.0;
  for (bool detach : {false, true}) {
    for (std::size_t k : {5u, 100u}) {
      for (int t = 0; t < 100; ++t) {
        std::vector<double> z(k);
        for (double& v : z) v = 2.0 * rng.normal();
        const auto y = TargetLabels::single(rng.below(k), k);
        const double beta = 0.5 + 20.0 * rng.uniform();
        const auto ss = ss_lr_loss(Logits(z), y, loss_cfg(LossVariant::kSsLR, 25, beta, 0.0, detach));
        const auto hs = hs_lr_loss(Logits(z), y, loss_cfg(LossVariant::kHsLR, 100, beta, 2.0));
        worst = std::max(worst, std::abs(ss.loss - hs.loss) / std::max(1.0, hs.loss));
        for (std::size_t j = 0; j < k; ++j) worst = std::max(worst, std::abs(ss.grad[j] - hs.grad[j]));
      }
    }
  }
  report(3, worst <= kEquivTol, "max deviation " + fmt("%.3g", worst));
}

void ncd() {
  const auto lr_cfg = config("blobs100");
  const auto ss_cfg = config("blobs100-ss-lr");
  bool ok = true;
  double worst_lr = 0.0;
  double slowest = 0.0;
  std::size_t ss_wins = 0;
  std::size_t neg_dominated = 0;
  for (auto s = kFirstSeed; s <= kLastSeed; ++s) {
    const auto lr = run_experiment(lr_cfg, s);
    const auto ss = run_experiment(ss_cfg, s);
    slowest = std::max({slowest, lr.wall_seconds, ss.wall_seconds});
    if (lr.train.diverged || ss.train.diverged) {
      ok = false;
      continue;
    }
    const auto a = summarize_ncd(lr.train.trace);
    const auto b = summarize_ncd(ss.train.trace);
    worst_lr = std::max(worst_lr, a.median_early_grad_ratio);
    ss_wins += b.median_early_grad_ratio > a.median_early_grad_ratio;
    const auto& first = lr.train.trace.records.front();
    neg_dominated += first.neg_loss > first.pos_loss && a.neg_loss_trend_sign < 0;
  }
  const std::size_t n = kLastSeed - kFirstSeed + 1;
  ok = ok && worst_lr < kEarlyRatioMax && ss_wins == n && neg_dominated == n &&
       slowest < kRunBudgetSeconds;
  report(4, ok,
         "lr early median ratio max " + fmt("%.3f", worst_lr) + ", ss > lr on " +
             std::to_string(ss_wins) + "/" + std::to_string(n) + ", neg-dominated falling start on " +
             std::to_string(neg_dominated) + "/" + std::to_string(n) + ", slowest run " +
             fmt("%.1f", slowest) + " s");
}

void ordering() {
  const auto cmp = compare_runs(config("blobs100-ss-lr"), config("blobs100"), kFirstSeed, kLastSeed, "top1");
  const double sr = mean(metric_over_seeds(config("blobs100-sr"), "top1"));
  const bool sig = cmp.wilcoxon.has_value() && cmp.wilcoxon->p_value < kAlpha;
  const bool ok = cmp.mean_a - cmp.mean_b >= kTop1Margin && cmp.mean_a >= sr - kSrSlack && sig;
  report(5, ok,
         "top1 ss-lr " + fmt("%.4f", cmp.mean_a) + ", lr " + fmt("%.4f", cmp.mean_b) + ", sr " +
             fmt("%.4f", sr) + ", p " + (cmp.wilcoxon ? fmt("%.4g", cmp.wilcoxon->p_value) : cmp.insufficient));
}

void retrieval() {
  Rng rng(606);
  std::size_t matched = 0;
  const std::size_t instances = 100;
  for (std::size_t t = 0; t < instances; ++t) {
    // Redraw until at least one query has a match so every instance is scored.
    fixtures::RetrievalInstance inst;
    oracle::RetrievalResult expect;
    do {
      inst = fixtures::random_retrieval(rng, t);
      expect = oracle::retrieval(inst.query, inst.gallery, inst.qid, inst.gid, inst.cosine);
    } while (expect.evaluated == 0);
    const auto got = retrieval_eval(fixtures::to_matrix(inst.query), fixtures::to_matrix(inst.gallery),
                                    inst.qid, inst.gid,
                                    inst.cosine ? DistanceMetric::kCosine : DistanceMetric::kEuclidean);
    matched += got.rank1 == expect.rank1 && got.map == expect.map && got.evaluated == expect.evaluated &&
               got.skipped == expect.skipped;
  }
  const auto base = config("retrieval");
  const double lr = mean(metric_over_seeds(base, "rank1"));
  const double hs = mean(metric_over_seeds(with_variant(base, LossVariant::kHsLR), "rank1"));
  report(6, matched == instances && hs >= lr,
         "oracle exact on " + std::to_string(matched) + "/" + std::to_string(instances) +
             ", rank1 hs-lr " + fmt("%.4f", hs) + ", lr " + fmt("%.4f", lr));
}

void multilabel() {
  std::size_t lists = 0;
  std::size_t matched = 0;
  for (const auto& list : oracle::all_binary_lists(8)) {
    const auto expect = oracle::average_precision(list);
    if (expect.den == 0) continue;  // no relevant item: undefined
    ++lists;
    matched += std::abs(average_precision(list) - expect.value()) <= 1e-15;
  }
  const auto base = config("sparse-ml");
  const std::string metric = "per_class_acc_top5";
  const double lr = mean(metric_over_seeds(base, metric));
  const double hs = mean(metric_over_seeds(with_variant(base, LossVariant::kHsLR), metric));
  const double ss = mean(metric_over_seeds(with_variant(base, LossVariant::kSsLR), metric));
  report(7, matched == lists && hs > lr && ss > lr,
         "ap oracle " + std::to_string(matched) + "/" + std::to_string(lists) + ", per-class acc hs-lr " +
             fmt("%.4f", hs) + ", ss-lr " + fmt("%.4f", ss) + ", lr " + fmt("%.4f", lr));
}

void wilcoxon() {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> zero5(5, 0.0);
  const auto five = wilcoxon_signed_rank(a, zero5, WilcoxonMethod::kExact);
  bool ok = five.p_value == 0.0625 && oracle::wilcoxon_exact_distinct(5, 15) == 0.0625;

  Rng rng(808);
  double worst = 0.0;
  const std::vector<double> zero20(20, 0.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> d(20);
    const double shift = 0.1 * static_cast<double>(t % 8);
    for (double& x : d) x = rng.normal() + shift;
    const auto e = wilcoxon_signed_rank(d, zero20, WilcoxonMethod::kExact);
    const auto n = wilcoxon_signed_rank(d, zero20, WilcoxonMethod::kNormal);
    worst = std::max(worst, std::abs(e.p_value - n.p_value));
  }
  ok = ok && worst < kWilcoxonAgree;
  report(8, ok, "n=5 p " + fmt("%.6g", five.p_value) + ", n=20 max |exact-normal| " + fmt("%.4f", worst));
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / "rlr_acceptance_determinism";
  fs::remove_all(root);
  bool ok = true;
  for (const char* name : {"blobs100", "retrieval"}) {
    const auto cfg = config(name);
    const auto a = write_run(cfg, 3, run_experiment(cfg, 3), root / name / "a");
    const auto b = write_run(cfg, 3, run_experiment(cfg, 3), root / name / "b");
    ok = ok && slurp(a.trace_csv) == slurp(b.trace_csv) && slurp(a.report) == slurp(b.report) &&
         !slurp(a.trace_csv).empty();
  }
  report(9, ok, ok ? "trace csv and eval report identical" : "outputs differ");
}

void guarded(int id, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, false, std::string("error: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded(1, gradients);
  guarded(2, fixtures_check);
  guarded(3, equivalence);
  guarded(4, ncd);
  guarded(5, ordering);
  guarded(6, retrieval);
  guarded(7, multilabel);
  guarded(8, wilcoxon);
  guarded(9, determinism);
  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
