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

#include <algorithm>
#include <cmath>
#include <vector>

#include "rlr/error.hpp"
#include "rlr/losses.hpp"
#include "rlr/rng.hpp"

using namespace rlr;

namespace {

const double kLn2 = std::log(2.0);

LossConfig with(LossVariant v, double m = 25.0, double beta = 10.0, double r = 2.0,
                bool detach = false) {
  LossConfig c;
  c.variant = v;
  c.m = m;
  c.beta = beta;
  c.r = r;
  c.detach_weight = detach;
  return c;
}

Logits zeros(std::size_t k) { return Logits(std::vector<double>(k, 0.0)); }

std::vector<double> random_z(Rng& rng, std::size_t k) {
  std::vector<double> z(k);
  for (double& v : z) v = 2.0 * rng.normal();
  return z;
}

// Binary cross-entropy summed over classes, written out term by term.
double naive_lr(const std::vector<double>& z, std::size_t label) {
  double loss = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double p = 1.0 / (1.0 + std::exp(-z[k]));
    const double q = k == label ? 1.0 : 0.0;
    loss -= q * std::log(p) + (1.0 - q) * std::log(1.0 - p);
  }
  return loss;
}

}  // namespace

TEST_CASE("TargetLabels invariants") {
  CHECK_THROWS_AS(TargetLabels({3}, 3), InvalidInput);
  CHECK_THROWS_AS(TargetLabels({}, 3), InvalidInput);
  const TargetLabels y({2, 0}, 4);
  CHECK(y.positives()[0] == 0);
  CHECK(y.positives()[1] == 2);
  CHECK(y.num_negatives() == 2);
  CHECK_FALSE(y.single_label());
  CHECK_THROWS(y.label());
}

TEST_CASE("variant names round-trip") {
  for (auto v : {LossVariant::kSR, LossVariant::kLR, LossVariant::kHsLR, LossVariant::kSsLR,
                 LossVariant::kHsSR}) {
    CHECK(parse_variant(variant_name(v)) == v);
  }
  CHECK_THROWS_AS(parse_variant("focal"), InvalidConfig);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(with(LossVariant::kSsLR, 25, 10, -1).validate(), InvalidConfig);
  CHECK_THROWS_AS(with(LossVariant::kHsLR, 101).validate(), InvalidConfig);
  CHECK_THROWS_AS(with(LossVariant::kHsLR, 25, 0).validate(), InvalidConfig);
}

TEST_CASE("sr: uniform logits") {
  const auto out = sr_loss(zeros(4), TargetLabels::single(2, 4));
  CHECK(std::abs(out.loss - std::log(4.0)) < 1e-12);
  const double expect[] = {0.25, 0.25, -0.75, 0.25};
  for (int k = 0; k < 4; ++k) CHECK(std::abs(out.grad[k] - expect[k]) < 1e-15);
  CHECK(out.pos_loss == out.loss);
  CHECK(out.neg_loss == 0.0);
}

TEST_CASE("sr: two classes") {
  const auto out = sr_loss(Logits({2.0, 0.0}), TargetLabels::single(0, 2));
  CHECK(std::abs(out.loss - softplus(-2.0)) < 1e-15);
  CHECK(std::abs(out.loss - 0.126928011042973) < 1e-12);
}

TEST_CASE("sr refuses multi-label input") {
  CHECK_THROWS_AS(sr_loss(zeros(3), TargetLabels({0, 1}, 3)), UnsupportedVariant);
}

TEST_CASE("lr: zero logits") {
  const auto out = lr_loss(zeros(10), TargetLabels::single(0, 10));
  CHECK(std::abs(out.loss - 10 * kLn2) < 1e-12);
  CHECK(std::abs(out.pos_loss - kLn2) < 1e-12);
  CHECK(std::abs(out.neg_loss - 9 * kLn2) < 1e-12);
  CHECK(out.grad[0] == -0.5);
  for (int k = 1; k < 10; ++k) CHECK(out.grad[k] == 0.5);

  const auto ml = lr_loss(zeros(3), TargetLabels({0, 2}, 3));
  CHECK(std::abs(ml.loss - 3 * kLn2) < 1e-12);
}

TEST_CASE("lr: decomposition ratio is K-1 at zero logits") {
  for (std::size_t k : {2u, 5u, 10u, 100u}) {
    const auto out = lr_loss(zeros(k), TargetLabels::single(0, k));
    CHECK(out.neg_loss / out.pos_loss == static_cast<double>(k - 1));
  }
}

TEST_CASE("lr agrees with direct summation") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + rng.below(30);
    std::vector<double> z(k);
    for (double& v : z) v = rng.normal();  // moderate range keeps the naive form accurate
    const std::size_t y = rng.below(k);
    const auto out = lr_loss(Logits(z), TargetLabels::single(y, k));
    CHECK(std::abs(out.loss - naive_lr(z, y)) < 1e-10);
  }
}

TEST_CASE("hard selection count and order") {
  CHECK(hard_selection_count(25, 4) == 1);
  CHECK(hard_selection_count(50, 4) == 2);
  CHECK(hard_selection_count(1, 4) == 1);  // floor gives 0; clamped
  CHECK(hard_selection_count(100, 9) == 9);

  const ProbVector p{{0.9, 0.8, 0.1, 0.7, 0.2}, false};
  CHECK(select_hard_negatives(p, TargetLabels::single(0, 5), 50) ==
        std::vector<std::size_t>{1, 3});

  const ProbVector tied{{0.5, 0.5, 0.5, 0.5, 0.5}, false};
  CHECK(select_hard_negatives(tied, TargetLabels::single(0, 5), 25) == std::vector<std::size_t>{1});

  const ProbVector flat{std::vector<double>(10, 0.3), false};
  CHECK(select_hard_negatives(flat, TargetLabels::single(0, 10), 100).size() == 9);

  CHECK_THROWS_AS(select_hard_negatives(ProbVector{{0.5, 0.5}, false}, TargetLabels({0, 1}, 2), 50),
                  InvalidInput);
}

TEST_CASE("hs-lr fixtures") {
  const auto y = TargetLabels::single(0, 5);
  const auto a = hs_lr_loss(zeros(5), y, with(LossVariant::kHsLR, 25, 10));
  CHECK(std::abs(a.loss - 11 * kLn2) < 1e-10);
  CHECK(a.selected_negatives == std::vector<std::size_t>{1});

  const auto b = hs_lr_loss(zeros(5), y, with(LossVariant::kHsLR, 100, 10));
  CHECK(std::abs(b.loss - 11 * kLn2) < 1e-10);
}

TEST_CASE("hs-lr: unselected negatives get exactly zero gradient") {
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    const auto z = random_z(rng, 40);
    const auto y = TargetLabels::single(rng.below(40), 40);
    const auto out = hs_lr_loss(Logits(z), y, with(LossVariant::kHsLR, 25, 10));
    CHECK(out.selected_negatives.size() == 9);
    for (std::size_t k = 0; k < 40; ++k) {
      const bool sel = std::find(out.selected_negatives.begin(), out.selected_negatives.end(), k) !=
                       out.selected_negatives.end();
      if (!sel && !y.contains(k)) REQUIRE(out.grad[k] == 0.0);
      if (sel) REQUIRE(out.grad[k] > 0.0);
    }
  }
}

TEST_CASE("ss-lr fixture") {
  const auto out = ss_lr_loss(zeros(10), TargetLabels::single(0, 10), with(LossVariant::kSsLR, 25, 10, 2));
  CHECK(std::abs(out.loss - 3.5 * kLn2) < 1e-10);
}

TEST_CASE("ss-lr: easy negatives vanish") {
  std::vector<double> z(4, 0.0);
  z[3] = -60.0;
  const auto y = TargetLabels::single(0, 4);
  const auto cfg = with(LossVariant::kSsLR, 25, 10, 2);
  const auto with_easy = ss_lr_loss(Logits(z), y, cfg);
  z[3] = -80.0;
  const auto easier = ss_lr_loss(Logits(z), y, cfg);
  CHECK(std::abs(with_easy.loss - easier.loss) < 1e-40 + 1e-15 * with_easy.loss);
  CHECK(std::abs(with_easy.grad[3]) < 1e-50);
}

TEST_CASE("ss-lr with r = 0 equals hs-lr with m = 100") {
  Rng rng(23);
  for (bool detach : {false, true}) {
    for (std::size_t k : {5u, 100u}) {
      for (int t = 0; t < 100; ++t) {
        const auto z = random_z(rng, k);
        const auto y = TargetLabels::single(rng.below(k), k);
        const double beta = 0.5 + 20.0 * rng.uniform();
        const auto ss = ss_lr_loss(Logits(z), y, with(LossVariant::kSsLR, 25, beta, 0.0, detach));
        const auto hs = hs_lr_loss(Logits(z), y, with(LossVariant::kHsLR, 100, beta));
        REQUIRE(std::abs(ss.loss - hs.loss) <= 1e-12 * std::max(1.0, hs.loss));
        for (std::size_t j = 0; j < k; ++j) REQUIRE(std::abs(ss.grad[j] - hs.grad[j]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("hs-sr fixture") {
  const auto out = hs_sr_loss(zeros(2), TargetLabels::single(0, 2), with(LossVariant::kHsSR, 100, 1));
  CHECK(std::abs(out.loss - 2 * kLn2) < 1e-12);
  CHECK_THROWS_AS(hs_sr_loss(zeros(3), TargetLabels({0, 1}, 3), with(LossVariant::kHsSR)),
                  UnsupportedVariant);
}

TEST_CASE("hs-sr selects on softmax probabilities") {
  const Logits z({0.1, 2.0, -1.0, 1.5, 0.3});
  const auto y = TargetLabels::single(0, 5);
  const auto out = hs_sr_loss(z, y, with(LossVariant::kHsSR, 50, 10));
  CHECK(out.selected_negatives == select_hard_negatives(softmax(z), y, 50));
}

TEST_CASE("losses are permutation equivariant") {
  Rng rng(31);
  const std::vector<LossConfig> cfgs{with(LossVariant::kSR), with(LossVariant::kLR),
                                     with(LossVariant::kHsLR), with(LossVariant::kSsLR),
                                     with(LossVariant::kSsLR, 25, 10, 2, true),
                                     with(LossVariant::kHsSR)};
  for (const auto& cfg : cfgs) {
    CAPTURE(variant_name(cfg.variant));
    for (int t = 0; t < 20; ++t) {
      const std::size_t k = 12;
      const auto z = random_z(rng, k);
      const std::size_t label = rng.below(k);
      const auto perm = rng.permutation(k);  // new position of class c is perm[c]
      std::vector<double> pz(k);
      for (std::size_t c = 0; c < k; ++c) pz[perm[c]] = z[c];
      const auto a = evaluate_loss(Logits(z), TargetLabels::single(label, k), cfg);
      const auto b = evaluate_loss(Logits(pz), TargetLabels::single(perm[label], k), cfg);
      REQUIRE(std::abs(a.loss - b.loss) <= 1e-12 * std::max(1.0, a.loss));
      for (std::size_t c = 0; c < k; ++c) REQUIRE(std::abs(a.grad[c] - b.grad[perm[c]]) <= 1e-12);
    }
  }
}

TEST_CASE("losses are non-negative and finite") {
  Rng rng(37);
  for (auto v : {LossVariant::kSR, LossVariant::kLR, LossVariant::kHsLR, LossVariant::kSsLR,
                 LossVariant::kHsSR}) {
    for (int t = 0; t < 50; ++t) {
      std::vector<double> z(20);
      for (double& x : z) x = 50.0 * rng.normal();
      const auto out = evaluate_loss(Logits(z), TargetLabels::single(rng.below(20), 20), with(v));
      REQUIRE(out.loss >= 0.0);
      REQUIRE(std::isfinite(out.loss));
      for (double g : out.grad) REQUIRE(std::isfinite(g));
    }
  }
}

TEST_CASE("logistic losses split total into positive and negative parts") {
  Rng rng(41);
  for (auto v : {LossVariant::kLR, LossVariant::kHsLR, LossVariant::kSsLR}) {
    const auto z = random_z(rng, 15);
    const auto out = evaluate_loss(Logits(z), TargetLabels({1, 4}, 15), with(v));
    CHECK(std::abs(out.loss - out.pos_loss - out.neg_loss) < 1e-12);
  }
}

TEST_CASE("grad_check passes for every variant") {
  const std::vector<LossConfig> cfgs{with(LossVariant::kSR), with(LossVariant::kLR),
                                     with(LossVariant::kHsLR), with(LossVariant::kSsLR),
                                     with(LossVariant::kSsLR, 25, 10, 2, true),
                                     with(LossVariant::kHsSR)};
  for (const auto& cfg : cfgs) {
    for (std::size_t k : {2u, 10u}) {
      const auto res = grad_check(cfg, k, 30, 3);
      CHECK(res.trials == 30);
      CHECK(res.max_rel_error < 1e-5);
    }
  }
}

TEST_CASE("grad_check redraws near selection ties") {
  // Many negatives at m = 50 make close boundaries likely over many trials.
  const auto res = grad_check(with(LossVariant::kHsLR, 50), 100, 200, 8);
  CHECK(res.max_rel_error < 1e-5);
  CHECK(res.trials == 200);
}
