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

#include "rlr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rlr/error.hpp"
#include "rlr/rng.hpp"

namespace rlr {

TargetLabels::TargetLabels(std::vector<std::size_t> positives, std::size_t num_classes)
    : positives_(std::move(positives)), num_classes_(num_classes) {
  if (positives_.empty()) {
    throw InvalidInput("label set must not be empty");
  }
  std::sort(positives_.begin(), positives_.end());
  if (std::adjacent_find(positives_.begin(), positives_.end()) != positives_.end()) {
    throw InvalidInput("label set contains duplicate indices");
  }
  if (positives_.back() >= num_classes_) {
    throw InvalidInput("label index " + std::to_string(positives_.back()) +
                       " out of range for K=" + std::to_string(num_classes_));
  }
}

std::size_t TargetLabels::label() const {
  if (!single_label()) {
    throw UnsupportedVariant("sample has more than one label");
  }
  return positives_.front();
}

bool TargetLabels::contains(std::size_t k) const {
  return std::binary_search(positives_.begin(), positives_.end(), k);
}

std::vector<bool> TargetLabels::indicator() const {
  std::vector<bool> q(num_classes_, false);
  for (std::size_t k : positives_) q[k] = true;
  return q;
}

std::string_view variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::kSR:
      return "sr";
    case LossVariant::kLR:
      return "lr";
    case LossVariant::kHsLR:
      return "hs-lr";
    case LossVariant::kSsLR:
      return "ss-lr";
    case LossVariant::kHsSR:
      return "hs-sr";
  }
  return "?";
}

LossVariant parse_variant(std::string_view name) {
  for (auto v : {LossVariant::kSR, LossVariant::kLR, LossVariant::kHsLR, LossVariant::kSsLR,
                 LossVariant::kHsSR}) {
    if (variant_name(v) == name) return v;
  }
  throw InvalidConfig("unknown loss variant: " + std::string(name));
}

bool is_logistic_family(LossVariant v) {
  return v == LossVariant::kLR || v == LossVariant::kHsLR || v == LossVariant::kSsLR;
}

void LossConfig::validate() const {
  if (!(m >= 0.0 && m <= 100.0)) throw InvalidConfig("loss.m must lie in [0, 100]");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidConfig("loss.beta must be positive");
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidConfig("loss.r must be >= 0");
}

namespace {

// Neumaier summation; K can reach the thousands and the decomposition
// ratios are compared exactly.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double t = sum + x;
    carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

void check_classes(const Logits& z, const TargetLabels& y) {
  if (z.size() != y.num_classes()) {
    throw InvalidInput("logit length " + std::to_string(z.size()) +
                       " does not match label K=" + std::to_string(y.num_classes()));
  }
}

void fill_norms(LossOutput& out, const std::vector<bool>& q) {
  double pos = 0.0;
  double neg = 0.0;
  for (std::size_t k = 0; k < out.grad.size(); ++k) {
    const double g2 = out.grad[k] * out.grad[k];
    (q[k] ? pos : neg) += g2;
  }
  out.pos_grad_norm = std::sqrt(pos);
  out.neg_grad_norm = std::sqrt(neg);
}

// Positive-class part shared by the logistic family: -log sigmoid(z_k) and
// its gradient sigmoid(z_k) - 1 = -sigmoid(-z_k).
double add_positive_terms(const Logits& z, const TargetLabels& y, LossOutput& out) {
  CompensatedSum pos;
  for (std::size_t k : y.positives()) {
    pos.add(softplus(-z[k]));
    out.grad[k] = -sigmoid(-z[k]);
  }
  return pos.value();
}

std::vector<bool> selection_mask(std::span<const std::size_t> selected, std::size_t K) {
  std::vector<bool> mask(K, false);
  for (std::size_t k : selected) mask[k] = true;
  return mask;
}

}  // namespace

LossOutput sr_loss(const Logits& z, const TargetLabels& y) {
  check_classes(z, y);
  if (!y.single_label()) {
    throw UnsupportedVariant("softmax regression requires a single label per sample");
  }
  const std::size_t label = y.label();
  const std::vector<double> log_p = log_softmax(z);
  LossOutput out;
  out.loss = -log_p[label];
  out.grad.resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    out.grad[k] = std::exp(log_p[k]) - (k == label ? 1.0 : 0.0);
  }
  // Softmax loss is not additive over classes; the whole value is reported
  // as the positive term and only the gradient is split.
  out.pos_loss = out.loss;
  out.neg_loss = 0.0;
  fill_norms(out, y.indicator());
  return out;
}

LossOutput lr_loss(const Logits& z, const TargetLabels& y) {
  check_classes(z, y);
  const auto q = y.indicator();
  LossOutput out;
  out.grad.resize(z.size());
  out.pos_loss = add_positive_terms(z, y, out);
  CompensatedSum neg;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (q[k]) continue;
    neg.add(softplus(z[k]));
    out.grad[k] = sigmoid(z[k]);
  }
  out.neg_loss = neg.value();
  out.loss = out.pos_loss + out.neg_loss;
  fill_norms(out, q);
  return out;
}

std::size_t hard_selection_count(double m, std::size_t num_negatives) {
  if (!(m >= 0.0 && m <= 100.0)) {
    throw InvalidInput("selection rate m must lie in [0, 100]");
  }
  if (num_negatives == 0) {
    throw InvalidInput("hard selection needs at least one negative class");
  }
  // m * n / 100 rather than (m / 100) * n keeps m = 100 exact.
  const auto n = static_cast<std::size_t>(std::floor(m * static_cast<double>(num_negatives) / 100.0));
  return std::clamp<std::size_t>(n, 1, num_negatives);
}

std::vector<std::size_t> select_hard_negatives(const ProbVector& p, const TargetLabels& y,
                                               double m) {
  if (p.size() != y.num_classes()) {
    throw InvalidInput("probability vector length does not match K");
  }
  const std::size_t n_sel = hard_selection_count(m, y.num_negatives());
  std::vector<std::size_t> negatives;
  negatives.reserve(y.num_negatives());
  const auto q = y.indicator();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!q[k]) negatives.push_back(k);
  }
  const auto by_hardness = [&p](std::size_t a, std::size_t b) {
    return p[a] > p[b] || (p[a] == p[b] && a < b);
  };
  std::partial_sort(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(n_sel),
                    negatives.end(), by_hardness);
  negatives.resize(n_sel);
  return negatives;
}

LossOutput hs_lr_loss(const Logits& z, const TargetLabels& y, const LossConfig& cfg) {
  check_classes(z, y);
  cfg.validate();
  const auto q = y.indicator();
  LossOutput out;
  out.grad.assign(z.size(), 0.0);
  out.selected_negatives = select_hard_negatives(sigmoid(z), y, cfg.m);
  const double alpha = cfg.beta / static_cast<double>(out.selected_negatives.size());
  const auto selected = selection_mask(out.selected_negatives, z.size());

  out.pos_loss = add_positive_terms(z, y, out);
  CompensatedSum neg;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!selected[k]) continue;
    neg.add(softplus(z[k]));
    out.grad[k] = alpha * sigmoid(z[k]);
  }
  out.neg_loss = alpha * neg.value();
  out.loss = out.pos_loss + out.neg_loss;
  fill_norms(out, q);
  return out;
}

LossOutput ss_lr_loss(const Logits& z, const TargetLabels& y, const LossConfig& cfg) {
  check_classes(z, y);
  cfg.validate();
  if (y.num_negatives() == 0) {
    throw InvalidInput("soft selection needs at least one negative class");
  }
  const auto q = y.indicator();
  const double alpha = cfg.beta / static_cast<double>(y.num_negatives());
  LossOutput out;
  out.grad.assign(z.size(), 0.0);
  out.pos_loss = add_positive_terms(z, y, out);

  CompensatedSum neg;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (q[k]) continue;
    const double p = sigmoid(z[k]);
    const double weight = std::pow(p, cfg.r);  // pow(0, 0) == 1
    const double nll = softplus(z[k]);         // -log(1 - p)
    neg.add(weight * nll);
    if (cfg.detach_weight) {
      out.grad[k] = alpha * weight * p;
    } else {
      // d/dz [p^r * softplus(z)] = r p^r (1 - p) softplus(z) + p^r * p
      out.grad[k] = alpha * (cfg.r * weight * sigmoid(-z[k]) * nll + weight * p);
    }
  }
  out.neg_loss = alpha * neg.value();
  out.loss = out.pos_loss + out.neg_loss;
  fill_norms(out, q);
  return out;
}

LossOutput hs_sr_loss(const Logits& z, const TargetLabels& y, const LossConfig& cfg) {
  check_classes(z, y);
  cfg.validate();
  if (!y.single_label()) {
    throw UnsupportedVariant("hard-selection softmax regression requires a single label");
  }
  const std::size_t label = y.label();
  const std::size_t K = z.size();
  const auto zv = z.values();
  const double lse = log_sum_exp(zv);

  ProbVector p{std::vector<double>(K), true};
  for (std::size_t k = 0; k < K; ++k) p.values[k] = std::exp(zv[k] - lse);

  LossOutput out;
  out.selected_negatives = select_hard_negatives(p, y, cfg.m);
  const double alpha = cfg.beta / static_cast<double>(out.selected_negatives.size());
  const auto selected = selection_mask(out.selected_negatives, K);

  // -log(1 - p_k) = lse - lse_{-k}; odds p_k / (1 - p_k) = exp(z_k - lse_{-k}).
  std::vector<double> odds(K, 0.0);
  std::vector<double> rest(K - 1);
  double neg = 0.0;
  double odds_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (!selected[k]) continue;
    std::size_t j = 0;
    for (std::size_t i = 0; i < K; ++i) {
      if (i != k) rest[j++] = zv[i];
    }
    const double lse_rest = log_sum_exp(rest);
    neg += lse - lse_rest;
    odds[k] = std::exp(zv[k] - lse_rest);
    odds_sum += odds[k];
  }

  out.pos_loss = lse - zv[label];
  out.neg_loss = alpha * neg;
  out.loss = out.pos_loss + out.neg_loss;
  out.grad.resize(K);
  for (std::size_t j = 0; j < K; ++j) {
    const double ce = p.values[j] - (j == label ? 1.0 : 0.0);
    out.grad[j] = ce + alpha * (odds[j] - p.values[j] * odds_sum);
  }
  fill_norms(out, y.indicator());
  return out;
}

LossOutput evaluate_loss(const Logits& z, const TargetLabels& y, const LossConfig& cfg) {
  switch (cfg.variant) {
    case LossVariant::kSR:
      return sr_loss(z, y);
    case LossVariant::kLR:
      return lr_loss(z, y);
    case LossVariant::kHsLR:
      return hs_lr_loss(z, y, cfg);
    case LossVariant::kSsLR:
      return ss_lr_loss(z, y, cfg);
    case LossVariant::kHsSR:
      return hs_sr_loss(z, y, cfg);
  }
  throw UnsupportedVariant("unknown loss variant");
}

namespace {

// Gap in z between the last selected and the first unselected negative.
// Sigmoid and softmax are both monotone in z, so the z order is the
// probability order.
double selection_boundary_gap(std::span<const double> z, const TargetLabels& y, double m) {
  std::vector<double> neg;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!y.contains(k)) neg.push_back(z[k]);
  }
  const std::size_t n_sel = hard_selection_count(m, neg.size());
  if (n_sel == neg.size()) return std::numeric_limits<double>::infinity();
  std::sort(neg.begin(), neg.end(), std::greater<>());
  return neg[n_sel - 1] - neg[n_sel];
}

// Soft-selection objective with every negative weight frozen at its value
// under z0: the function whose exact gradient the detached mode returns.
double frozen_weight_ss_loss(std::span<const double> z, std::span<const double> z0,
                             const TargetLabels& y, const LossConfig& cfg) {
  const double alpha = cfg.beta / static_cast<double>(y.num_negatives());
  double loss = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (y.contains(k)) {
      loss += softplus(-z[k]);
    } else {
      loss += alpha * std::pow(sigmoid(z0[k]), cfg.r) * softplus(z[k]);
    }
  }
  return loss;
}

}  // namespace

GradCheckResult grad_check(const LossConfig& cfg, std::size_t num_classes, std::size_t trials,
                           std::uint64_t seed) {
  if (trials == 0) throw InvalidInput("grad_check needs at least one trial");
  if (num_classes < 2) throw InvalidInput("grad_check needs K >= 2");
  constexpr double kStep = 1e-6;
  constexpr double kMinGap = 1e-4;
  const bool hard = cfg.variant == LossVariant::kHsLR || cfg.variant == LossVariant::kHsSR;
  const bool frozen = cfg.variant == LossVariant::kSsLR && cfg.detach_weight;

  Rng rng(seed);
  GradCheckResult result;
  std::vector<double> z(num_classes);
  while (result.trials < trials) {
    for (double& v : z) v = rng.normal();
    const TargetLabels y = TargetLabels::single(rng.below(num_classes), num_classes);
    if (hard && selection_boundary_gap(z, y, cfg.m) < kMinGap) {
      ++result.redraws;
      continue;
    }
    const LossOutput analytic = evaluate_loss(Logits(z), y, cfg);
    double err = 0.0;
    double scale = 0.0;
    std::vector<double> probe = z;
    auto objective = [&](const std::vector<double>& v) {
      return frozen ? frozen_weight_ss_loss(v, z, y, cfg) : evaluate_loss(Logits(v), y, cfg).loss;
    };
    for (std::size_t j = 0; j < num_classes; ++j) {
      probe[j] = z[j] + kStep;
      const double up = objective(probe);
      probe[j] = z[j] - kStep;
      const double down = objective(probe);
      probe[j] = z[j];
      const double fd = (up - down) / (2.0 * kStep);
      err = std::max(err, std::abs(analytic.grad[j] - fd));
      scale = std::max(scale, std::abs(fd));
    }
    result.max_rel_error = std::max(result.max_rel_error, err / (scale + 1e-12));
    ++result.trials;
  }
  return result;
}

}  // namespace rlr
