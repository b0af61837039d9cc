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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlr/math.hpp"

namespace rlr {

/// Ground-truth label set of one sample. Indices are distinct, sorted, and
/// below K; a single index means single-label mode.
class TargetLabels {
 public:
  TargetLabels(std::vector<std::size_t> positives, std::size_t num_classes);
  static TargetLabels single(std::size_t label, std::size_t num_classes) {
    return TargetLabels({label}, num_classes);
  }

  std::span<const std::size_t> positives() const noexcept { return positives_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t num_negatives() const noexcept { return num_classes_ - positives_.size(); }
  bool single_label() const noexcept { return positives_.size() == 1; }
  std::size_t label() const;  // single-label only
  bool contains(std::size_t k) const;

  /// q_k in {0,1}.
  std::vector<bool> indicator() const;

  friend bool operator==(const TargetLabels&, const TargetLabels&) = default;

 private:
  std::vector<std::size_t> positives_;
  std::size_t num_classes_;
};

enum class LossVariant { kSR, kLR, kHsLR, kSsLR, kHsSR };

std::string_view variant_name(LossVariant v);  // "sr", "lr", "hs-lr", ...
LossVariant parse_variant(std::string_view name);
bool is_logistic_family(LossVariant v);

struct LossConfig {
  LossVariant variant = LossVariant::kLR;
  double m = 25.0;      // percentage of negatives kept by hard selection
  double beta = 10.0;   // numerator of the negative-term weight
  double r = 2.0;       // soft-selection attending exponent
  bool detach_weight = false;

  void validate() const;
};

struct LossOutput {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d z
  double pos_loss = 0.0;
  double neg_loss = 0.0;
  double pos_grad_norm = 0.0;
  double neg_grad_norm = 0.0;
  std::vector<std::size_t> selected_negatives;  // hard-selection variants only
};

LossOutput sr_loss(const Logits& z, const TargetLabels& y);
LossOutput lr_loss(const Logits& z, const TargetLabels& y);
LossOutput hs_lr_loss(const Logits& z, const TargetLabels& y, const LossConfig& cfg);
LossOutput ss_lr_loss(const Logits& z, const TargetLabels& y, const LossConfig& cfg);
LossOutput hs_sr_loss(const Logits& z, const TargetLabels& y, const LossConfig& cfg);

/// Dispatch on cfg.variant.
LossOutput evaluate_loss(const Logits& z, const TargetLabels& y, const LossConfig& cfg);

/// Number of negatives kept at rate m: max(1, floor(m/100 * negatives)).
std::size_t hard_selection_count(double m, std::size_t num_negatives);

/// Top hard-selection negatives by probability, ordered by descending p and
/// then ascending class index.
std::vector<std::size_t> select_hard_negatives(const ProbVector& p, const TargetLabels& y,
                                               double m);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t trials = 0;
  std::size_t redraws = 0;  // hard-selection draws rejected as near-ties
};

/// Compares analytic logit gradients with central finite differences
/// (step 1e-6) on `trials` random z ~ N(0,1)^K with a random single label.
/// Error per trial is ||g - g_fd||_inf / (||g_fd||_inf + 1e-12).
///
/// Hard selection is piecewise smooth: the loss has a kink whenever a finite
/// difference step reorders the boundary of the selected set. Draws whose
/// boundary gap is within 1e-4 are discarded and redrawn.
///
/// Detached soft selection is checked against the objective with the
/// negative weights p_k^r frozen at the drawn z.
GradCheckResult grad_check(const LossConfig& cfg, std::size_t num_classes, std::size_t trials,
                           std::uint64_t seed);

}  // namespace rlr
