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
#include <span>
#include <vector>

namespace rlr {

/// Raw model scores over K >= 2 classes. Construction validates that every
/// entry is finite.
class Logits {
 public:
  explicit Logits(std::vector<double> values);
  explicit Logits(std::span<const double> values)
      : Logits(std::vector<double>(values.begin(), values.end())) {}

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }

 private:
  std::vector<double> values_;
};

/// Probabilities in [0,1]. `normalized` is set when the vector came out of
/// softmax and therefore sums to one.
struct ProbVector {
  std::vector<double> values;
  bool normalized = false;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
};

double sigmoid(double z);

/// log(1 + e^x) as max(x, 0) + log1p(e^{-|x|}).
double softplus(double x);

/// log(sigmoid(z)) == -softplus(-z). log(1 - sigmoid(z)) is log_sigmoid(-z).
double log_sigmoid(double z);

ProbVector softmax(const Logits& z);
std::vector<double> log_softmax(const Logits& z);

/// log sum_k e^{z_k}, shifted by the maximum.
double log_sum_exp(std::span<const double> z);

/// Elementwise sigmoid; the result is not normalized.
ProbVector sigmoid(const Logits& z);

}  // namespace rlr
