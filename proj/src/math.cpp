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

#include "rlr/math.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rlr/error.hpp"

namespace rlr {

namespace {

void require_finite(double z, const char* op) {
  if (!std::isfinite(z)) {
    throw InvalidInput(std::string(op) + ": non-finite input");
  }
}

}  // namespace

Logits::Logits(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw InvalidInput("logits need at least 2 classes");
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw InvalidInput("logit " + std::to_string(k) + " is not finite");
    }
  }
}

double sigmoid(double z) {
  require_finite(z, "sigmoid");
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double x) {
  require_finite(x, "softplus");
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double log_sigmoid(double z) {
  require_finite(z, "log_sigmoid");
  return -softplus(-z);
}

double log_sum_exp(std::span<const double> z) {
  if (z.empty()) {
    throw InvalidInput("log_sum_exp of an empty vector");
  }
  const double shift = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) {
    sum += std::exp(v - shift);
  }
  return shift + std::log(sum);
}

ProbVector softmax(const Logits& z) {
  const auto v = z.values();
  const double shift = *std::max_element(v.begin(), v.end());
  ProbVector p{std::vector<double>(v.size()), true};
  double sum = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    p.values[k] = std::exp(v[k] - shift);
    sum += p.values[k];
  }
  for (double& pk : p.values) {
    pk /= sum;
  }
  return p;
}

std::vector<double> log_softmax(const Logits& z) {
  const auto v = z.values();
  const double shift = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) {
    sum += std::exp(x - shift);
  }
  const double log_norm = std::log(sum);
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    out[k] = v[k] - shift - log_norm;
  }
  return out;
}

ProbVector sigmoid(const Logits& z) {
  ProbVector p{std::vector<double>(z.size()), false};
  for (std::size_t k = 0; k < z.size(); ++k) {
    p.values[k] = sigmoid(z[k]);
  }
  return p;
}

}  // namespace rlr
