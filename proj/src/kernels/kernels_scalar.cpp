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

// Reference kernels. This translation unit is built with -ffp-contract=off so
// the compiler does not fuse multiply-adds behind our back.

#include "rlr/kernels.hpp"

namespace rlr::kernels::scalar {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += a[i] * b[i];
  }
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += alpha * x[i];
  }
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void matvec_bias(const double* w, const double* bias, const double* x, double* out,
                 std::size_t rows, std::size_t n) {
  for (std::size_t o = 0; o < rows; ++o) {
    out[o] = bias[o] + dot(w + o * n, x, n);
  }
}

constexpr KernelTable kTable{Backend::kScalar, "scalar", dot, axpy, squared_distance,
                             matvec_bias};

}  // namespace

const KernelTable& table() { return kTable; }

}  // namespace rlr::kernels::scalar
