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

// Data-parallel inner loops shared by the network, the metrics, and the
// retrieval evaluation. Each kernel has a scalar reference implementation and
// SIMD variants (AVX2+FMA on x86-64, NEON on AArch64); one is picked at
// startup from the CPU feature bits and can be overridden with the
// RLR_KERNELS environment variable (scalar | avx2 | neon | auto) or
// set_backend().
//
// SIMD variants reassociate sums, so they agree with the scalar reference to
// rounding error, not bit-for-bit. A run is bit-reproducible for a fixed
// backend.

#include <cstddef>
#include <span>
#include <string_view>

namespace rlr::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  Backend backend;
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // out[o] = bias[o] + dot(w[o*n .. o*n+n), x)
  void (*matvec_bias)(const double* w, const double* bias, const double* x,
                      double* out, std::size_t rows, std::size_t n);
};

namespace scalar {
const KernelTable& table();
}
namespace avx2 {
const KernelTable* table();  // nullptr when not compiled in
}
namespace neon {
const KernelTable* table();
}

bool available(Backend b);
const KernelTable& table(Backend b);

/// Currently selected table. Thread-safe to read after first use.
const KernelTable& active();
Backend active_backend();
void set_backend(Backend b);  // throws InvalidInput when unavailable
Backend parse_backend(std::string_view name);  // "auto" maps to best
std::string_view backend_name(Backend b);
Backend best_backend();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

}  // namespace rlr::kernels
