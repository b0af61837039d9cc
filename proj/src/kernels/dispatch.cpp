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

#include <atomic>
#include <cstdlib>
#include <string>

#include "rlr/error.hpp"
#include "rlr/kernels.hpp"

namespace rlr::kernels {

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const char* env = std::getenv("RLR_KERNELS");
  const Backend b = env != nullptr ? parse_backend(env) : best_backend();
  if (!available(b)) {
    throw InvalidInput(std::string("RLR_KERNELS backend not available on this CPU: ") +
                       std::string(backend_name(b)));
  }
  return &table(b);
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

bool available(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return avx2::table() != nullptr && cpu_has_avx2_fma();
    case Backend::kNeon:
      return neon::table() != nullptr;
  }
  return false;
}

const KernelTable& table(Backend b) {
  if (!available(b)) {
    throw InvalidInput("kernel backend not available: " + std::string(backend_name(b)));
  }
  switch (b) {
    case Backend::kAvx2:
      return *avx2::table();
    case Backend::kNeon:
      return *neon::table();
    case Backend::kScalar:
      break;
  }
  return scalar::table();
}

Backend best_backend() {
  if (available(Backend::kAvx2)) return Backend::kAvx2;
  if (available(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

Backend active_backend() { return active().backend; }

void set_backend(Backend b) { current().store(&table(b), std::memory_order_release); }

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  if (name == "neon") return Backend::kNeon;
  if (name == "auto" || name.empty()) return best_backend();
  throw InvalidInput("unknown kernel backend: " + std::string(name));
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

}  // namespace rlr::kernels
