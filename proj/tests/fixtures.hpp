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
#include <vector>

#include "oracles.hpp"
#include "rlr/matrix.hpp"
#include "rlr/rng.hpp"

namespace fixtures {

struct RetrievalInstance {
  oracle::Rows query;
  oracle::Rows gallery;
  std::vector<std::size_t> qid;
  std::vector<std::size_t> gid;
  bool cosine = true;
};

// Q, G <= 20. Every other instance uses small integer coordinates so exact
// distance ties (and zero vectors) occur; ids come from a small pool so some
// queries have no match.
inline RetrievalInstance random_retrieval(rlr::Rng& rng, std::size_t index) {
  RetrievalInstance inst;
  const std::size_t q = 1 + rng.below(20);
  const std::size_t g = 1 + rng.below(20);
  const std::size_t dim = 1 + rng.below(6);
  const std::size_t pool = 1 + rng.below(6);
  const bool integer = index % 2 == 1;
  inst.cosine = rng.below(2) == 0;
  auto row = [&] {
    std::vector<double> v(dim);
    for (double& x : v) {
      x = integer ? static_cast<double>(static_cast<int>(rng.below(5)) - 2) : rng.normal();
    }
    return v;
  };
  for (std::size_t i = 0; i < q; ++i) {
    inst.query.push_back(row());
    inst.qid.push_back(rng.below(pool));
  }
  for (std::size_t i = 0; i < g; ++i) {
    inst.gallery.push_back(row());
    inst.gid.push_back(rng.below(pool));
  }
  return inst;
}

inline rlr::Matrix to_matrix(const oracle::Rows& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  rlr::Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace fixtures
