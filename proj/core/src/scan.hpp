// Copyright 2026 The kdprobe Authors
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

#include <algorithm>
#include <cstddef>
#include <span>

#include "distance.hpp"
#include "kdprobe/matrix.hpp"

namespace kdprobe::detail {

inline constexpr std::size_t kQueryBlock = 16;
inline constexpr std::size_t kRowBlock = 256;

// Calls fn(q, row, squared_distance) for queries [q0, q1) against every
// corpus row. Tiles keep a row block hot in cache across the query block;
// each query still visits rows in ascending order, so per-query reductions
// do not depend on tiling or threading.
template <typename Fn>
void scan_rows(const EmbeddingMatrix& corpus, std::span<const double> corpus_norms,
               const EmbeddingMatrix& queries, std::span<const double> query_norms,
               std::size_t q0, std::size_t q1, Fn&& fn) {
  const std::size_t n = corpus.count();
  const std::size_t d = corpus.dim();
  const float* base = corpus.data().data();
  for (std::size_t r0 = 0; r0 < n; r0 += kRowBlock) {
    const std::size_t r1 = std::min(n, r0 + kRowBlock);
    for (std::size_t q = q0; q < q1; ++q) {
      const float* qv = queries.data().data() + q * d;
      const double qn = query_norms[q];
      for (std::size_t r = r0; r < r1; ++r) {
        const double ab = dot_f32_f64(qv, base + r * d, d);
        fn(q, r, squared_distance(qn, corpus_norms[r], ab));
      }
    }
  }
}

}  // namespace kdprobe::detail
