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

#include <random>

#include "kdprobe/matrix.hpp"

namespace kdprobe::bench {

// Rows normalized after drawing each coordinate from N(0, 1).
inline EmbeddingMatrix random_unit_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  std::vector<float> data(n * dim);
  for (auto& x : data) x = g(rng);
  EmbeddingMatrix m(dim, std::move(data));
  m.normalize_rows();
  return m;
}

}  // namespace kdprobe::bench
