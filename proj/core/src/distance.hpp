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

#include <cmath>
#include <cstddef>

namespace kdprobe::detail {

// Eight independent double accumulators reduced in a fixed tree. Every
// caller goes through this one routine so that equal inputs produce equal
// bits on every path (a row's norm equals its self dot product exactly).
inline double dot_f32_f64(const float* a, const float* b, std::size_t d) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= d; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) {
      acc[l] += static_cast<double>(a[i + l]) * static_cast<double>(b[i + l]);
    }
  }
  double tail = 0.0;
  for (; i < d; ++i) tail += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return (((acc[0] + acc[1]) + (acc[2] + acc[3])) +
          ((acc[4] + acc[5]) + (acc[6] + acc[7]))) +
         tail;
}

inline double squared_distance(double na, double nb, double ab) {
  const double d2 = na + nb - 2.0 * ab;
  return d2 > 0.0 ? d2 : 0.0;
}

}  // namespace kdprobe::detail
