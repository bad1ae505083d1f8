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

#include "kdprobe/sampling.hpp"

#include <algorithm>
#include <iterator>
#include <numeric>
#include <unordered_set>

#include "kdprobe/error.hpp"

namespace kdprobe {

std::vector<std::uint64_t> sample_without_replacement(std::uint64_t population,
                                                      std::uint64_t m,
                                                      std::mt19937_64& rng) {
  require(m <= population, ErrorCode::kInvalidArgument,
          "sample size exceeds population");
  std::vector<std::uint64_t> out;
  out.reserve(m);
  if (m == 0) return out;
  if (m * 4 >= population) {
    // Dense case (population <= 4m): selection sampling over an index vector
    // keeps the output ascending.
    std::vector<std::uint64_t> all(population);
    std::iota(all.begin(), all.end(), std::uint64_t{0});
    std::sample(all.begin(), all.end(), std::back_inserter(out),
                static_cast<std::ptrdiff_t>(m), rng);
    return out;
  }
  // Floyd's algorithm: O(m) draws regardless of population size.
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(m * 2);
  for (std::uint64_t j = population - m; j < population; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    const std::uint64_t t = pick(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  out.assign(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace kdprobe
