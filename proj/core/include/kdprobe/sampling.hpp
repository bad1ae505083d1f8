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

#include <cstdint>
#include <random>
#include <vector>

namespace kdprobe {

// m distinct values from [0, population), uniformly, returned ascending.
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t population,
                                                      std::uint64_t m,
                                                      std::mt19937_64& rng);

// Independent generator streams derived from a run seed. `stream` separates
// uses of the same seed (global pre-sample vs per-query draws).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace kdprobe
