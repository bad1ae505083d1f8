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

#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "kdprobe/knn.hpp"

namespace kdprobe::bench {
namespace {

void BM_BatchQuery(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto corpus = random_unit_rows(n, 64, 1);
  const auto queries = random_unit_rows(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(batch_query(corpus, queries, k));
  state.counters["pairs/s"] = benchmark::Counter(
      static_cast<double>(n * queries.count()), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_BatchQuery)
    ->Args({1 << 14, 10})
    ->Args({1 << 16, 10})
    ->Args({1 << 16, 1000})
    ->Args({1 << 18, 1000})
    ->Unit(benchmark::kMillisecond);

void BM_SingleQuery(benchmark::State& state) {
  const auto corpus = random_unit_rows(1 << 16, 64, 3);
  const auto q = random_unit_rows(1, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(query_knn(corpus, q.row(0), 100));
}
BENCHMARK(BM_SingleQuery)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace kdprobe::bench

BENCHMARK_MAIN();
