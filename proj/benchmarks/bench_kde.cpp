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
#include "kdprobe/kde.hpp"

namespace kdprobe::bench {
namespace {

void BM_ExactKdeBatch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto corpus = random_unit_rows(n, 64, 1);
  const auto queries = random_unit_rows(64, 64, 2);
  const KernelSpec spec{KernelFamily::kGaussian, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(exact_kde_batch(corpus, queries, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * queries.count()));
  state.counters["pairs/s"] = benchmark::Counter(
      static_cast<double>(n * queries.count()), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_ExactKdeBatch)->RangeMultiplier(4)->Range(1 << 12, 1 << 18)->Unit(benchmark::kMillisecond);

void BM_DecomposedKde(benchmark::State& state) {
  const auto m2 = static_cast<std::size_t>(state.range(0));
  const auto corpus = random_unit_rows(100'000, 64, 3);
  const auto queries = random_unit_rows(64, 64, 4);
  const KernelSpec spec{KernelFamily::kGaussian, 0.5};
  const auto neighbors = batch_query(corpus, queries, 100);
  const DecomposedParams params{100, 50'000, m2, 7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(decomposed_kde(corpus, queries, spec, params, neighbors));
  }
}
BENCHMARK(BM_DecomposedKde)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_RandomKde(benchmark::State& state) {
  const auto corpus = random_unit_rows(100'000, 64, 5);
  const auto q = random_unit_rows(1, 64, 6);
  const KernelSpec spec{KernelFamily::kExponential, 0.5};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        random_kde(corpus, q.row(0), spec, static_cast<std::size_t>(state.range(0)), seed++));
  }
}
BENCHMARK(BM_RandomKde)->Arg(100)->Arg(10000);

}  // namespace
}  // namespace kdprobe::bench

BENCHMARK_MAIN();
