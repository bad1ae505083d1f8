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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kdprobe/knn.hpp"
#include "kdprobe/matrix.hpp"

namespace kdprobe {

enum class KernelFamily { kGaussian, kExponential };

std::string_view kernel_family_name(KernelFamily f) noexcept;
KernelFamily parse_kernel_family(std::string_view name);

struct KernelSpec {
  KernelFamily family = KernelFamily::kGaussian;
  double bandwidth = 0.5;

  void validate() const;
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

// gaussian: exp(-d^2 / (2 h^2)); exponential: exp(-d / h).
double kernel_eval(const KernelSpec& spec, double dist);

// Mean kernel value between `query` and every corpus row (no normalizing
// constant, so the result lies in (0, 1]).
double exact_kde(const EmbeddingMatrix& corpus, std::span<const float> query,
                 const KernelSpec& spec);
std::vector<double> exact_kde_batch(const EmbeddingMatrix& corpus,
                                    const EmbeddingMatrix& queries,
                                    const KernelSpec& spec);

// Mean kernel value over the listed corpus rows, summed in list order.
double kde_over_rows(const EmbeddingMatrix& corpus, std::span<const float> query,
                     const KernelSpec& spec, std::span<const std::uint64_t> rows);

struct RandomKdeResult {
  double estimate = 0.0;
  std::vector<std::uint64_t> sample_ids;  // ascending
};

// exact_kde over a uniform without-replacement sample of m rows.
RandomKdeResult random_kde(const EmbeddingMatrix& corpus, std::span<const float> query,
                           const KernelSpec& spec, std::size_t m, std::uint64_t seed);

// Size-weighted mean of two KDEs over disjoint subsets.
double combine_split(double z_a, std::uint64_t size_a, double z_b, std::uint64_t size_b);

struct KdeResult {
  std::uint64_t query_id = 0;
  double z_local = 0.0;
  double z_random = 0.0;
  double z_combined = 0.0;
  std::uint64_t k = 0;
  std::uint64_t m1 = 0;
  std::uint64_t m2 = 0;
  std::uint64_t n = 0;
  KernelSpec kernel;
  std::uint64_t seed = 0;

  // m2 == 0: z_random is defined as 0 and only the local part is informative.
  bool local_only() const noexcept { return m2 == 0; }
};

struct DecomposedParams {
  std::size_t k = 1000;
  std::size_t m1 = 1'000'000;
  std::size_t m2 = 10'000;
  std::uint64_t seed = 0;

  void validate(std::size_t n) const;
};

// Nearest-neighbor-decomposed KDE with hierarchical sampling:
//   X1  <- m1 rows sampled once from the corpus (shared across queries)
//   per query: Xnn <- exact k nearest rows, X2 <- m2 rows of X1 \ Xnn
//   z_local = KDE over Xnn, z_random = KDE over X2,
//   z_combined = (k/n) z_local + ((n-k)/n) z_random.
// The per-query stream is seeded from seed ^ query_id, so results do not
// depend on batching or thread count. `neighbors`, when given, must hold at
// least k entries per query in query order.
std::vector<KdeResult> decomposed_kde(const EmbeddingMatrix& corpus,
                                      const EmbeddingMatrix& queries,
                                      const KernelSpec& spec,
                                      const DecomposedParams& params,
                                      std::span<const NeighborList> neighbors = {});

// KDE over the neighbor set only, read straight off the neighbor distances.
double local_kde(const NeighborList& neighbors, const KernelSpec& spec);

double avg_knn_distance(const NeighborList& neighbors);

// CSV columns: query_id,z_local,z_random,z_combined,k,m1,m2,n,kernel,bandwidth,seed
void write_kde_csv(std::ostream& out, std::span<const KdeResult> results);
std::vector<KdeResult> read_kde_csv(std::istream& in);
void write_kde_jsonl(std::ostream& out, std::span<const KdeResult> results);

}  // namespace kdprobe
