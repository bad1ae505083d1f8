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
#include <span>
#include <unordered_set>
#include <vector>

#include "kdprobe/matrix.hpp"

namespace kdprobe {

// Exact neighbors of one query. neighbor_ids are corpus row indices.
struct NeighborList {
  std::uint64_t query_id = 0;
  std::vector<std::uint64_t> neighbor_ids;
  std::vector<double> distances;  // ascending, ties by ascending id

  std::size_t size() const noexcept { return neighbor_ids.size(); }
  friend bool operator==(const NeighborList&, const NeighborList&) = default;
};

// Brute-force search for the k smallest euclidean distances.
NeighborList query_knn(const EmbeddingMatrix& corpus, std::span<const float> query,
                       std::size_t k, std::uint64_t query_id = 0);

// One NeighborList per query row, in query order; query_id = queries.id(row).
std::vector<NeighborList> batch_query(const EmbeddingMatrix& corpus,
                                      const EmbeddingMatrix& queries, std::size_t k);

// |top-k(retrieved) & relevant| / |relevant|.
double recall_at_k(const NeighborList& retrieved,
                   const std::unordered_set<std::uint64_t>& relevant, std::size_t k);

// {"query_id": q, "neighbors": [[id, dist], ...]} per line.
void write_neighbors_jsonl(std::ostream& out, std::span<const NeighborList> lists);
std::vector<NeighborList> read_neighbors_jsonl(std::istream& in);

}  // namespace kdprobe
