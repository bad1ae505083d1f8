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

#include "kdprobe/knn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <ostream>

#include "kdprobe/error.hpp"
#include "scan.hpp"

namespace kdprobe {

using nlohmann::json;

namespace {

// Bounded max-heap on (squared distance, row); keeps the k smallest pairs.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k); }

  void offer(double d2, std::uint64_t row) {
    if (heap_.size() < k_) {
      heap_.emplace_back(d2, row);
      std::push_heap(heap_.begin(), heap_.end());
      return;
    }
    if (std::pair(d2, row) < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = {d2, row};
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  NeighborList finish(std::uint64_t query_id) {
    std::sort_heap(heap_.begin(), heap_.end());
    NeighborList out;
    out.query_id = query_id;
    out.neighbor_ids.reserve(heap_.size());
    out.distances.reserve(heap_.size());
    for (const auto& [d2, row] : heap_) {
      out.neighbor_ids.push_back(row);
      out.distances.push_back(std::sqrt(d2));
    }
    return out;
  }

 private:
  std::size_t k_;
  std::vector<std::pair<double, std::uint64_t>> heap_;
};

void check_query_args(const EmbeddingMatrix& corpus, std::size_t dim, std::size_t k) {
  require(corpus.count() > 0, ErrorCode::kInvalidArgument, "kNN over an empty corpus");
  require(dim == corpus.dim(), ErrorCode::kInvalidArgument,
          "query dim " + std::to_string(dim) + " does not match corpus dim " +
              std::to_string(corpus.dim()));
  require(k >= 1, ErrorCode::kInvalidArgument, "k must be at least 1");
  require(k <= corpus.count(), ErrorCode::kParameterContradiction,
          "k=" + std::to_string(k) + " exceeds corpus size " +
              std::to_string(corpus.count()));
}

}  // namespace

NeighborList query_knn(const EmbeddingMatrix& corpus, std::span<const float> query,
                       std::size_t k, std::uint64_t query_id) {
  check_query_args(corpus, query.size(), k);
  EmbeddingMatrix one(query.size(), std::vector<float>(query.begin(), query.end()),
                      {query_id});
  return std::move(batch_query(corpus, one, k).front());
}

std::vector<NeighborList> batch_query(const EmbeddingMatrix& corpus,
                                      const EmbeddingMatrix& queries, std::size_t k) {
  check_query_args(corpus, queries.dim(), k);
  const auto cn = row_norms_squared(corpus);
  const auto qn = row_norms_squared(queries);
  const std::size_t nq = queries.count();
  std::vector<NeighborList> out(nq);
  const std::size_t n_blocks = (nq + detail::kQueryBlock - 1) / detail::kQueryBlock;

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t q0 = b * detail::kQueryBlock;
    const std::size_t q1 = std::min(nq, q0 + detail::kQueryBlock);
    std::vector<TopK> tops(q1 - q0, TopK(k));
    detail::scan_rows(corpus, cn, queries, qn, q0, q1,
                      [&](std::size_t q, std::size_t r, double d2) {
                        tops[q - q0].offer(d2, r);
                      });
    for (std::size_t q = q0; q < q1; ++q) out[q] = tops[q - q0].finish(queries.id(q));
  }
  return out;
}

double recall_at_k(const NeighborList& retrieved,
                   const std::unordered_set<std::uint64_t>& relevant, std::size_t k) {
  require(!relevant.empty(), ErrorCode::kInvalidArgument, "recall@k with empty relevant set");
  require(k <= retrieved.size(), ErrorCode::kInvalidArgument,
          "recall@k: k exceeds retrieved list length");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += relevant.count(retrieved.neighbor_ids[i]);
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

void write_neighbors_jsonl(std::ostream& out, std::span<const NeighborList> lists) {
  for (const auto& nl : lists) {
    json pairs = json::array();
    for (std::size_t i = 0; i < nl.size(); ++i) {
      pairs.push_back(json::array({nl.neighbor_ids[i], nl.distances[i]}));
    }
    json j;
    j["query_id"] = nl.query_id;
    j["neighbors"] = std::move(pairs);
    out << j.dump() << '\n';
  }
}

std::vector<NeighborList> read_neighbors_jsonl(std::istream& in) {
  std::vector<NeighborList> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      NeighborList nl;
      nl.query_id = j.at("query_id").get<std::uint64_t>();
      for (const auto& p : j.at("neighbors")) {
        require(p.is_array() && p.size() == 2, ErrorCode::kSchemaViolation,
                "neighbor entry must be [id, dist]");
        nl.neighbor_ids.push_back(p[0].get<std::uint64_t>());
        nl.distances.push_back(p[1].get<double>());
      }
      out.push_back(std::move(nl));
    } catch (const json::exception& e) {
      fail(ErrorCode::kSchemaViolation,
           "neighbors line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace kdprobe
