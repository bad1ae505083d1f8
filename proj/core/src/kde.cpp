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

#include "kdprobe/kde.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <ostream>

#include "distance.hpp"
#include "kdprobe/csv.hpp"
#include "kdprobe/error.hpp"
#include "kdprobe/sampling.hpp"
#include "scan.hpp"

namespace kdprobe {

using nlohmann::json;

namespace {

constexpr std::uint64_t kGlobalSampleStream = 1;
constexpr std::uint64_t kQuerySampleStream = 2;
constexpr std::uint64_t kRandomKdeStream = 3;

// Kernel as a function of squared distance, with the bandwidth folded in.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(const KernelSpec& spec)
      : family_(spec.family),
        gauss_scale_(1.0 / (2.0 * spec.bandwidth * spec.bandwidth)),
        exp_scale_(1.0 / spec.bandwidth) {}

  double from_squared(double d2) const {
    if (family_ == KernelFamily::kGaussian) return std::exp(-d2 * gauss_scale_);
    return std::exp(-std::sqrt(d2) * exp_scale_);
  }

  double from_distance(double d) const {
    if (family_ == KernelFamily::kGaussian) return std::exp(-(d * d) * gauss_scale_);
    return std::exp(-d * exp_scale_);
  }

 private:
  KernelFamily family_;
  double gauss_scale_;
  double exp_scale_;
};

void check_corpus_query(const EmbeddingMatrix& corpus, std::size_t dim) {
  require(corpus.count() > 0, ErrorCode::kInvalidArgument, "KDE over an empty corpus");
  require(dim == corpus.dim(), ErrorCode::kInvalidArgument,
          "query dim " + std::to_string(dim) + " does not match corpus dim " +
              std::to_string(corpus.dim()));
}

}  // namespace

std::string_view kernel_family_name(KernelFamily f) noexcept {
  return f == KernelFamily::kGaussian ? "gaussian" : "exponential";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "gaussian") return KernelFamily::kGaussian;
  if (name == "exponential") return KernelFamily::kExponential;
  fail(ErrorCode::kInvalidArgument, "unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  require(std::isfinite(bandwidth) && bandwidth > 0.0, ErrorCode::kInvalidArgument,
          "bandwidth must be positive and finite");
}

double kernel_eval(const KernelSpec& spec, double dist) {
  spec.validate();
  require(dist >= 0.0, ErrorCode::kInvalidArgument, "kernel distance must be nonnegative");
  return KernelEvaluator(spec).from_distance(dist);
}

std::vector<double> exact_kde_batch(const EmbeddingMatrix& corpus,
                                    const EmbeddingMatrix& queries,
                                    const KernelSpec& spec) {
  spec.validate();
  check_corpus_query(corpus, queries.dim());
  const KernelEvaluator kernel(spec);
  const auto cn = row_norms_squared(corpus);
  const auto qn = row_norms_squared(queries);
  const std::size_t nq = queries.count();
  std::vector<double> sums(nq, 0.0);
  const std::size_t n_blocks = (nq + detail::kQueryBlock - 1) / detail::kQueryBlock;

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t q0 = b * detail::kQueryBlock;
    const std::size_t q1 = std::min(nq, q0 + detail::kQueryBlock);
    detail::scan_rows(corpus, cn, queries, qn, q0, q1,
                      [&](std::size_t q, std::size_t, double d2) {
                        sums[q] += kernel.from_squared(d2);
                      });
  }
  const double n = static_cast<double>(corpus.count());
  for (auto& s : sums) s /= n;
  return sums;
}

double exact_kde(const EmbeddingMatrix& corpus, std::span<const float> query,
                 const KernelSpec& spec) {
  check_corpus_query(corpus, query.size());
  EmbeddingMatrix one(query.size(), std::vector<float>(query.begin(), query.end()));
  return exact_kde_batch(corpus, one, spec).front();
}

double kde_over_rows(const EmbeddingMatrix& corpus, std::span<const float> query,
                     const KernelSpec& spec, std::span<const std::uint64_t> rows) {
  check_corpus_query(corpus, query.size());
  require(!rows.empty(), ErrorCode::kInvalidArgument, "KDE over an empty row set");
  const KernelEvaluator kernel(spec);
  const double qn = norm_squared(query);
  double sum = 0.0;
  for (auto r : rows) {
    require(r < corpus.count(), ErrorCode::kInvalidArgument, "row id out of range");
    const auto row = corpus.row(r);
    const double ab = detail::dot_f32_f64(query.data(), row.data(), query.size());
    sum += kernel.from_squared(detail::squared_distance(qn, norm_squared(row), ab));
  }
  return sum / static_cast<double>(rows.size());
}

RandomKdeResult random_kde(const EmbeddingMatrix& corpus, std::span<const float> query,
                           const KernelSpec& spec, std::size_t m, std::uint64_t seed) {
  spec.validate();
  check_corpus_query(corpus, query.size());
  require(m >= 1 && m <= corpus.count(), ErrorCode::kInvalidArgument,
          "random_kde sample size must lie in [1, n]");
  auto rng = make_rng(seed, kRandomKdeStream);
  RandomKdeResult out;
  out.sample_ids = sample_without_replacement(corpus.count(), m, rng);
  out.estimate = kde_over_rows(corpus, query, spec, out.sample_ids);
  return out;
}

double combine_split(double z_a, std::uint64_t size_a, double z_b, std::uint64_t size_b) {
  require(size_a + size_b > 0, ErrorCode::kInvalidArgument,
          "combine_split with two empty subsets");
  const double na = static_cast<double>(size_a);
  const double nb = static_cast<double>(size_b);
  return (na * z_a + nb * z_b) / (na + nb);
}

void DecomposedParams::validate(std::size_t n) const {
  const auto msg = [&](const char* what) {
    return std::string(what) + " (k=" + std::to_string(k) + ", m1=" + std::to_string(m1) +
           ", m2=" + std::to_string(m2) + ", n=" + std::to_string(n) + ")";
  };
  require(k >= 1, ErrorCode::kParameterContradiction, msg("k must be at least 1"));
  require(m1 <= n, ErrorCode::kParameterContradiction, msg("m1 must not exceed n"));
  require(m2 <= m1, ErrorCode::kParameterContradiction, msg("m2 must not exceed m1"));
  require(k + m2 <= n, ErrorCode::kParameterContradiction, msg("k + m2 must not exceed n"));
}

double local_kde(const NeighborList& neighbors, const KernelSpec& spec) {
  spec.validate();
  require(neighbors.size() > 0, ErrorCode::kInvalidArgument, "local KDE of no neighbors");
  const KernelEvaluator kernel(spec);
  double sum = 0.0;
  for (double d : neighbors.distances) sum += kernel.from_distance(d);
  return sum / static_cast<double>(neighbors.size());
}

std::vector<KdeResult> decomposed_kde(const EmbeddingMatrix& corpus,
                                      const EmbeddingMatrix& queries,
                                      const KernelSpec& spec,
                                      const DecomposedParams& params,
                                      std::span<const NeighborList> neighbors) {
  spec.validate();
  check_corpus_query(corpus, queries.dim());
  const std::size_t n = corpus.count();
  const std::size_t nq = queries.count();
  const std::size_t k = params.k;
  params.validate(n);

  std::vector<NeighborList> computed;
  if (neighbors.empty() && nq > 0) {
    computed = batch_query(corpus, queries, k);
    neighbors = computed;
  }
  require(neighbors.size() == nq, ErrorCode::kSchemaViolation,
          "neighbor list count does not match query count");

  auto global_rng = make_rng(params.seed, kGlobalSampleStream);
  const std::vector<std::uint64_t> x1 = sample_without_replacement(n, params.m1, global_rng);

  // Positions within X1 held by each query's neighbors, ascending.
  std::vector<std::vector<std::size_t>> excluded(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    const auto& nl = neighbors[q];
    require(nl.size() >= k, ErrorCode::kSchemaViolation,
            "query " + std::to_string(queries.id(q)) + " has fewer than k neighbors");
    for (std::size_t i = 0; i < k; ++i) {
      require(nl.neighbor_ids[i] < n, ErrorCode::kSchemaViolation,
              "neighbor id out of range for query " + std::to_string(queries.id(q)));
      auto it = std::lower_bound(x1.begin(), x1.end(), nl.neighbor_ids[i]);
      if (it != x1.end() && *it == nl.neighbor_ids[i]) {
        excluded[q].push_back(static_cast<std::size_t>(it - x1.begin()));
      }
    }
    std::sort(excluded[q].begin(), excluded[q].end());
    excluded[q].erase(std::unique(excluded[q].begin(), excluded[q].end()),
                      excluded[q].end());
    const std::size_t available = params.m1 - excluded[q].size();
    require(available >= params.m2, ErrorCode::kParameterContradiction,
            "query " + std::to_string(queries.id(q)) + ": only " +
                std::to_string(available) + " pre-sampled points remain outside its " +
                std::to_string(k) + " neighbors, m2=" + std::to_string(params.m2));
  }

  const KernelEvaluator kernel(spec);
  const auto cn = row_norms_squared(corpus);
  const double kn = static_cast<double>(k) / static_cast<double>(n);
  const double rest = static_cast<double>(n - k) / static_cast<double>(n);
  std::vector<KdeResult> out(nq);

#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t q = 0; q < nq; ++q) {
    KdeResult& res = out[q];
    res.query_id = queries.id(q);
    res.k = k;
    res.m1 = params.m1;
    res.m2 = params.m2;
    res.n = n;
    res.kernel = spec;
    res.seed = params.seed;

    const auto& nl = neighbors[q];
    double local = 0.0;
    for (std::size_t i = 0; i < k; ++i) local += kernel.from_distance(nl.distances[i]);
    res.z_local = local / static_cast<double>(k);

    if (params.m2 > 0) {
      const auto& ex = excluded[q];
      auto rng = make_rng(params.seed ^ res.query_id, kQuerySampleStream);
      const auto picks = sample_without_replacement(params.m1 - ex.size(), params.m2, rng);
      const auto qv = queries.row(q);
      const double qn = norm_squared(qv);
      double sum = 0.0;
      std::size_t e = 0;
      for (const auto p : picks) {
        // Map the p-th surviving position of X1 past the excluded ones.
        while (e < ex.size() && ex[e] <= p + e) ++e;
        const std::uint64_t row = x1[p + e];
        const double ab = detail::dot_f32_f64(qv.data(), corpus.row(row).data(), qv.size());
        sum += kernel.from_squared(detail::squared_distance(qn, cn[row], ab));
      }
      res.z_random = sum / static_cast<double>(params.m2);
    }
    res.z_combined = kn * res.z_local + rest * res.z_random;
  }
  return out;
}

double avg_knn_distance(const NeighborList& neighbors) {
  require(neighbors.size() > 0, ErrorCode::kInvalidArgument,
          "average distance of an empty neighbor list");
  double sum = 0.0;
  for (double d : neighbors.distances) sum += d;
  return sum / static_cast<double>(neighbors.size());
}

namespace {

const std::vector<std::string> kKdeColumns{"query_id", "z_local", "z_random", "z_combined",
                                           "k",        "m1",      "m2",       "n",
                                           "kernel",   "bandwidth", "seed"};

}  // namespace

void write_kde_csv(std::ostream& out, std::span<const KdeResult> results) {
  csv::write_row(out, kKdeColumns);
  for (const auto& r : results) {
    const std::vector<std::string> row{std::to_string(r.query_id),
                                       csv::format_double(r.z_local),
                                       csv::format_double(r.z_random),
                                       csv::format_double(r.z_combined),
                                       std::to_string(r.k),
                                       std::to_string(r.m1),
                                       std::to_string(r.m2),
                                       std::to_string(r.n),
                                       std::string(kernel_family_name(r.kernel.family)),
                                       csv::format_double(r.kernel.bandwidth),
                                       std::to_string(r.seed)};
    csv::write_row(out, row);
  }
}

std::vector<KdeResult> read_kde_csv(std::istream& in) {
  const auto t = csv::read_table(in);
  std::vector<std::size_t> col;
  for (const auto& c : kKdeColumns) col.push_back(t.column(c));
  const auto u64 = [](const std::string& s) { return csv::parse_uint(s); };
  std::vector<KdeResult> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    KdeResult r;
    r.query_id = u64(row[col[0]]);
    r.z_local = csv::parse_double(row[col[1]]);
    r.z_random = csv::parse_double(row[col[2]]);
    r.z_combined = csv::parse_double(row[col[3]]);
    r.k = u64(row[col[4]]);
    r.m1 = u64(row[col[5]]);
    r.m2 = u64(row[col[6]]);
    r.n = u64(row[col[7]]);
    try {
      r.kernel.family = parse_kernel_family(row[col[8]]);
    } catch (const Error& e) {
      fail(ErrorCode::kSchemaViolation, e.what());
    }
    r.kernel.bandwidth = csv::parse_double(row[col[9]]);
    r.seed = u64(row[col[10]]);
    out.push_back(r);
  }
  return out;
}

void write_kde_jsonl(std::ostream& out, std::span<const KdeResult> results) {
  for (const auto& r : results) {
    json j;
    j["query_id"] = r.query_id;
    j["z_local"] = r.z_local;
    j["z_random"] = r.z_random;
    j["z_combined"] = r.z_combined;
    j["k"] = r.k;
    j["m1"] = r.m1;
    j["m2"] = r.m2;
    j["n"] = r.n;
    j["kernel"] = kernel_family_name(r.kernel.family);
    j["bandwidth"] = r.kernel.bandwidth;
    j["seed"] = r.seed;
    out << j.dump() << '\n';
  }
}

}  // namespace kdprobe
