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

#include "kdprobe/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "kdprobe/csv.hpp"
#include "kdprobe/embed.hpp"
#include "kdprobe/error.hpp"
#include "kdprobe/knn.hpp"
#include "kdprobe/sampling.hpp"

namespace kdprobe {

using nlohmann::json;

namespace {

constexpr std::uint64_t kCentroidStream = 10;
constexpr std::uint64_t kCorpusStream = 11;
constexpr std::uint64_t kQueryStream = 12;
constexpr std::uint64_t kOrthogonalStream = 20;
constexpr std::uint64_t kParaphraseStream = 30;
constexpr std::uint64_t kPerfNoiseStream = 40;
constexpr std::uint64_t kLeakChoiceStream = 50;

std::vector<double> gaussian_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void scale(std::vector<double>& v, double s) {
  for (auto& x : v) x *= s;
}

std::vector<float> to_float(std::span<const double> v) {
  return std::vector<float>(v.begin(), v.end());
}

void append_row(EmbeddingMatrix& m, std::span<const float> v) {
  if (m.has_ids()) {
    m.append(v, m.count());
  } else {
    m.append(v);
  }
}

}  // namespace

void SynthConfig::validate() const {
  const auto bad = [](const std::string& what) {
    fail(ErrorCode::kParameterContradiction, "synth config: " + what);
  };
  if (dim < 2) bad("dim must be at least 2");
  if (n_corpus == 0) bad("n_corpus must be positive");
  if (n_clusters == 0) bad("n_clusters must be positive");
  if (!(cluster_spread >= 0.0)) bad("cluster_spread must be nonnegative");
  if (n_queries == 0) bad("n_queries must be positive");
  if (n_leaked > n_queries) bad("n_leaked exceeds n_queries");
  if (!(target_cos_range.lo > -1.0 && target_cos_range.lo < target_cos_range.hi &&
        target_cos_range.hi < 1.0)) {
    bad("target_cos_range must satisfy -1 < lo < hi < 1");
  }
  for (int p : paraphrase_counts) {
    if (p < 0 || p > 3) bad("paraphrase counts must lie in {0,1,2,3}");
  }
  for (int e : exact_flags) {
    if (e != 0 && e != 1) bad("exact flags must be 0 or 1");
  }
  if (paraphrase_counts.empty() || exact_flags.empty()) bad("no experiment cells");
  if (k == 0) bad("k must be positive");
  if (k + m2 > n_corpus) bad("k + m2 exceeds n_corpus");
  if (m2 > m1 || m1 > n_corpus) bad("need m2 <= m1 <= n_corpus");
  if (sweep_bandwidths.empty()) bad("sweep_bandwidths is empty");
  if (!(epochs > 0.0)) bad("epochs must be positive");
  if (n_bins == 0 || n_bins > n_queries) bad("n_bins must lie in [1, n_queries]");
  kernel.validate();
}

SynthDataset make_synthetic_corpus(const SynthConfig& cfg) {
  require(cfg.dim >= 2, ErrorCode::kInvalidArgument, "synthetic corpus needs dim >= 2");
  require(cfg.n_clusters >= 1, ErrorCode::kInvalidArgument, "need at least one cluster");
  SynthDataset out;

  std::vector<std::vector<double>> centroids;
  auto crng = make_rng(cfg.seed, kCentroidStream);
  out.centroids = EmbeddingMatrix(cfg.dim);
  for (std::size_t c = 0; c < cfg.n_clusters; ++c) {
    auto v = gaussian_vector(cfg.dim, crng);
    scale(v, 1.0 / norm2(v));
    out.centroids.append(to_float(v));
    centroids.push_back(std::move(v));
  }

  const auto draw = [&](std::size_t count, std::uint64_t stream, EmbeddingMatrix& m,
                        std::vector<std::size_t>& clusters) {
    auto rng = make_rng(cfg.seed, stream);
    std::uniform_int_distribution<std::size_t> pick(0, cfg.n_clusters - 1);
    m = EmbeddingMatrix(cfg.dim);
    m.reserve(count);
    clusters.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t c = pick(rng);
      auto g = gaussian_vector(cfg.dim, rng);
      std::vector<double> v = centroids[c];
      if (cfg.cluster_spread > 0.0) {
        for (std::size_t j = 0; j < v.size(); ++j) v[j] += cfg.cluster_spread * g[j];
        const double n = norm2(v);
        if (n > 0.0) scale(v, 1.0 / n);
      }
      m.append(to_float(v));
      clusters.push_back(c);
    }
  };
  draw(cfg.n_corpus, kCorpusStream, out.corpus, out.corpus_clusters);
  draw(cfg.n_queries, kQueryStream, out.queries, out.query_clusters);
  return out;
}

std::vector<double> perturb_to_cosine(std::span<const float> x, double rho,
                                      std::uint64_t seed) {
  require(x.size() >= 2, ErrorCode::kInvalidArgument, "perturb_to_cosine needs dim >= 2");
  require(std::abs(rho) < 1.0, ErrorCode::kInvalidArgument,
          "target cosine must satisfy |rho| < 1");
  std::vector<double> xh(x.begin(), x.end());
  const double xn = norm2(xh);
  require(xn > 0.0, ErrorCode::kInvalidArgument, "cannot perturb a zero vector");
  scale(xh, 1.0 / xn);

  auto rng = make_rng(seed, kOrthogonalStream);
  std::vector<double> u;
  for (;;) {
    u = gaussian_vector(xh.size(), rng);
    // Two Gram-Schmidt passes leave |u . x| at rounding level.
    for (int pass = 0; pass < 2; ++pass) {
      double proj = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) proj += u[i] * xh[i];
      for (std::size_t i = 0; i < u.size(); ++i) u[i] -= proj * xh[i];
    }
    const double un = norm2(u);
    if (un > 1e-6) {
      scale(u, 1.0 / un);
      break;
    }
  }
  const double s = std::sqrt(1.0 - rho * rho);
  std::vector<double> out(xh.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rho * xh[i] + s * u[i];
  return out;
}

std::vector<std::size_t> choose_leaked_queries(std::size_t n_queries, std::size_t n_leaked,
                                               std::uint64_t seed) {
  auto rng = make_rng(seed, kLeakChoiceStream);
  const auto picked = sample_without_replacement(n_queries, n_leaked, rng);
  return std::vector<std::size_t>(picked.begin(), picked.end());
}

PlantResult plant_leaks(const EmbeddingMatrix& corpus, const EmbeddingMatrix& queries,
                        std::span<const std::size_t> leaked_rows,
                        const LeakCondition& condition, CosRange target_cos,
                        std::uint64_t seed, int max_paraphrases) {
  require(corpus.dim() == queries.dim(), ErrorCode::kInvalidArgument,
          "corpus and query dims differ");
  require(condition.exact == 0 || condition.exact == 1, ErrorCode::kInvalidArgument,
          "exact flag must be 0 or 1");
  require(condition.paraphrases >= 0 && condition.paraphrases <= max_paraphrases,
          ErrorCode::kInvalidArgument, "paraphrase count out of range");
  require(target_cos.lo > -1.0 && target_cos.lo < target_cos.hi && target_cos.hi < 1.0,
          ErrorCode::kInvalidArgument, "target cosine range must satisfy -1 < lo < hi < 1");

  PlantResult out;
  out.corpus = corpus;
  const bool plants_anything = condition.exact == 1 || condition.paraphrases > 0;
  std::unordered_set<std::size_t> leaked_set(leaked_rows.begin(), leaked_rows.end());

  for (std::size_t row : leaked_rows) {
    require(row < queries.count(), ErrorCode::kInvalidArgument, "leaked row out of range");
    if (!plants_anything) continue;
    const auto q = queries.row(row);
    LeakPlanEntry entry;
    entry.query_row = row;
    entry.query_id = queries.id(row);
    entry.exact = condition.exact;
    if (condition.exact) {
      entry.planted_rows.push_back(out.corpus.count());
      append_row(out.corpus, q);
    }
    if (condition.paraphrases > 0) {
      auto rng = make_rng(seed ^ entry.query_id, kParaphraseStream);
      std::uniform_real_distribution<double> rho_dist(target_cos.lo, target_cos.hi);
      std::vector<std::pair<double, std::vector<float>>> candidates;
      for (int i = 0; i < max_paraphrases; ++i) {
        const double rho = rho_dist(rng);
        const std::uint64_t sub_seed = rng();
        auto v = to_float(perturb_to_cosine(q, rho, sub_seed));
        const double achieved = cosine_sim(q, v);
        candidates.emplace_back(achieved, std::move(v));
      }
      std::stable_sort(candidates.begin(), candidates.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (int i = 0; i < condition.paraphrases; ++i) {
        entry.planted_rows.push_back(out.corpus.count());
        append_row(out.corpus, candidates[i].second);
        entry.achieved_cos.push_back(candidates[i].first);
        entry.paraphrase_vectors.push_back(std::move(candidates[i].second));
      }
    }
    out.plan.entries.push_back(std::move(entry));
  }

  out.labels.reserve(queries.count());
  for (std::size_t row = 0; row < queries.count(); ++row) {
    LeakLabelRow label;
    label.query_id = queries.id(row);
    if (leaked_set.count(row) && plants_anything) {
      label.exact = condition.exact;
      label.paraphrase_count = condition.paraphrases;
      label.leaked = true;
    }
    out.labels.push_back(label);
  }
  return out;
}

std::vector<double> plan_effective_epochs(const EmbeddingMatrix& queries,
                                          const LeakPlan& plan, double epochs) {
  std::vector<double> out(queries.count(), 0.0);
  for (const auto& e : plan.entries) {
    const auto q = queries.row(e.query_row);
    std::vector<std::vector<float>> planted;
    if (e.exact) planted.emplace_back(q.begin(), q.end());
    planted.insert(planted.end(), e.paraphrase_vectors.begin(), e.paraphrase_vectors.end());
    out[e.query_row] = effective_epochs(q, planted, epochs);
  }
  return out;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Correlation try_correlate(std::span<const double> xs, std::span<const double> ys) {
  try {
    return correlate(xs, ys);
  } catch (const Error&) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return Correlation{nan, nan, xs.size()};
  }
}

CellReport run_cell(const SynthConfig& cfg, const SynthDataset& data,
                    std::span<const std::size_t> leaked_rows, LeakCondition cond) {
  CellReport cell;
  cell.condition = cond;
  cell.name = "exact" + std::to_string(cond.exact) + "_paras" + std::to_string(cond.paraphrases);
  cell.planted = plant_leaks(data.corpus, data.queries, leaked_rows, cond,
                             cfg.target_cos_range, cfg.seed);
  const EmbeddingMatrix& corpus = cell.planted.corpus;
  const EmbeddingMatrix& queries = data.queries;
  cell.labels = cell.planted.labels;

  const std::size_t k_search = std::max<std::size_t>(cfg.k, 10);
  const auto neighbors = batch_query(corpus, queries, k_search);
  std::vector<NeighborList> top_k = neighbors;
  for (auto& nl : top_k) {
    nl.neighbor_ids.resize(cfg.k);
    nl.distances.resize(cfg.k);
  }
  DecomposedParams params{cfg.k, cfg.m1, cfg.m2, cfg.seed};
  cell.kde = decomposed_kde(corpus, queries, cfg.kernel, params, top_k);
  if (corpus.count() <= cfg.exact_kde_max_corpus) {
    cell.exact = exact_kde_batch(corpus, queries, cfg.kernel);
  }

  // Groups follow the designated leak rows so the all-clean cell still
  // yields a null comparison.
  std::vector<bool> designated(queries.count(), false);
  for (auto r : leaked_rows) designated[r] = true;
  std::vector<double> zl_leaked, zl_clean, zc_leaked, zc_clean, ze_leaked, ze_clean;
  std::vector<NeighborList> nl_leaked, nl_clean;
  for (std::size_t q = 0; q < queries.count(); ++q) {
    const bool l = designated[q];
    (l ? zl_leaked : zl_clean).push_back(cell.kde[q].z_local);
    (l ? zc_leaked : zc_clean).push_back(cell.kde[q].z_combined);
    if (!cell.exact.empty()) (l ? ze_leaked : ze_clean).push_back(cell.exact[q]);
    (l ? nl_leaked : nl_clean).push_back(top_k[q]);
  }
  if (!zl_leaked.empty() && !zl_clean.empty()) {
    cell.auc = separability_auc(zl_leaked, zl_clean);
    cell.auc_combined = separability_auc(zc_leaked, zc_clean);
    if (!cell.exact.empty()) cell.auc_exact = separability_auc(ze_leaked, ze_clean);
    cell.sweep = bandwidth_sweep(nl_leaked, nl_clean, cfg.kernel.family, cfg.sweep_bandwidths);
  }
  cell.mean_z_local_leaked = mean_of(zl_leaked);
  cell.mean_z_local_clean = mean_of(zl_clean);

  if (!cell.exact.empty()) {
    double worst = 0.0;
    for (std::size_t q = 0; q < queries.count(); ++q) {
      worst = std::max(worst, std::abs(cell.kde[q].z_combined - cell.exact[q]) / cell.exact[q]);
    }
    cell.max_rel_error_vs_exact = worst;
  }

  double r10 = 0.0;
  double r4 = 0.0;
  std::size_t n_sets = 0;
  for (const auto& e : cell.planted.plan.entries) {
    if (e.planted_rows.empty()) continue;
    const std::unordered_set<std::uint64_t> relevant(e.planted_rows.begin(), e.planted_rows.end());
    r10 += recall_at_k(neighbors[e.query_row], relevant, 10);
    r4 += recall_at_k(neighbors[e.query_row], relevant, 4);
    ++n_sets;
    if (e.exact) {
      const auto& nl = neighbors[e.query_row];
      const double d = nl.neighbor_ids[0] == e.planted_rows.front()
                           ? nl.distances[0]
                           : std::numeric_limits<double>::infinity();
      cell.exact_copy_max_distance = std::max(cell.exact_copy_max_distance, d);
    }
  }
  if (n_sets > 0) {
    cell.recall_at_10 = r10 / static_cast<double>(n_sets);
    cell.recall_at_4 = r4 / static_cast<double>(n_sets);
  }

  cell.effective_epochs = plan_effective_epochs(queries, cell.planted.plan, cfg.epochs);
  cell.performance.resize(queries.count());
  for (std::size_t q = 0; q < queries.count(); ++q) {
    auto rng = make_rng(cfg.seed ^ queries.id(q), kPerfNoiseStream);
    std::normal_distribution<double> noise(0.0, cfg.perf_noise);
    const double eps = cfg.perf_noise > 0.0 ? noise(rng) : 0.0;
    const double logit = cfg.perf_slope * cell.effective_epochs[q] + eps;
    cell.performance[q] = 1.0 / (1.0 + std::exp(-logit));
  }
  std::vector<Point> kde_points, ee_points;
  std::vector<double> zl_all;
  for (std::size_t q = 0; q < queries.count(); ++q) {
    kde_points.push_back({cell.kde[q].z_local, cell.performance[q]});
    ee_points.push_back({cell.effective_epochs[q], cell.performance[q]});
    zl_all.push_back(cell.kde[q].z_local);
  }
  cell.bins_kde = equal_mass_bins(kde_points, cfg.n_bins);
  cell.bins_epochs = equal_mass_bins(ee_points, cfg.n_bins);
  cell.kde_vs_perf = try_correlate(zl_all, cell.performance);
  cell.epochs_vs_perf = try_correlate(cell.effective_epochs, cell.performance);
  return cell;
}

json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json correlation_json(const Correlation& c) {
  return {{"pearson", nan_to_null(c.pearson)}, {"spearman", nan_to_null(c.spearman)},
          {"n", c.n}};
}

template <typename Fn>
void write_text(const std::filesystem::path& path, Fn&& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  body(out);
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace

ExperimentReport run_leakage_experiment(const SynthConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.config = cfg;
  report.data = make_synthetic_corpus(cfg);
  report.leaked_rows = choose_leaked_queries(cfg.n_queries, cfg.n_leaked, cfg.seed);
  for (int e : cfg.exact_flags) {
    for (int p : cfg.paraphrase_counts) {
      report.cells.push_back(run_cell(cfg, report.data, report.leaked_rows, {e, p}));
    }
  }
  return report;
}

std::string synth_config_to_json(const SynthConfig& cfg) {
  json j;
  j["n_corpus"] = cfg.n_corpus;
  j["dim"] = cfg.dim;
  j["n_clusters"] = cfg.n_clusters;
  j["cluster_spread"] = cfg.cluster_spread;
  j["n_queries"] = cfg.n_queries;
  j["n_leaked"] = cfg.n_leaked;
  j["paraphrase_counts"] = cfg.paraphrase_counts;
  j["exact_flags"] = cfg.exact_flags;
  j["target_cos_range"] = {cfg.target_cos_range.lo, cfg.target_cos_range.hi};
  j["seed"] = cfg.seed;
  j["k"] = cfg.k;
  j["m1"] = cfg.m1;
  j["m2"] = cfg.m2;
  j["kernel"] = kernel_family_name(cfg.kernel.family);
  j["bandwidth"] = cfg.kernel.bandwidth;
  j["sweep_bandwidths"] = cfg.sweep_bandwidths;
  j["epochs"] = cfg.epochs;
  j["perf_slope"] = cfg.perf_slope;
  j["perf_noise"] = cfg.perf_noise;
  j["n_bins"] = cfg.n_bins;
  j["exact_kde_max_corpus"] = cfg.exact_kde_max_corpus;
  return j.dump(2);
}

SynthConfig synth_config_from_json(const std::string& json_text) {
  SynthConfig cfg;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kSchemaViolation, std::string("synth config: ") + e.what());
  }
  require(j.is_object(), ErrorCode::kSchemaViolation, "synth config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_corpus") cfg.n_corpus = v.get<std::size_t>();
      else if (key == "dim") cfg.dim = v.get<std::size_t>();
      else if (key == "n_clusters") cfg.n_clusters = v.get<std::size_t>();
      else if (key == "cluster_spread") cfg.cluster_spread = v.get<double>();
      else if (key == "n_queries") cfg.n_queries = v.get<std::size_t>();
      else if (key == "n_leaked") cfg.n_leaked = v.get<std::size_t>();
      else if (key == "paraphrase_counts") cfg.paraphrase_counts = v.get<std::vector<int>>();
      else if (key == "exact_flags") cfg.exact_flags = v.get<std::vector<int>>();
      else if (key == "target_cos_range") {
        const auto r = v.get<std::vector<double>>();
        require(r.size() == 2, ErrorCode::kSchemaViolation,
                "target_cos_range must be [lo, hi]");
        cfg.target_cos_range = {r[0], r[1]};
      } else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "k") cfg.k = v.get<std::size_t>();
      else if (key == "m1") cfg.m1 = v.get<std::size_t>();
      else if (key == "m2") cfg.m2 = v.get<std::size_t>();
      else if (key == "kernel") cfg.kernel.family = parse_kernel_family(v.get<std::string>());
      else if (key == "bandwidth") cfg.kernel.bandwidth = v.get<double>();
      else if (key == "sweep_bandwidths") cfg.sweep_bandwidths = v.get<std::vector<double>>();
      else if (key == "epochs") cfg.epochs = v.get<double>();
      else if (key == "perf_slope") cfg.perf_slope = v.get<double>();
      else if (key == "perf_noise") cfg.perf_noise = v.get<double>();
      else if (key == "n_bins") cfg.n_bins = v.get<std::size_t>();
      else if (key == "exact_kde_max_corpus") cfg.exact_kde_max_corpus = v.get<std::size_t>();
      else fail(ErrorCode::kSchemaViolation, "synth config: unknown field '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kSchemaViolation, std::string("synth config: ") + e.what());
  }
  return cfg;
}

std::string summary_json(const ExperimentReport& report) {
  json cells = json::array();
  std::optional<double> exact_leak_auc;
  for (const auto& c : report.cells) {
    json sweep = json::array();
    for (const auto& r : c.sweep) {
      sweep.push_back({{"bandwidth", r.bandwidth}, {"auc", r.auc}, {"mean_gap", r.mean_gap}});
    }
    json cj;
    cj["name"] = c.name;
    cj["exact"] = c.condition.exact;
    cj["paraphrases"] = c.condition.paraphrases;
    cj["auc"] = nan_to_null(c.auc);
    cj["auc_combined"] = nan_to_null(c.auc_combined);
    cj["auc_exact"] = c.auc_exact ? nan_to_null(*c.auc_exact) : json(nullptr);
    cj["mean_z_local_leaked"] = nan_to_null(c.mean_z_local_leaked);
    cj["mean_z_local_clean"] = nan_to_null(c.mean_z_local_clean);
    cj["recall_at_10"] = c.recall_at_10;
    cj["recall_at_4"] = c.recall_at_4;
    cj["exact_copy_max_distance"] = nan_to_null(c.exact_copy_max_distance);
    cj["max_rel_error_vs_exact"] =
        c.max_rel_error_vs_exact ? nan_to_null(*c.max_rel_error_vs_exact) : json(nullptr);
    cj["kde_vs_performance"] = correlation_json(c.kde_vs_perf);
    cj["epochs_vs_performance"] = correlation_json(c.epochs_vs_perf);
    cj["sweep"] = std::move(sweep);
    cells.push_back(std::move(cj));
    if (c.condition.exact == 1 && c.condition.paraphrases == 0) exact_leak_auc = c.auc;
  }
  json j;
  j["config"] = json::parse(synth_config_to_json(report.config));
  j["n_leaked_designated"] = report.leaked_rows.size();
  j["cells"] = std::move(cells);
  j["exact_leak_auc"] = exact_leak_auc ? json(*exact_leak_auc) : json(nullptr);
  return j.dump(2);
}

void write_experiment_report(const ExperimentReport& report,
                             const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "cells");
  write_text(dir / "config.json",
             [&](std::ostream& o) { o << synth_config_to_json(report.config) << '\n'; });
  write_matrix(report.data.corpus, dir / "corpus.lmd3");
  write_matrix(report.data.queries, dir / "queries.lmd3");

  const std::size_t base = report.data.corpus.count();
  for (const auto& c : report.cells) {
    const fs::path cdir = dir / "cells" / c.name;
    fs::create_directories(cdir);
    const auto& pc = c.planted.corpus;
    if (pc.count() > base) {
      write_matrix(pc.slice(base, pc.count()), cdir / "planted.lmd3");
    }
    write_text(cdir / "plan.jsonl", [&](std::ostream& o) {
      for (const auto& e : c.planted.plan.entries) {
        json j;
        j["query_id"] = e.query_id;
        j["query_row"] = e.query_row;
        j["exact"] = e.exact;
        j["achieved_cos"] = e.achieved_cos;
        j["planted_rows"] = e.planted_rows;
        o << j.dump() << '\n';
      }
    });
    write_text(cdir / "kde.csv", [&](std::ostream& o) { write_kde_csv(o, c.kde); });
    if (!c.exact.empty()) {
      write_text(cdir / "exact.csv", [&](std::ostream& o) {
        csv::write_row(o, std::vector<std::string>{"query_id", "z_exact"});
        for (std::size_t q = 0; q < c.exact.size(); ++q) {
          csv::write_row(o, std::vector<std::string>{std::to_string(c.kde[q].query_id),
                                                     csv::format_double(c.exact[q])});
        }
      });
    }
    write_text(cdir / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, c.sweep); });
    write_text(cdir / "labels.csv", [&](std::ostream& o) {
      csv::write_row(o, std::vector<std::string>{"query_id", "leaked", "exact",
                                                 "paraphrase_count", "effective_epochs",
                                                 "performance"});
      for (std::size_t q = 0; q < c.labels.size(); ++q) {
        const auto& l = c.labels[q];
        csv::write_row(o, std::vector<std::string>{
                              std::to_string(l.query_id), l.leaked ? "1" : "0",
                              std::to_string(l.exact), std::to_string(l.paraphrase_count),
                              csv::format_double(c.effective_epochs[q]),
                              csv::format_double(c.performance[q])});
      }
    });
    write_text(cdir / "bins_kde.csv", [&](std::ostream& o) { write_bins_csv(o, c.bins_kde); });
    write_text(cdir / "bins_epochs.csv",
               [&](std::ostream& o) { write_bins_csv(o, c.bins_epochs); });
  }
  write_text(dir / "summary.json", [&](std::ostream& o) { o << summary_json(report) << '\n'; });
}

}  // namespace kdprobe
