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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "kdprobe/embed.hpp"
#include "kdprobe/error.hpp"
#include "kdprobe/knn.hpp"
#include "kdprobe/synthlab.hpp"
#include "support/oracles.hpp"

namespace kdprobe {
namespace {

namespace fs = std::filesystem;

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.n_corpus = 3000;
  cfg.n_clusters = 20;
  cfg.n_queries = 200;
  cfg.n_leaked = 40;
  cfg.k = 50;
  cfg.m1 = 1500;
  cfg.m2 = 200;
  cfg.n_bins = 10;
  return cfg;
}

double cos_d(std::span<const float> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

TEST(SyntheticCorpus, ZeroSpreadCollapsesOntoCentroids) {
  auto cfg = small_config();
  cfg.cluster_spread = 0.0;
  const auto d = make_synthetic_corpus(cfg);
  ASSERT_EQ(d.corpus.count(), cfg.n_corpus);
  for (std::size_t i = 0; i < d.corpus.count(); ++i) {
    const auto c = d.centroids.row(d.corpus_clusters[i]);
    for (std::size_t j = 0; j < cfg.dim; ++j) EXPECT_NEAR(d.corpus.row(i)[j], c[j], 1e-6);
  }
}

TEST(SyntheticCorpus, SeededAndUnitNorm) {
  const auto cfg = small_config();
  const auto a = make_synthetic_corpus(cfg);
  const auto b = make_synthetic_corpus(cfg);
  EXPECT_EQ(a.corpus, b.corpus);
  EXPECT_EQ(a.queries, b.queries);
  EXPECT_LT(a.corpus.max_norm_deviation(), 1e-5);
  auto other = cfg;
  other.seed += 1;
  EXPECT_FALSE(make_synthetic_corpus(other).corpus == a.corpus);
  auto bad = cfg;
  bad.dim = 1;
  EXPECT_THROW(make_synthetic_corpus(bad), Error);
}

TEST(SyntheticCorpus, WithinClusterCloserThanAcross) {
  auto cfg = small_config();
  cfg.cluster_spread = 0.1;
  cfg.n_corpus = 1000;
  cfg.m1 = 500;
  const auto d = make_synthetic_corpus(cfg);
  double within = 0, across = 0;
  std::size_t nw = 0, na = 0;
  for (std::size_t i = 0; i < 300; ++i) {
    for (std::size_t j = i + 1; j < 300; ++j) {
      const double c = cosine_sim(d.corpus.row(i), d.corpus.row(j));
      if (d.corpus_clusters[i] == d.corpus_clusters[j]) {
        within += c;
        ++nw;
      } else {
        across += c;
        ++na;
      }
    }
  }
  ASSERT_GT(nw, 0u);
  EXPECT_GT(within / nw, across / na);
}

TEST(PerturbToCosine, HitsTargetExactly) {
  std::mt19937_64 rng(50);
  for (int t = 0; t < 200; ++t) {
    const auto x = oracle::random_unit(2 + rng() % 60, rng);
    for (double rho : {0.0, 0.5, 0.7, 0.95, 0.999, -0.3}) {
      const auto v = perturb_to_cosine(x, rho, rng());
      EXPECT_NEAR(cos_d(x, v), rho, 1e-9);
      double n = 0;
      for (double e : v) n += e * e;
      EXPECT_NEAR(n, 1.0, 1e-12);
    }
  }
}

TEST(PerturbToCosine, RejectsDegenerateTargetsAndVariesWithSeed) {
  std::mt19937_64 rng(51);
  const auto x = oracle::random_unit(16, rng);
  EXPECT_THROW(perturb_to_cosine(x, 1.0, 1), Error);
  EXPECT_THROW(perturb_to_cosine(x, -1.0, 1), Error);
  const auto a = perturb_to_cosine(x, 0.8, 1);
  const auto b = perturb_to_cosine(x, 0.8, 2);
  EXPECT_NE(a, b);
  EXPECT_NEAR(cos_d(x, a), cos_d(x, b), 1e-9);
  EXPECT_EQ(a, perturb_to_cosine(x, 0.8, 1));
}

TEST(PlantLeaks, ExactCopiesAreNearestAtZero) {
  const auto cfg = small_config();
  const auto d = make_synthetic_corpus(cfg);
  const auto leaked = choose_leaked_queries(cfg.n_queries, cfg.n_leaked, cfg.seed);
  ASSERT_EQ(leaked.size(), cfg.n_leaked);
  const auto p = plant_leaks(d.corpus, d.queries, leaked, {1, 0}, cfg.target_cos_range, 9);
  EXPECT_EQ(p.corpus.count(), cfg.n_corpus + cfg.n_leaked);
  for (const auto& e : p.plan.entries) {
    const auto nn = query_knn(p.corpus, d.queries.row(e.query_row), 1);
    EXPECT_EQ(nn.neighbor_ids[0], e.planted_rows[0]);
    EXPECT_EQ(nn.distances[0], 0.0);
  }
}

TEST(PlantLeaks, ParaphrasesAreRetrievedAtTheirCosines) {
  const auto cfg = small_config();
  const auto d = make_synthetic_corpus(cfg);
  const auto leaked = choose_leaked_queries(cfg.n_queries, cfg.n_leaked, cfg.seed);
  const auto p = plant_leaks(d.corpus, d.queries, leaked, {0, 3}, cfg.target_cos_range, 9);
  EXPECT_EQ(p.corpus.count(), cfg.n_corpus + 3 * cfg.n_leaked);
  std::size_t hits = 0;
  for (const auto& e : p.plan.entries) {
    ASSERT_EQ(e.achieved_cos.size(), 3u);
    ASSERT_EQ(e.planted_rows.size(), 3u);
    const auto q = d.queries.row(e.query_row);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_GE(e.achieved_cos[i], cfg.target_cos_range.lo);
      EXPECT_LE(e.achieved_cos[i], cfg.target_cos_range.hi);
      EXPECT_NEAR(cosine_sim(q, p.corpus.row(e.planted_rows[i])), e.achieved_cos[i], 1e-6);
    }
    const std::set<std::uint64_t> planted(e.planted_rows.begin(), e.planted_rows.end());
    for (auto id : query_knn(p.corpus, q, 3).neighbor_ids) hits += planted.count(id);
  }
  // An ordinary corpus point occasionally outranks the weakest paraphrase.
  EXPECT_GE(static_cast<double>(hits) / (3.0 * cfg.n_leaked), 0.95);
  int leaked_labels = 0;
  for (const auto& l : p.labels) leaked_labels += l.leaked;
  EXPECT_EQ(leaked_labels, static_cast<int>(cfg.n_leaked));
}

TEST(PlantLeaks, NestedAcrossCountsAndEmptyPlan) {
  const auto cfg = small_config();
  const auto d = make_synthetic_corpus(cfg);
  const auto leaked = choose_leaked_queries(cfg.n_queries, cfg.n_leaked, cfg.seed);
  const auto p1 = plant_leaks(d.corpus, d.queries, leaked, {0, 1}, cfg.target_cos_range, 9);
  const auto p3 = plant_leaks(d.corpus, d.queries, leaked, {0, 3}, cfg.target_cos_range, 9);
  for (std::size_t i = 0; i < p1.plan.entries.size(); ++i) {
    EXPECT_EQ(p1.plan.entries[i].paraphrase_vectors[0], p3.plan.entries[i].paraphrase_vectors[0]);
  }
  const auto none = plant_leaks(d.corpus, d.queries, {}, {1, 3}, cfg.target_cos_range, 9);
  EXPECT_EQ(none.corpus, d.corpus);
  EXPECT_TRUE(none.plan.entries.empty());
}

TEST(PlanEffectiveEpochs, ExactCopyIsEpochCount) {
  const auto cfg = small_config();
  const auto d = make_synthetic_corpus(cfg);
  const auto leaked = choose_leaked_queries(cfg.n_queries, cfg.n_leaked, cfg.seed);
  const auto p = plant_leaks(d.corpus, d.queries, leaked, {1, 0}, cfg.target_cos_range, 9);
  const auto ee = plan_effective_epochs(d.queries, p.plan, 2.0);
  const std::set<std::size_t> is_leaked(leaked.begin(), leaked.end());
  for (std::size_t q = 0; q < ee.size(); ++q) EXPECT_EQ(ee[q], is_leaked.count(q) ? 2.0 : 0.0);
}

TEST(LeakageExperiment, CellPropertiesOnSmallInstance) {
  const auto rep = run_leakage_experiment(small_config());
  ASSERT_EQ(rep.cells.size(), 8u);
  double prev = -1.0;
  for (const auto& c : rep.cells) {
    if (c.condition.exact == 1) {
      EXPECT_GE(c.auc, 0.99) << c.name;
      EXPECT_GT(c.mean_z_local_leaked, c.mean_z_local_clean) << c.name;
      EXPECT_LE(c.exact_copy_max_distance, 1e-6);
      ASSERT_TRUE(c.max_rel_error_vs_exact.has_value());
    } else {
      EXPECT_GT(c.mean_z_local_leaked, prev) << c.name;
      prev = c.mean_z_local_leaked;
    }
    EXPECT_EQ(c.kde.size(), 200u);
    EXPECT_EQ(c.bins_kde.size(), 10u);
  }
}

TEST(LeakageExperiment, NoLeakIsNull) {
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthConfig cfg = small_config();
    cfg.n_queries = 2000;
    cfg.n_leaked = 1000;
    cfg.paraphrase_counts = {0};
    cfg.exact_flags = {0};
    cfg.seed = seed;
    const auto rep = run_leakage_experiment(cfg);
    const double auc = rep.cells[0].auc;
    inside += auc >= 0.45 && auc <= 0.55;
  }
  EXPECT_EQ(inside, 20);
}

TEST(LeakageExperiment, ReportIsPureFunctionOfConfig) {
  auto cfg = small_config();
  cfg.paraphrase_counts = {0, 3};
  const auto a = run_leakage_experiment(cfg);
  const auto b = run_leakage_experiment(cfg);
  EXPECT_EQ(summary_json(a), summary_json(b));
  const fs::path dir = fs::temp_directory_path() / "kdprobe_synth_report";
  fs::remove_all(dir);
  write_experiment_report(a, dir / "a");
  write_experiment_report(b, dir / "b");
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir / "a");
    std::ifstream fa(entry.path(), std::ios::binary), fb(dir / "b" / rel, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {});
    const std::string sb((std::istreambuf_iterator<char>(fb)), {});
    EXPECT_EQ(sa, sb) << rel;
    ++files;
  }
  EXPECT_GT(files, 10u);
  fs::remove_all(dir);
}

TEST(SynthConfigJson, RoundTripAndStrictness) {
  auto cfg = small_config();
  cfg.kernel = {KernelFamily::kExponential, 0.3};
  const auto text = synth_config_to_json(cfg);
  EXPECT_EQ(synth_config_to_json(synth_config_from_json(text)), text);
  try {
    synth_config_from_json(R"({"n_corpus": 10, "bogus": 1})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaViolation);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(synth_config_from_json("{"), Error);
}

}  // namespace
}  // namespace kdprobe
