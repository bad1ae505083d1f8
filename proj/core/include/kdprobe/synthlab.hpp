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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kdprobe/analysis.hpp"
#include "kdprobe/kde.hpp"
#include "kdprobe/matrix.hpp"

namespace kdprobe {

struct CosRange {
  double lo = 0.7;
  double hi = 0.95;
};

struct SynthConfig {
  std::size_t n_corpus = 20'000;
  std::size_t dim = 32;
  std::size_t n_clusters = 50;
  double cluster_spread = 0.25;
  std::size_t n_queries = 1'000;
  std::size_t n_leaked = 200;
  std::vector<int> paraphrase_counts{0, 1, 2, 3};  // paraphrases 1..p are planted
  std::vector<int> exact_flags{0, 1};
  CosRange target_cos_range;
  std::uint64_t seed = 1234;

  // Pipeline knobs.
  std::size_t k = 100;
  std::size_t m1 = 10'000;
  std::size_t m2 = 1'000;
  KernelSpec kernel{KernelFamily::kGaussian, 0.1};
  std::vector<double> sweep_bandwidths{0.1, 0.2, 0.5, 1.0};
  double epochs = 2.0;
  // Synthetic performance = sigmoid(perf_slope * effective_epochs + noise),
  // noise ~ N(0, perf_noise^2). Artifact-internal; not a model of any LLM.
  double perf_slope = 1.0;
  double perf_noise = 0.5;
  std::size_t n_bins = 20;
  std::size_t exact_kde_max_corpus = 1'000'000;

  void validate() const;
};

struct SynthDataset {
  EmbeddingMatrix centroids;
  EmbeddingMatrix corpus;
  std::vector<std::size_t> corpus_clusters;
  EmbeddingMatrix queries;
  std::vector<std::size_t> query_clusters;
};

// Centroids uniform on the sphere; each point normalize(c + spread * g),
// g ~ N(0, I). Queries come from the same centroids with a separate stream.
SynthDataset make_synthetic_corpus(const SynthConfig& cfg);

// Unit vector at exactly cosine rho to x (computed in double):
// rho * x + sqrt(1 - rho^2) * u with u a seeded unit vector orthogonal to x.
std::vector<double> perturb_to_cosine(std::span<const float> x, double rho,
                                      std::uint64_t seed);

struct LeakCondition {
  int exact = 0;
  int paraphrases = 0;
};

struct LeakPlanEntry {
  std::size_t query_row = 0;
  std::uint64_t query_id = 0;
  int exact = 0;
  std::vector<std::vector<float>> paraphrase_vectors;  // ascending achieved_cos
  std::vector<double> achieved_cos;
  std::vector<std::uint64_t> planted_rows;  // copy first (if any), then paraphrases
};

struct LeakPlan {
  std::vector<LeakPlanEntry> entries;
};

struct PlantResult {
  EmbeddingMatrix corpus;  // original rows followed by planted rows
  LeakPlan plan;
  std::vector<LeakLabelRow> labels;  // one per query row
};

// Rows of `queries` chosen for leakage, ascending, deterministic in seed.
std::vector<std::size_t> choose_leaked_queries(std::size_t n_queries,
                                               std::size_t n_leaked, std::uint64_t seed);

// Appends an exact copy (condition.exact) and paraphrases 1..condition.paraphrases
// of each leaked query. Each leaked query draws max_paraphrases candidates
// from its own stream and keeps the lowest-similarity p of them, so planted
// sets are nested across paraphrase counts.
PlantResult plant_leaks(const EmbeddingMatrix& corpus, const EmbeddingMatrix& queries,
                        std::span<const std::size_t> leaked_rows,
                        const LeakCondition& condition, CosRange target_cos,
                        std::uint64_t seed, int max_paraphrases = 3);

// Effective epochs of every query under a plan (0 for clean queries).
std::vector<double> plan_effective_epochs(const EmbeddingMatrix& queries,
                                          const LeakPlan& plan, double epochs);

struct CellReport {
  LeakCondition condition;
  std::string name;
  double auc = 0.0;            // z_local, leaked vs clean
  double auc_combined = 0.0;
  std::optional<double> auc_exact;
  double mean_z_local_leaked = 0.0;
  double mean_z_local_clean = 0.0;
  double recall_at_10 = 0.0;   // planted sets only; 0 when nothing is planted
  double recall_at_4 = 0.0;
  std::optional<double> max_rel_error_vs_exact;
  double exact_copy_max_distance = 0.0;
  std::vector<SweepRow> sweep;
  Correlation kde_vs_perf;
  Correlation epochs_vs_perf;
  std::vector<KdeResult> kde;
  std::vector<double> exact;
  std::vector<LeakLabelRow> labels;
  std::vector<double> effective_epochs;
  std::vector<double> performance;
  std::vector<Bin> bins_kde;
  std::vector<Bin> bins_epochs;
  PlantResult planted;
};

struct ExperimentReport {
  SynthConfig config;
  SynthDataset data;
  std::vector<std::size_t> leaked_rows;
  std::vector<CellReport> cells;
};

ExperimentReport run_leakage_experiment(const SynthConfig& cfg);

// config.json, corpus.lmd3, queries.lmd3, cells/<name>/{planted.lmd3,
// plan.jsonl, kde.csv, exact.csv, sweep.csv, labels.csv, bins_kde.csv,
// bins_epochs.csv}, summary.json.
void write_experiment_report(const ExperimentReport& report,
                             const std::filesystem::path& dir);
std::string summary_json(const ExperimentReport& report);

std::string synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const std::string& json_text);

}  // namespace kdprobe
