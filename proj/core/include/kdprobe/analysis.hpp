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
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kdprobe/kde.hpp"
#include "kdprobe/matrix.hpp"

namespace kdprobe {

// Per-query performance measurements produced outside this toolkit.
struct MetricRow {
  std::uint64_t query_id = 0;
  std::map<std::string, double> metrics;
  std::int64_t length_chars = 0;
};

struct Bin {
  std::size_t index = 0;
  std::size_t count = 0;
  double mean_x = 0.0;
  double mean_y = 0.0;
};

struct LeakLabelRow {
  std::uint64_t query_id = 0;
  bool leaked = false;
  int exact = 0;
  int paraphrase_count = 0;
};

// epochs * sum of cosine similarities between x_t and each planted vector.
double effective_epochs(std::span<const float> x_t,
                        std::span<const std::vector<float>> planted, double epochs);

// Points are stably sorted by x (ties keep input order), then cut into
// n_bins runs whose sizes differ by at most one, larger runs first.
struct Point {
  double x = 0.0;
  double y = 0.0;
};
std::vector<Bin> equal_mass_bins(std::span<const Point> points, std::size_t n_bins);

struct FilterReport {
  std::size_t kept = 0;
  std::size_t dropped_length = 0;
  // Rows dropped by each capped metric (first failing cap in name order).
  std::map<std::string, std::size_t> dropped_by_cap;
};

struct LengthRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

std::vector<MetricRow> filter_rows(std::span<const MetricRow> rows, LengthRange range,
                                   const std::map<std::string, double>& caps,
                                   FilterReport* report = nullptr);

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
  std::size_t n = 0;
};

// Spearman uses average ranks for ties.
Correlation correlate(std::span<const double> xs, std::span<const double> ys);

// Mann-Whitney AUC: P(leaked > clean) + 0.5 P(leaked == clean).
double separability_auc(std::span<const double> leaked, std::span<const double> clean);

struct SweepRow {
  double bandwidth = 0.0;
  double auc = 0.0;
  double mean_gap = 0.0;  // mean z_local(leaked) - mean z_local(clean)
};

// z_local for both groups at each bandwidth from one pair of neighbor sets;
// rows ordered by bandwidth ascending.
std::vector<SweepRow> bandwidth_sweep(std::span<const NeighborList> leaked,
                                      std::span<const NeighborList> clean,
                                      KernelFamily family,
                                      std::span<const double> bandwidths);
std::vector<SweepRow> bandwidth_sweep(const EmbeddingMatrix& corpus,
                                      const EmbeddingMatrix& leaked_queries,
                                      const EmbeddingMatrix& clean_queries,
                                      KernelFamily family,
                                      std::span<const double> bandwidths, std::size_t k);

// Modal label among the k nearest labeled rows. Ties go to the label with the
// smallest summed neighbor distance, then to the lexicographically smallest.
std::vector<std::string> knn_majority_label(const EmbeddingMatrix& labeled,
                                            std::span<const std::string> labels,
                                            const EmbeddingMatrix& unlabeled,
                                            std::size_t k);

struct JoinedRow {
  KdeResult kde;
  MetricRow metrics;
};

struct JoinResult {
  std::vector<JoinedRow> rows;  // ordered by the kde input
  std::vector<std::uint64_t> unmatched_kde;
  std::vector<std::uint64_t> unmatched_metrics;
};

JoinResult join_density_metrics(std::span<const KdeResult> kde,
                                std::span<const MetricRow> metrics);

// Metrics CSV: query_id,<metric...>,length_chars.
std::vector<MetricRow> read_metrics_csv(std::istream& in);
void write_metrics_csv(std::ostream& out, std::span<const MetricRow> rows);

void write_bins_csv(std::ostream& out, std::span<const Bin> bins);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
void write_labels_csv(std::ostream& out, std::span<const std::uint64_t> query_ids,
                      std::span<const std::string> labels);

}  // namespace kdprobe
