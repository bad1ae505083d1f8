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

#include "kdprobe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>
#include <set>
#include <unordered_set>

#include "kdprobe/csv.hpp"
#include "kdprobe/embed.hpp"
#include "kdprobe/error.hpp"
#include "kdprobe/knn.hpp"

namespace kdprobe {

double effective_epochs(std::span<const float> x_t,
                        std::span<const std::vector<float>> planted, double epochs) {
  require(epochs > 0.0, ErrorCode::kInvalidArgument, "epochs must be positive");
  double sum = 0.0;
  for (const auto& p : planted) sum += cosine_sim(x_t, p);
  return epochs * sum;
}

std::vector<Bin> equal_mass_bins(std::span<const Point> points, std::size_t n_bins) {
  require(n_bins >= 1, ErrorCode::kInvalidArgument, "n_bins must be at least 1");
  require(points.size() >= n_bins, ErrorCode::kInvalidArgument,
          "fewer points (" + std::to_string(points.size()) + ") than bins (" +
              std::to_string(n_bins) + ")");
  std::vector<Point> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Point& a, const Point& b) { return a.x < b.x; });
  const std::size_t base = sorted.size() / n_bins;
  const std::size_t extra = sorted.size() % n_bins;
  std::vector<Bin> bins;
  bins.reserve(n_bins);
  std::size_t at = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    Bin bin;
    bin.index = b;
    bin.count = base + (b < extra ? 1 : 0);
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < bin.count; ++i, ++at) {
      sx += sorted[at].x;
      sy += sorted[at].y;
    }
    bin.mean_x = sx / static_cast<double>(bin.count);
    bin.mean_y = sy / static_cast<double>(bin.count);
    bins.push_back(bin);
  }
  return bins;
}

std::vector<MetricRow> filter_rows(std::span<const MetricRow> rows, LengthRange range,
                                   const std::map<std::string, double>& caps,
                                   FilterReport* report) {
  require(range.lo <= range.hi, ErrorCode::kInvalidArgument,
          "length range lower bound exceeds upper bound");
  FilterReport local;
  for (const auto& [name, cap] : caps) local.dropped_by_cap[name] = 0;
  std::vector<MetricRow> kept;
  for (const auto& row : rows) {
    if (row.length_chars < range.lo || row.length_chars > range.hi) {
      ++local.dropped_length;
      continue;
    }
    bool keep = true;
    for (const auto& [name, cap] : caps) {
      auto it = row.metrics.find(name);
      require(it != row.metrics.end(), ErrorCode::kSchemaViolation,
              "row " + std::to_string(row.query_id) + " lacks capped metric '" + name + "'");
      if (it->second > cap) {
        ++local.dropped_by_cap[name];
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(row);
  }
  local.kept = kept.size();
  if (report) *report = std::move(local);
  return kept;
}

namespace {

double pearson_of(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  require(sxx > 0.0 && syy > 0.0, ErrorCode::kInvalidArgument,
          "correlation of a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// 1-based ranks, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    require(std::isfinite(x), ErrorCode::kInvalidArgument,
            std::string(what) + " contains a non-finite value");
  }
}

}  // namespace

Correlation correlate(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorCode::kInvalidArgument,
          "correlate: series lengths differ");
  require(xs.size() >= 3, ErrorCode::kInvalidArgument, "correlate needs at least 3 points");
  require_finite(xs, "correlate xs");
  require_finite(ys, "correlate ys");
  Correlation c;
  c.n = xs.size();
  c.pearson = pearson_of(xs, ys);
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  c.spearman = pearson_of(rx, ry);
  return c;
}

double separability_auc(std::span<const double> leaked, std::span<const double> clean) {
  require(!leaked.empty() && !clean.empty(), ErrorCode::kInvalidArgument,
          "separability_auc needs two nonempty score lists");
  require_finite(leaked, "leaked scores");
  require_finite(clean, "clean scores");
  std::vector<double> sorted(clean.begin(), clean.end());
  std::sort(sorted.begin(), sorted.end());
  // Twice the Mann-Whitney U so the tally stays an integer.
  std::uint64_t twice_u = 0;
  for (double s : leaked) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), s);
    const auto hi = std::upper_bound(lo, sorted.end(), s);
    twice_u += 2 * static_cast<std::uint64_t>(lo - sorted.begin()) +
               static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(leaked.size()) * static_cast<double>(clean.size()));
}

std::vector<SweepRow> bandwidth_sweep(std::span<const NeighborList> leaked,
                                      std::span<const NeighborList> clean,
                                      KernelFamily family,
                                      std::span<const double> bandwidths) {
  require(!bandwidths.empty(), ErrorCode::kInvalidArgument, "empty bandwidth list");
  std::vector<double> hs(bandwidths.begin(), bandwidths.end());
  std::sort(hs.begin(), hs.end());
  std::vector<SweepRow> out;
  for (double h : hs) {
    const KernelSpec spec{family, h};
    std::vector<double> zl;
    std::vector<double> zc;
    zl.reserve(leaked.size());
    zc.reserve(clean.size());
    for (const auto& nl : leaked) zl.push_back(local_kde(nl, spec));
    for (const auto& nl : clean) zc.push_back(local_kde(nl, spec));
    SweepRow row;
    row.bandwidth = h;
    row.auc = separability_auc(zl, zc);
    row.mean_gap = std::accumulate(zl.begin(), zl.end(), 0.0) / static_cast<double>(zl.size()) -
                   std::accumulate(zc.begin(), zc.end(), 0.0) / static_cast<double>(zc.size());
    out.push_back(row);
  }
  return out;
}

std::vector<SweepRow> bandwidth_sweep(const EmbeddingMatrix& corpus,
                                      const EmbeddingMatrix& leaked_queries,
                                      const EmbeddingMatrix& clean_queries,
                                      KernelFamily family,
                                      std::span<const double> bandwidths, std::size_t k) {
  require(!bandwidths.empty(), ErrorCode::kInvalidArgument, "empty bandwidth list");
  const auto nl_leaked = batch_query(corpus, leaked_queries, k);
  const auto nl_clean = batch_query(corpus, clean_queries, k);
  return bandwidth_sweep(nl_leaked, nl_clean, family, bandwidths);
}

std::vector<std::string> knn_majority_label(const EmbeddingMatrix& labeled,
                                            std::span<const std::string> labels,
                                            const EmbeddingMatrix& unlabeled,
                                            std::size_t k) {
  require(labeled.count() > 0, ErrorCode::kInvalidArgument, "no labeled points");
  require(labels.size() == labeled.count(), ErrorCode::kInvalidArgument,
          "label count does not match labeled rows");
  if (unlabeled.count() == 0) return {};
  const auto neighbors = batch_query(labeled, unlabeled, k);
  std::vector<std::string> out;
  out.reserve(neighbors.size());
  for (const auto& nl : neighbors) {
    struct Tally {
      std::size_t votes = 0;
      double distance = 0.0;
    };
    std::map<std::string_view, Tally> tally;  // ordered: lexicographic final tie-break
    for (std::size_t i = 0; i < nl.size(); ++i) {
      auto& t = tally[labels[nl.neighbor_ids[i]]];
      ++t.votes;
      t.distance += nl.distances[i];
    }
    auto best = tally.begin();
    for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
      const bool more = it->second.votes > best->second.votes;
      const bool closer = it->second.votes == best->second.votes &&
                          it->second.distance < best->second.distance;
      if (more || closer) best = it;
    }
    out.emplace_back(best->first);
  }
  return out;
}

JoinResult join_density_metrics(std::span<const KdeResult> kde,
                                std::span<const MetricRow> metrics) {
  std::unordered_map<std::uint64_t, std::size_t> by_id;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    require(by_id.emplace(metrics[i].query_id, i).second, ErrorCode::kSchemaViolation,
            "duplicate query_id in metrics: " + std::to_string(metrics[i].query_id));
  }
  std::unordered_set<std::uint64_t> kde_ids;
  JoinResult out;
  std::vector<bool> used(metrics.size(), false);
  for (const auto& r : kde) {
    require(kde_ids.insert(r.query_id).second, ErrorCode::kSchemaViolation,
            "duplicate query_id in KDE results: " + std::to_string(r.query_id));
    auto it = by_id.find(r.query_id);
    if (it == by_id.end()) {
      out.unmatched_kde.push_back(r.query_id);
      continue;
    }
    used[it->second] = true;
    out.rows.push_back({r, metrics[it->second]});
  }
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (!used[i]) out.unmatched_metrics.push_back(metrics[i].query_id);
  }
  std::sort(out.unmatched_kde.begin(), out.unmatched_kde.end());
  std::sort(out.unmatched_metrics.begin(), out.unmatched_metrics.end());
  return out;
}

std::vector<MetricRow> read_metrics_csv(std::istream& in) {
  const auto t = csv::read_table(in);
  const std::size_t id_col = t.column("query_id");
  const std::size_t len_col = t.column("length_chars");
  std::vector<MetricRow> out;
  out.reserve(t.rows.size());
  for (const auto& rec : t.rows) {
    MetricRow row;
    row.query_id = csv::parse_uint(rec[id_col]);
    row.length_chars = csv::parse_int(rec[len_col]);
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (c == id_col || c == len_col) continue;
      const double v = csv::parse_double(rec[c]);
      require(std::isfinite(v), ErrorCode::kSchemaViolation,
              "non-finite metric '" + t.header[c] + "' for query " +
                  std::to_string(row.query_id));
      row.metrics[t.header[c]] = v;
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricRow> rows) {
  std::set<std::string> names;
  for (const auto& r : rows) {
    for (const auto& [name, v] : r.metrics) names.insert(name);
  }
  std::vector<std::string> header{"query_id"};
  header.insert(header.end(), names.begin(), names.end());
  header.push_back("length_chars");
  csv::write_row(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> rec{std::to_string(r.query_id)};
    for (const auto& name : names) {
      auto it = r.metrics.find(name);
      rec.push_back(it == r.metrics.end() ? "" : csv::format_double(it->second));
    }
    rec.push_back(std::to_string(r.length_chars));
    csv::write_row(out, rec);
  }
}

void write_bins_csv(std::ostream& out, std::span<const Bin> bins) {
  csv::write_row(out, std::vector<std::string>{"index", "count", "mean_x", "mean_y"});
  for (const auto& b : bins) {
    csv::write_row(out, std::vector<std::string>{std::to_string(b.index),
                                                 std::to_string(b.count),
                                                 csv::format_double(b.mean_x),
                                                 csv::format_double(b.mean_y)});
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  csv::write_row(out, std::vector<std::string>{"bandwidth", "auc", "mean_gap"});
  for (const auto& r : rows) {
    csv::write_row(out, std::vector<std::string>{csv::format_double(r.bandwidth),
                                                 csv::format_double(r.auc),
                                                 csv::format_double(r.mean_gap)});
  }
}

void write_labels_csv(std::ostream& out, std::span<const std::uint64_t> query_ids,
                      std::span<const std::string> labels) {
  require(query_ids.size() == labels.size(), ErrorCode::kInvalidArgument,
          "label and id counts differ");
  csv::write_row(out, std::vector<std::string>{"query_id", "label"});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    csv::write_row(out, std::vector<std::string>{std::to_string(query_ids[i]), labels[i]});
  }
}

}  // namespace kdprobe
