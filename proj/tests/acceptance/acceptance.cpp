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

// Acceptance suite: prints one PASS/FAIL line per numbered criterion and
// exits nonzero if any criterion fails. `--only N[,M...]` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "cli.hpp"
#include "kdprobe/kdprobe.hpp"
#include "support/oracles.hpp"

namespace kdprobe::acceptance {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

KernelSpec spec_of(bool gaussian, double h) {
  return {gaussian ? KernelFamily::kGaussian : KernelFamily::kExponential, h};
}

Result exact_kde_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  const double hs[] = {0.1, 0.5, 1.0};
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 100 + rng() % 4901;
    const std::size_t d = 2 + rng() % 63;
    const bool gaussian = inst % 2 == 0;
    const double h = hs[(inst / 2) % 3];
    const auto corpus = oracle::random_matrix(n, d, rng);
    auto queries = oracle::random_matrix(16, d, rng);
    queries.append(corpus.row(rng() % n));  // one query sits on a corpus point
    const auto got = exact_kde_batch(corpus, queries, spec_of(gaussian, h));
    for (std::size_t q = 0; q < queries.count(); ++q) {
      worst = std::max(worst, oracle::rel_err(got[q], oracle::naive_kde(corpus, queries.row(q),
                                                                         gaussian, h)));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 60.0,
          fmt("50 instances, max rel err %.3g (tol 1e-9), %.1f s (limit 60 s)", worst, secs)};
}

Result decomposition_degeneracy() {
  std::mt19937_64 rng(102);
  const auto corpus = oracle::random_matrix(200, 16, rng);
  const auto queries = oracle::random_matrix(40, 16, rng);
  double worst = 0.0;
  for (bool gaussian : {true, false}) {
    for (double h : {0.1, 0.5, 1.0}) {
      const auto spec = spec_of(gaussian, h);
      // X1 = corpus, so Xnn and the 150 rows of X1 \ Xnn partition it.
      const auto res = decomposed_kde(corpus, queries, spec, {50, 200, 150, 9});
      const auto exact = exact_kde_batch(corpus, queries, spec);
      for (std::size_t q = 0; q < res.size(); ++q) {
        worst = std::max(worst, oracle::rel_err(res[q].z_combined, exact[q]));
      }
    }
  }
  // The literal m1=150 leaves fewer than m2 rows outside the neighbors, so
  // no partition exists; it must be refused with the query named.
  bool refused = false;
  std::string message;
  try {
    decomposed_kde(corpus, queries, spec_of(true, 0.5), {50, 150, 150, 9});
  } catch (const Error& e) {
    message = e.what();
    refused = e.code() == ErrorCode::kParameterContradiction &&
              message.find("query ") != std::string::npos;
  }
  return {worst <= 1e-9 && refused,
          fmt("n=200 k=50 m2=150 with m1=n: max rel err %.3g (tol 1e-9); m1=150 %s", worst,
              refused ? "refused naming the query" : "NOT refused")};
}

Result random_kde_unbiased() {
  const auto t0 = Clock::now();
  int within = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(1000 + trial);
    const auto corpus = oracle::clustered_matrix(5000, 16, 10, 0.4, rng);
    const auto q = oracle::random_unit(16, rng);
    const KernelSpec spec{KernelFamily::kGaussian, 0.5};
    const double exact = exact_kde(corpus, q, spec);
    double sum = 0.0, sq = 0.0;
    for (int s = 0; s < 1000; ++s) {
      const double z = random_kde(corpus, q, spec, 100, 7'000'000ull * trial + s).estimate;
      sum += z;
      sq += z * z;
    }
    const double mean = sum / 1000.0;
    const double var = (sq - 1000.0 * mean * mean) / 999.0;
    const double se = std::sqrt(std::max(var, 0.0) / 1000.0);
    within += std::abs(mean - exact) <= 4.0 * se;
  }
  const double secs = seconds_since(t0);
  return {within >= 99 && secs < 120.0,
          fmt("%d/100 trials within 4 SE (need 99), %.1f s (limit 120 s)", within, secs)};
}

Result convergence_in_m2() {
  std::mt19937_64 rng(104);
  const auto corpus = oracle::clustered_matrix(10000, 16, 20, 0.4, rng);
  const auto queries = oracle::clustered_matrix(100, 16, 20, 0.4, rng);
  const KernelSpec spec{KernelFamily::kGaussian, 0.5};
  const auto exact = exact_kde_batch(corpus, queries, spec);
  const auto neighbors = batch_query(corpus, queries, 100);
  std::vector<double> medians;
  for (std::size_t m2 : {10, 100, 1000}) {
    const auto res = decomposed_kde(corpus, queries, spec, {100, 5000, m2, 11}, neighbors);
    std::vector<double> errs;
    for (std::size_t q = 0; q < res.size(); ++q) {
      errs.push_back(oracle::rel_err(res[q].z_combined, exact[q]));
    }
    std::nth_element(errs.begin(), errs.begin() + 50, errs.end());
    medians.push_back(errs[50]);
  }
  const bool ok = medians[0] > medians[1] && medians[1] > medians[2];
  return {ok, fmt("median rel err m2=10: %.3g, m2=100: %.3g, m2=1000: %.3g (k=100, m1=5000)",
                  medians[0], medians[1], medians[2])};
}

Result knn_exactness() {
  std::mt19937_64 rng(105);
  std::size_t checked = 0, tied = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t d = 2 + rng() % 63;
    auto corpus = oracle::random_matrix(100 + rng() % 2000, d, rng);
    if (inst % 2 == 1) {
      // Duplicate a third of the rows, some of them twice, to force ties.
      const std::size_t base = corpus.count();
      for (std::size_t i = 0; i < base / 3; ++i) {
        const auto r = rng() % base;
        corpus.append(corpus.row(r));
        if (i % 4 == 0) corpus.append(corpus.row(r));
      }
    }
    auto queries = oracle::random_matrix(15, d, rng);
    for (int i = 0; i < 5; ++i) queries.append(corpus.row(rng() % corpus.count()));
    const std::size_t k = 1 + rng() % std::min<std::size_t>(corpus.count(), 400);
    const auto got = batch_query(corpus, queries, k);
    for (std::size_t q = 0; q < queries.count(); ++q) {
      const auto want = oracle::naive_knn(corpus, queries.row(q), k);
      if (got[q].size() != want.size()) {
        return {false, fmt("instance %d query %zu: %zu results, want %zu", inst, q,
                           got[q].size(), want.size())};
      }
      for (std::size_t i = 0; i < k; ++i) {
        if (got[q].neighbor_ids[i] != want[i].second ||
            std::abs(got[q].distances[i] - want[i].first) > 1e-9) {
          return {false, fmt("instance %d query %zu rank %zu: got (%llu, %.17g) want (%llu, %.17g)",
                             inst, q, i, (unsigned long long)got[q].neighbor_ids[i],
                             got[q].distances[i], (unsigned long long)want[i].second,
                             want[i].first)};
        }
        if (i > 0 && want[i].first == want[i - 1].first) ++tied;
        ++checked;
      }
    }
  }
  return {tied > 0, fmt("20 instances, %zu ranked neighbors identical to oracle, %zu exact ties",
                        checked, tied)};
}

// Criteria 6 to 8 share one run of the default experiment.
const ExperimentReport& default_experiment() {
  static const ExperimentReport report = run_leakage_experiment(SynthConfig{});
  return report;
}

const CellReport& cell(const ExperimentReport& r, int exact, int paras) {
  for (const auto& c : r.cells) {
    if (c.condition.exact == exact && c.condition.paraphrases == paras) return c;
  }
  throw std::runtime_error("missing cell");
}

Result leak_separability() {
  const auto t0 = Clock::now();
  const auto& r = default_experiment();
  const double secs = seconds_since(t0);
  const auto& exact = cell(r, 1, 0);
  const auto& para = cell(r, 0, 3);
  double min_exact = 1.0;
  for (const auto& c : r.cells) {
    if (c.condition.exact == 1) min_exact = std::min(min_exact, c.auc);
  }
  return {exact.auc >= 0.99 && para.auc >= 0.95 && secs < 300.0,
          fmt("exact=1 AUC %.4f (min over exact=1 cells %.4f, need 0.99); exact=0 paras=3 AUC "
              "%.4f (need 0.95); %.1f s (limit 300 s)",
              exact.auc, min_exact, para.auc, secs)};
}

Result bandwidth_gap() {
  const auto& c = cell(default_experiment(), 1, 0);
  bool ok = c.sweep.size() == 4;
  std::string gaps;
  for (std::size_t i = 0; i < c.sweep.size(); ++i) {
    gaps += fmt("%sh=%g: %.4g", i ? ", " : "", c.sweep[i].bandwidth, c.sweep[i].mean_gap);
    if (i > 0 && c.sweep[i].mean_gap > c.sweep[i - 1].mean_gap) ok = false;
  }
  return {ok, "exact=1 cell gaps " + gaps};
}

Result retrieval_recall() {
  const auto& c = cell(default_experiment(), 1, 3);
  return {c.recall_at_10 >= 0.92,
          fmt("recall@10 over {copy + 3 paraphrases} = %.4f (need 0.92), recall@4 = %.4f",
              c.recall_at_10, c.recall_at_4)};
}

Result effective_epochs_anchor() {
  std::mt19937_64 rng(109);
  bool anchor = true;
  for (int i = 0; i < 100; ++i) {
    const auto x = oracle::random_unit(2 + rng() % 200, rng);
    const std::vector<std::vector<float>> copy{x};
    anchor = anchor && effective_epochs(x, copy, 2.0) == 2.0;
  }
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 2 + rng() % 64;
    const auto x = oracle::random_unit(d, rng);
    std::vector<std::vector<float>> a, b;
    for (std::size_t j = 0, n = rng() % 5; j < n; ++j) a.push_back(oracle::random_unit(d, rng));
    for (std::size_t j = 0, n = rng() % 5; j < n; ++j) b.push_back(oracle::random_unit(d, rng));
    auto ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const double epochs = 0.5 + static_cast<double>(rng() % 8);
    worst = std::max(worst, std::abs(effective_epochs(x, ab, epochs) -
                                     effective_epochs(x, a, epochs) -
                                     effective_epochs(x, b, epochs)));
  }
  return {anchor && worst <= 1e-12,
          fmt("one exact copy at 2 epochs gives exactly 2.0: %s; additivity over 1000 sets, max "
              "deviation %.3g",
              anchor ? "yes" : "NO", worst)};
}

Result duplication_monotone() {
  std::mt19937_64 rng(110);
  int strict_needed = 0, strict_seen = 0, decreased = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t d = 2 + rng() % 32;
    const auto q = oracle::random_unit(d, rng);
    EmbeddingMatrix corpus(d);
    if (i % 10 == 0) {
      for (int j = 0; j < 20; ++j) corpus.append(q);  // every point coincides with q
    } else {
      corpus = oracle::random_matrix(10 + rng() % 500, d, rng);
    }
    const auto spec = spec_of(i % 2 == 0, i % 3 == 0 ? 0.1 : 1.0);
    const double before = exact_kde(corpus, q, spec);
    bool far_point = false;
    for (std::size_t r = 0; r < corpus.count(); ++r) {
      far_point = far_point || oracle::euclidean(corpus.row(r), q) > 1e-6;
    }
    corpus.append(q);
    const double after = exact_kde(corpus, q, spec);
    decreased += after < before;
    if (far_point) {
      ++strict_needed;
      strict_seen += after > before;
    }
  }
  return {decreased == 0 && strict_seen == strict_needed,
          fmt("100 pairs: %d decreases; strict increase in %d/%d pairs with a point beyond 1e-6",
              decreased, strict_seen, strict_needed)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == ".kdprobe.lock") continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), dir).generic_string()] =
        std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  return out;
}

Result cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "kdprobe_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::mt19937_64 rng(111);
    std::ofstream docs(root / "docs.jsonl"), queries(root / "queries.jsonl"),
        metrics(root / "metrics.csv"), labels(root / "labels.csv"), cfg(root / "run.json");
    std::vector<std::string> texts;
    for (int d = 0; d < 60; ++d) {
      std::string t;
      for (std::size_t w = 0, n = 30 + rng() % 300; w < n; ++w) t += "v" + std::to_string(rng() % 400) + " ";
      texts.push_back(t);
      docs << nlohmann::json{{"id", "d" + std::to_string(d)}, {"text", t}}.dump() << '\n';
    }
    metrics << "query_id,accuracy,query_ppl,length_chars\n";
    labels << "query_id,leaked\n";
    for (int q = 0; q < 40; ++q) {
      // Half the queries reuse a document prefix, which makes them leaked.
      const bool leaked = q % 2 == 0;
      std::string t = leaked ? texts[q].substr(0, texts[q].find(' ', 200))
                             : "fresh q" + std::to_string(q) + " v1 v2";
      queries << nlohmann::json{{"id", 100 + q}, {"text", t}}.dump() << '\n';
      metrics << 100 + q << ',' << 0.01 * static_cast<double>(rng() % 100) << ','
              << rng() % 700 << ',' << 250 + q << '\n';
      labels << 100 + q << ',' << (leaked ? 1 : 0) << '\n';
    }
    cfg << R"({"segmentation": {"window_len": 50, "stride": 40},
               "embedder": {"kind": "toy_hash", "dim": 48},
               "kernel": {"family": "gaussian", "bandwidth": 0.3},
               "analysis": {"n_bins": 5, "ppl_caps": {"query_ppl": 500}},
               "exact_kde": true,
               "synth": {"n_corpus": 3000, "n_queries": 200, "n_leaked": 40, "n_clusters": 20,
                         "k": 50, "m1": 1500, "m2": 200, "n_bins": 10,
                         "paraphrase_counts": [0, 3]}})";
  }
  const auto p = [&](const std::string& s) { return (root / s).string(); };
  const std::string out = p("out");
  const std::vector<std::vector<std::string>> stages{
      {"segment", "--input", p("docs.jsonl")},
      {"embed", "--input", p("out/segments.jsonl")},
      {"embed", "--input", p("queries.jsonl"), "--output", "queries.lmd3"},
      {"index", "--corpus", p("out/embeddings.lmd3"), "--queries", p("out/queries.lmd3")},
      {"kde", "--corpus", p("out/embeddings.lmd3"), "--queries", p("out/queries.lmd3"),
       "--neighbors", p("out/neighbors.jsonl")},
      {"analyze", "--kde", p("out/kde.csv"), "--metrics", p("metrics.csv"), "--labels",
       p("labels.csv"), "--corpus", p("out/embeddings.lmd3"), "--queries",
       p("out/queries.lmd3")},
  };
  auto run_all = [&](const std::string& threads) -> std::optional<std::string> {
    fs::remove_all(out);
    for (auto args : stages) {
      for (const char* extra : {"--config", "", "--out-dir", "", "--threads", "", "--seed", "23"}) {
        args.emplace_back(extra);
      }
      args[args.size() - 7] = p("run.json");
      args[args.size() - 5] = out;
      args[args.size() - 3] = threads;
      std::ostringstream o, e;
      if (cli::run(args, o, e) != 0) return args[0] + " failed: " + e.str();
    }
    std::vector<std::string> synth{"synth", "--config", p("run.json"), "--out-dir",
                                   p("out/synth"), "--threads", threads, "--seed", "23"};
    std::ostringstream o, e;
    if (cli::run(synth, o, e) != 0) return "synth failed: " + e.str();
    return std::nullopt;
  };
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* threads : {"1", "4", "1"}) {
    if (auto err = run_all(threads)) return {false, *err};
    runs.push_back(snapshot(out));
  }
  std::size_t differing = 0;
  std::string first_diff;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].size() != runs[0].size()) return {false, "artifact sets differ between runs"};
    for (const auto& [name, bytes] : runs[0]) {
      if (runs[r].at(name) != bytes) {
        ++differing;
        if (first_diff.empty()) first_diff = name;
      }
    }
  }
  fs::remove_all(root);
  return {differing == 0 && runs[0].size() > 20,
          fmt("%zu artifacts and manifests over 7 stages, runs at --threads 1/4/1: %zu differ%s%s",
              runs[0].size(), differing, first_diff.empty() ? "" : ", first ",
              first_diff.c_str())};
}

Result throughput() {
  const auto corpus = [] {
    std::mt19937_64 rng(112);
    std::normal_distribution<float> g;
    std::vector<float> data(1'000'000ull * 64);
    for (auto& x : data) x = g(rng);
    EmbeddingMatrix m(64, std::move(data));
    m.normalize_rows();
    return m;
  }();
  std::mt19937_64 rng(113);
  const auto queries = oracle::random_matrix(1000, 64, rng);
  auto t0 = Clock::now();
  const auto z = exact_kde_batch(corpus, queries, {KernelFamily::kGaussian, 0.5});
  const double kde_s = seconds_since(t0);
  t0 = Clock::now();
  const auto nn = batch_query(corpus, queries, 1000);
  const double knn_s = seconds_since(t0);
  const bool sane = z.size() == 1000 && nn.size() == 1000 && nn[999].size() == 1000;
  return {sane && kde_s < 120.0 && knn_s < 300.0,
          fmt("1000 queries x 1M x 64 on %d thread(s) (%u hw): exact KDE %.1f s (limit 120), "
              "kNN k=1000 %.1f s (limit 300)",
              num_threads(), std::thread::hardware_concurrency(), kde_s, knn_s)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Result()> fn;
};

}  // namespace
}  // namespace kdprobe::acceptance

int main(int argc, char** argv) {
  using namespace kdprobe::acceptance;
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    }
  }
  const std::vector<Criterion> criteria{
      {1, "exact KDE oracle equivalence", exact_kde_oracle},
      {2, "decomposition degenerates to exact KDE", decomposition_degeneracy},
      {3, "random KDE unbiasedness", random_kde_unbiased},
      {4, "approximation converges in m2", convergence_in_m2},
      {5, "kNN exactness with ties", knn_exactness},
      {6, "leak separability", leak_separability},
      {7, "bandwidth gap monotonicity", bandwidth_gap},
      {8, "retrieval recall@10", retrieval_recall},
      {9, "effective epochs anchor and additivity", effective_epochs_anchor},
      {10, "duplication monotonicity", duplication_monotone},
      {11, "CLI determinism across reruns and threads", cli_determinism},
      {12, "throughput budget", throughput},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Result r;
    try {
      r = c.fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failures += !r.pass;
    std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << r.detail << std::endl;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed"
                         : std::string("acceptance: all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
