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

#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_map>

#include "kdprobe/analysis.hpp"
#include "kdprobe/csv.hpp"
#include "kdprobe/error.hpp"
#include "kdprobe/knn.hpp"
#include "kdprobe/synthlab.hpp"
#include "provenance.hpp"

namespace kdprobe::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

fs::path prepare_out_dir(const RunConfig& cfg) {
  const fs::path dir = cfg.out_dir.value_or(fs::path("."));
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCode::kIo,
          "cannot create output directory " + dir.string());
  return dir;
}

const fs::path& need(const std::optional<fs::path>& p, const char* what) {
  require(p.has_value(), ErrorCode::kMissingInput, std::string("no ") + what + " path given");
  require(fs::is_regular_file(*p), ErrorCode::kMissingInput,
          std::string(what) + " not found: " + p->string());
  return *p;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kMissingInput, "cannot open " + p.string());
  return in;
}

std::string output_name(const RunConfig& cfg, const char* fallback) {
  const std::string name = cfg.output.value_or(fallback);
  require(!name.empty() && fs::path(name).filename() == fs::path(name), ErrorCode::kInvalidArgument,
          "--output must be a plain file name, got '" + name + "'");
  return name;
}

fs::path manifest_name(const std::string& artifact) {
  return fs::path(artifact).stem().string() + ".manifest.json";
}

void finish(Manifest& m, const fs::path& dir, const std::string& artifact, std::ostream& log) {
  for (const auto& w : m.warnings()) log << ojson{{"warning", w}}.dump() << '\n';
  write_file_atomic(dir / manifest_name(artifact),
                    [&](std::ostream& o) { o << m.to_json(); });
}

ojson kernel_json(const KernelSpec& k) {
  return {{"family", kernel_family_name(k.family)}, {"bandwidth", k.bandwidth}};
}

// Texts to embed: segment records carry segment_id, query records carry id.
struct TextRecord {
  std::uint64_t id = 0;
  std::string text;
};

std::vector<TextRecord> read_text_records(std::istream& in) {
  std::vector<TextRecord> out;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::uint64_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "text record line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      fail(ErrorCode::kSchemaViolation, where + " is not valid JSON");
    }
    require(j.is_object() && j.contains("text") && j["text"].is_string(),
            ErrorCode::kSchemaViolation, where + " lacks a string \"text\"");
    const char* key = j.contains("segment_id") ? "segment_id" : "id";
    require(j.contains(key) && j[key].is_number_unsigned(), ErrorCode::kSchemaViolation,
            where + " needs an unsigned integer \"segment_id\" or \"id\"");
    TextRecord r{j[key].get<std::uint64_t>(), j["text"].get<std::string>()};
    require(seen.insert(r.id).second, ErrorCode::kSchemaViolation,
            where + " repeats id " + std::to_string(r.id));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

void cmd_segment(const RunConfig& cfg, std::ostream& log) {
  cfg.segmentation.validate();
  const auto& input = need(cfg.paths.input, "documents");
  const fs::path dir = prepare_out_dir(cfg);
  DirLock lock(dir);
  const auto name = output_name(cfg, "segments.jsonl");

  Manifest m("segment");
  m.add_input("documents", input);
  SegmentManifest counts;
  write_file_atomic(dir / name, [&](std::ostream& out) {
    auto in = open_in(input);
    counts = segment_corpus(jsonl_document_source(in), cfg.segmentation,
                            [&](const Segment& s) { write_segment_jsonl(out, s); });
  });
  m.add_artifact(dir, name);
  ojson params{{"window_len", cfg.segmentation.window_len},
               {"stride", cfg.segmentation.stride},
               {"emit_trailing", cfg.segmentation.emit_trailing},
               {"tokenizer", cfg.segmentation.tokenizer == TokenizerMode::kWhitespaceRuns
                                 ? "whitespace_runs"
                                 : "single_space"},
               {"segments", ojson::parse(manifest_to_json(counts))}};
  m.set_parameters(params.dump());
  finish(m, dir, name, log);
  log << ojson{{"stage", "segment"}, {"segments", counts.total_segments}}.dump() << '\n';
}

void cmd_embed(const RunConfig& cfg, std::ostream& log) {
  EmbedderSpec spec = cfg.embedder;
  spec.seed = cfg.seed_or_default();
  spec.validate();
  const auto& input = need(cfg.paths.input, "texts");
  const fs::path dir = prepare_out_dir(cfg);
  DirLock lock(dir);
  const auto name = output_name(cfg, "embeddings.lmd3");

  Manifest m("embed");
  m.add_input("texts", input);
  auto in = open_in(input);
  const auto records = read_text_records(in);
  require(!records.empty(), ErrorCode::kSchemaViolation, "no text records in " + input.string());
  std::vector<std::string> texts;
  std::vector<std::uint64_t> ids;
  texts.reserve(records.size());
  for (const auto& r : records) {
    texts.push_back(r.text);
    ids.push_back(r.id);
  }
  auto emb = embed_batch(texts, spec);
  emb.set_ids(std::move(ids));
  write_file_atomic(dir / name, [&](const fs::path& p) { write_matrix(emb, p); });
  m.add_artifact(dir, name);

  ojson params{{"kind", spec.kind == EmbedderKind::kToyHash ? "toy_hash" : "external"},
               {"dim", spec.dim},
               {"seed", spec.seed},
               {"rows", emb.count()}};
  // The endpoint is an operational detail; recording it would make the
  // manifest depend on where the service happens to run.
  if (spec.kind == EmbedderKind::kExternalService) params["batch_size"] = spec.batch_size;
  m.set_parameters(params.dump());
  finish(m, dir, name, log);
  log << ojson{{"stage", "embed"}, {"rows", emb.count()}, {"dim", emb.dim()}}.dump() << '\n';
}

void cmd_index(const RunConfig& cfg, std::ostream& log) {
  const auto& corpus_path = need(cfg.paths.corpus, "corpus");
  const auto& queries_path = need(cfg.paths.queries, "queries");
  const fs::path dir = prepare_out_dir(cfg);
  DirLock lock(dir);
  const auto name = output_name(cfg, "neighbors.jsonl");

  Manifest m("index");
  m.add_input("corpus", corpus_path);
  m.add_input("queries", queries_path);
  const auto corpus = read_matrix(corpus_path);
  const auto queries = read_matrix(queries_path);
  require(corpus.dim() == queries.dim(), ErrorCode::kParameterContradiction,
          "corpus dim " + std::to_string(corpus.dim()) + " differs from query dim " +
              std::to_string(queries.dim()));
  std::vector<std::string> warnings;
  const std::size_t k = resolve_k(cfg, corpus.count(), &warnings);
  for (auto& w : warnings) m.add_warning(std::move(w));
  const auto lists = batch_query(corpus, queries, k);
  write_file_atomic(dir / name, [&](std::ostream& o) { write_neighbors_jsonl(o, lists); });
  m.add_artifact(dir, name);
  m.set_parameters(ojson{{"k", k}, {"n", corpus.count()}, {"queries", queries.count()}}.dump());
  finish(m, dir, name, log);
  log << ojson{{"stage", "index"}, {"queries", lists.size()}, {"k", k}}.dump() << '\n';
}

void cmd_kde(const RunConfig& cfg, std::ostream& log) {
  cfg.kernel.validate();
  const auto& corpus_path = need(cfg.paths.corpus, "corpus");
  const auto& queries_path = need(cfg.paths.queries, "queries");
  const fs::path dir = prepare_out_dir(cfg);
  DirLock lock(dir);
  const auto name = output_name(cfg, "kde.csv");

  Manifest m("kde");
  m.add_input("corpus", corpus_path);
  m.add_input("queries", queries_path);
  const auto corpus = read_matrix(corpus_path);
  const auto queries = read_matrix(queries_path);
  require(corpus.dim() == queries.dim(), ErrorCode::kParameterContradiction,
          "corpus dim " + std::to_string(corpus.dim()) + " differs from query dim " +
              std::to_string(queries.dim()));
  auto resolved = resolve_decomposition(cfg, corpus.count());
  for (auto& w : resolved.warnings) m.add_warning(std::move(w));
  const auto& params = resolved.params;
  params.validate(corpus.count());

  std::vector<NeighborList> neighbors;
  if (cfg.paths.neighbors) {
    const auto& np = need(cfg.paths.neighbors, "neighbors");
    m.add_input("neighbors", np);
    auto in = open_in(np);
    neighbors = read_neighbors_jsonl(in);
    require(neighbors.size() == queries.count(), ErrorCode::kSchemaViolation,
            "neighbors file has " + std::to_string(neighbors.size()) + " lists for " +
                std::to_string(queries.count()) + " queries");
    for (std::size_t q = 0; q < neighbors.size(); ++q) {
      require(neighbors[q].query_id == queries.id(q), ErrorCode::kSchemaViolation,
              "neighbors file is out of order at query " + std::to_string(queries.id(q)));
    }
  }
  const auto results = decomposed_kde(corpus, queries, cfg.kernel, params, neighbors);
  write_file_atomic(dir / name, [&](std::ostream& o) { write_kde_csv(o, results); });
  m.add_artifact(dir, name);

  ojson p{{"kernel", kernel_json(cfg.kernel)}, {"k", params.k},     {"m1", params.m1},
          {"m2", params.m2},                   {"seed", params.seed}, {"n", corpus.count()},
          {"exact_kde", cfg.exact_kde}};
  if (cfg.exact_kde) {
    const auto exact = exact_kde_batch(corpus, queries, cfg.kernel);
    const auto exact_name = fs::path(name).stem().string() + ".exact.csv";
    write_file_atomic(dir / exact_name, [&](std::ostream& o) {
      csv::write_row(o, std::vector<std::string>{"query_id", "z_exact"});
      for (std::size_t q = 0; q < exact.size(); ++q) {
        csv::write_row(o, std::vector<std::string>{std::to_string(queries.id(q)),
                                                   csv::format_double(exact[q])});
      }
    });
    m.add_artifact(dir, exact_name);
  }
  m.set_parameters(p.dump());
  finish(m, dir, name, log);
  log << ojson{{"stage", "kde"}, {"queries", results.size()}, {"k", params.k},
               {"m1", params.m1}, {"m2", params.m2}}
             .dump()
      << '\n';
}

namespace {

double density_of(const KdeResult& r, const std::string& column) {
  if (column == "z_local") return r.z_local;
  if (column == "z_random") return r.z_random;
  if (column == "z_combined") return r.z_combined;
  fail(ErrorCode::kInvalidArgument, "unknown density column '" + column + "'");
}

std::unordered_map<std::uint64_t, bool> read_leak_labels(const fs::path& p) {
  auto in = open_in(p);
  const auto t = csv::read_table(in);
  const auto qc = t.column("query_id");
  const auto lc = t.column("leaked");
  std::unordered_map<std::uint64_t, bool> out;
  for (const auto& row : t.rows) {
    const auto v = csv::parse_int(row[lc]);
    require(v == 0 || v == 1, ErrorCode::kSchemaViolation, "leaked must be 0 or 1");
    require(out.emplace(csv::parse_uint(row[qc]), v == 1).second, ErrorCode::kSchemaViolation,
            "labels repeat query " + row[qc]);
  }
  return out;
}

}  // namespace

void cmd_analyze(const RunConfig& cfg, std::ostream& log) {
  const auto& a = cfg.analysis;
  const auto& kde_path = need(cfg.paths.kde, "kde");
  const fs::path dir = prepare_out_dir(cfg);
  DirLock lock(dir);
  const auto name = output_name(cfg, "analysis.json");
  density_of(KdeResult{}, a.density_column);  // validates the column name early

  Manifest m("analyze");
  m.add_input("kde", kde_path);
  std::vector<KdeResult> kde;
  {
    auto in = open_in(kde_path);
    kde = read_kde_csv(in);
  }
  ojson report;
  report["density_column"] = a.density_column;
  report["kde_rows"] = kde.size();

  if (cfg.paths.metrics) {
    const auto& mp = need(cfg.paths.metrics, "metrics");
    m.add_input("metrics", mp);
    auto in = open_in(mp);
    const auto metrics = read_metrics_csv(in);
    const LengthRange range = a.length_range.value_or(
        LengthRange{std::numeric_limits<std::int64_t>::min(),
                    std::numeric_limits<std::int64_t>::max()});
    FilterReport fr;
    const auto kept = filter_rows(metrics, range, a.ppl_caps, &fr);
    report["filter"] = {{"kept", fr.kept},
                        {"dropped_length", fr.dropped_length},
                        {"dropped_by_cap", fr.dropped_by_cap}};
    const auto joined = join_density_metrics(kde, kept);
    report["joined_rows"] = joined.rows.size();
    report["unmatched_kde"] = joined.unmatched_kde.size();
    report["unmatched_metrics"] = joined.unmatched_metrics.size();

    std::vector<std::string> names;
    for (const auto& r : kept) {
      for (const auto& [k, _] : r.metrics) names.push_back(k);
      break;
    }
    write_file_atomic(dir / "joined.csv", [&](std::ostream& o) {
      std::vector<std::string> header{"query_id", "z_local", "z_random", "z_combined"};
      header.insert(header.end(), names.begin(), names.end());
      header.push_back("length_chars");
      csv::write_row(o, header);
      for (const auto& jr : joined.rows) {
        std::vector<std::string> f{std::to_string(jr.kde.query_id),
                                   csv::format_double(jr.kde.z_local),
                                   csv::format_double(jr.kde.z_random),
                                   csv::format_double(jr.kde.z_combined)};
        for (const auto& n : names) f.push_back(csv::format_double(jr.metrics.metrics.at(n)));
        f.push_back(std::to_string(jr.metrics.length_chars));
        csv::write_row(o, f);
      }
    });
    m.add_artifact(dir, "joined.csv");

    ojson corr = ojson::object();
    for (const auto& n : names) {
      std::vector<double> xs, ys;
      std::vector<Point> pts;
      for (const auto& jr : joined.rows) {
        xs.push_back(density_of(jr.kde, a.density_column));
        ys.push_back(jr.metrics.metrics.at(n));
        pts.push_back({xs.back(), ys.back()});
      }
      if (xs.size() >= 2) {
        const auto c = correlate(xs, ys);
        corr[n] = {{"pearson", c.pearson}, {"spearman", c.spearman}, {"n", c.n}};
      }
      if (pts.size() >= a.n_bins && a.n_bins > 0) {
        const auto bins_name = "bins_" + n + ".csv";
        const auto bins = equal_mass_bins(pts, a.n_bins);
        write_file_atomic(dir / bins_name, [&](std::ostream& o) { write_bins_csv(o, bins); });
        m.add_artifact(dir, bins_name);
      } else {
        m.add_warning("too few joined rows to bin " + n + " into " + std::to_string(a.n_bins) +
                      " bins");
      }
    }
    report["correlations"] = corr;
  }

  if (cfg.paths.labels) {
    const auto& lp = need(cfg.paths.labels, "labels");
    m.add_input("labels", lp);
    const auto labels = read_leak_labels(lp);
    std::vector<double> leaked, clean;
    for (const auto& r : kde) {
      auto it = labels.find(r.query_id);
      if (it == labels.end()) continue;
      (it->second ? leaked : clean).push_back(density_of(r, a.density_column));
    }
    if (!leaked.empty() && !clean.empty()) {
      report["auc"] = separability_auc(leaked, clean);
      report["auc_counts"] = {{"leaked", leaked.size()}, {"clean", clean.size()}};
    } else {
      m.add_warning("labels do not cover both groups; AUC skipped");
    }

    if (cfg.paths.corpus && cfg.paths.queries) {
      const auto& cp = need(cfg.paths.corpus, "corpus");
      const auto& qp = need(cfg.paths.queries, "queries");
      m.add_input("corpus", cp);
      m.add_input("queries", qp);
      const auto corpus = read_matrix(cp);
      const auto queries = read_matrix(qp);
      std::vector<std::size_t> lrows, crows;
      for (std::size_t q = 0; q < queries.count(); ++q) {
        auto it = labels.find(queries.id(q));
        if (it != labels.end()) (it->second ? lrows : crows).push_back(q);
      }
      require(!lrows.empty() && !crows.empty(), ErrorCode::kSchemaViolation,
              "bandwidth sweep needs labeled leaked and clean queries");
      std::vector<std::string> warnings;
      const std::size_t k = resolve_k(cfg, corpus.count(), &warnings);
      for (auto& w : warnings) m.add_warning(std::move(w));
      const auto sweep = bandwidth_sweep(corpus, queries.select(lrows), queries.select(crows),
                                         cfg.kernel.family, a.bandwidths, k);
      write_file_atomic(dir / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, sweep); });
      m.add_artifact(dir, "sweep.csv");
      report["sweep_k"] = k;
    }
  }

  write_file_atomic(dir / name, [&](std::ostream& o) { o << report.dump(2) << '\n'; });
  m.add_artifact(dir, name);
  ojson params{{"density_column", a.density_column},
               {"n_bins", a.n_bins},
               {"ppl_caps", a.ppl_caps},
               {"bandwidths", a.bandwidths},
               {"kernel_family", kernel_family_name(cfg.kernel.family)}};
  if (a.length_range) params["length_range"] = {a.length_range->lo, a.length_range->hi};
  m.set_parameters(params.dump());
  finish(m, dir, name, log);
  log << ojson{{"stage", "analyze"}, {"kde_rows", kde.size()}}.dump() << '\n';
}

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
  SynthConfig sc = cfg.synth.value_or(SynthConfig{});
  if (cfg.seed) sc.seed = *cfg.seed;
  sc.validate();
  const fs::path dir = prepare_out_dir(cfg);
  DirLock lock(dir);

  const auto report = run_leakage_experiment(sc);
  write_experiment_report(report, dir);

  Manifest m("synth");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir);
    const auto top = rel.begin()->string();
    static const std::set<std::string> kReportFiles{"config.json", "corpus.lmd3", "queries.lmd3",
                                                    "summary.json", "cells"};
    if (kReportFiles.count(top)) files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) m.add_artifact(dir, f);
  m.set_parameters(synth_config_to_json(sc));
  for (const auto& w : m.warnings()) log << ojson{{"warning", w}}.dump() << '\n';
  write_file_atomic(dir / "manifest.json", [&](std::ostream& o) { o << m.to_json(); });

  ojson cells = ojson::array();
  for (const auto& c : report.cells) cells.push_back({{"cell", c.name}, {"auc", c.auc}});
  log << ojson{{"stage", "synth"}, {"cells", cells}}.dump() << '\n';
}

}  // namespace kdprobe::cli
