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

#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <json.hpp>
#include <optional>
#include <ostream>

#include "commands.hpp"
#include "config.hpp"
#include "kdprobe/parallel.hpp"

namespace kdprobe::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

// Command-line values. Anything set here wins over the config file.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  std::optional<std::string> output;

  std::optional<std::string> input, corpus, queries, neighbors, kde, metrics, labels;

  std::optional<std::size_t> window_len, stride;
  bool no_trailing = false;
  std::optional<std::string> tokenizer;

  std::optional<std::string> embedder;
  std::optional<std::size_t> dim, batch_size;
  std::optional<std::string> endpoint;

  std::optional<std::size_t> k, m1, m2;
  std::optional<std::string> kernel;
  std::optional<double> bandwidth;
  bool exact = false;

  std::optional<std::size_t> bins;
  std::optional<std::string> density_column;
};

void add_common(CLI::App* sub, Overrides& o, bool single_output) {
  sub->add_option("--config", o.config, "JSON run config; flags override its values");
  sub->add_option("--seed", o.seed, "Run seed");
  sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out-dir", o.out_dir, "Directory receiving artifacts and manifest");
  if (single_output) sub->add_option("--output", o.output, "Artifact file name inside --out-dir");
}

void apply(const Overrides& o, RunConfig& cfg) {
  auto set_path = [](const std::optional<std::string>& v, std::optional<fs::path>& slot) {
    if (v) slot = fs::path(*v);
  };
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.out_dir) cfg.out_dir = fs::path(*o.out_dir);
  if (o.output) cfg.output = *o.output;
  set_path(o.input, cfg.paths.input);
  set_path(o.corpus, cfg.paths.corpus);
  set_path(o.queries, cfg.paths.queries);
  set_path(o.neighbors, cfg.paths.neighbors);
  set_path(o.kde, cfg.paths.kde);
  set_path(o.metrics, cfg.paths.metrics);
  set_path(o.labels, cfg.paths.labels);

  if (o.window_len) cfg.segmentation.window_len = *o.window_len;
  if (o.stride) cfg.segmentation.stride = *o.stride;
  if (o.no_trailing) cfg.segmentation.emit_trailing = false;
  if (o.tokenizer) {
    cfg.segmentation.tokenizer = *o.tokenizer == "single_space" ? TokenizerMode::kSingleSpace
                                                                : TokenizerMode::kWhitespaceRuns;
  }

  if (o.embedder) {
    cfg.embedder.kind = *o.embedder == "external" ? EmbedderKind::kExternalService
                                                  : EmbedderKind::kToyHash;
  }
  if (o.dim) cfg.embedder.dim = *o.dim;
  if (o.batch_size) cfg.embedder.batch_size = *o.batch_size;
  if (cfg.embedder.kind == EmbedderKind::kExternalService) {
    if (const char* env = std::getenv(kEndpointEnv); env && *env) cfg.embedder.endpoint = env;
  }
  if (o.endpoint) cfg.embedder.endpoint = *o.endpoint;

  if (o.k) cfg.k = *o.k;
  if (o.m1) cfg.m1 = *o.m1;
  if (o.m2) cfg.m2 = *o.m2;
  if (o.kernel) cfg.kernel.family = parse_kernel_family(*o.kernel);
  if (o.bandwidth) cfg.kernel.bandwidth = *o.bandwidth;
  if (o.exact) cfg.exact_kde = true;

  if (o.bins) cfg.analysis.n_bins = *o.bins;
  if (o.density_column) cfg.analysis.density_column = *o.density_column;
}

void error_line(std::ostream& err, std::string_view name, int code, const std::string& msg) {
  err << nlohmann::ordered_json{{"error", name}, {"exit_code", code}, {"message", msg}}.dump()
      << '\n';
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return kExitUsage;
    case ErrorCode::kMissingInput: return kExitMissingInput;
    case ErrorCode::kSchemaViolation: return kExitSchema;
    case ErrorCode::kParameterContradiction: return kExitContradiction;
    case ErrorCode::kCorruptData: return kExitCorrupt;
    case ErrorCode::kIo: return kExitIo;
    case ErrorCode::kService: return kExitService;
    case ErrorCode::kBusy: return kExitBusy;
  }
  return kExitInternal;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kdprobe: density-based leakage probing for embedding corpora", "kdprobe"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Overrides o;

  auto* segment = app.add_subcommand("segment", "Split documents into overlapping windows");
  add_common(segment, o, true);
  segment->add_option("--input", o.input, "Documents JSONL ({\"id\",\"text\"} per line)");
  segment->add_option("--window-len", o.window_len, "Tokens per window");
  segment->add_option("--stride", o.stride, "Tokens between window starts");
  segment->add_flag("--no-trailing", o.no_trailing, "Drop the final short window");
  segment->add_option("--tokenizer", o.tokenizer, "whitespace_runs or single_space")
      ->check(CLI::IsMember({"whitespace_runs", "single_space"}));

  auto* embed = app.add_subcommand("embed", "Embed segment or query texts");
  add_common(embed, o, true);
  embed->add_option("--input", o.input, "Texts JSONL (segments, or {\"id\",\"text\"} queries)");
  embed->add_option("--embedder", o.embedder, "toy_hash or external")
      ->check(CLI::IsMember({"toy_hash", "external"}));
  embed->add_option("--dim", o.dim, "Embedding dimension");
  embed->add_option("--batch-size", o.batch_size, "Texts per service request");
  embed->add_option("--endpoint", o.endpoint, std::string("Service URL; overrides ") + kEndpointEnv);

  auto* index = app.add_subcommand("index", "Exact k-nearest-neighbor search");
  add_common(index, o, true);
  index->add_option("--corpus", o.corpus, "Corpus matrix (.lmd3)");
  index->add_option("--queries", o.queries, "Query matrix (.lmd3)");
  index->add_option("-k,--k", o.k, "Neighbors per query");

  auto* kde = app.add_subcommand("kde", "Decomposed kernel density per query");
  add_common(kde, o, true);
  kde->add_option("--corpus", o.corpus, "Corpus matrix (.lmd3)");
  kde->add_option("--queries", o.queries, "Query matrix (.lmd3)");
  kde->add_option("--neighbors", o.neighbors, "Precomputed neighbors JSONL");
  kde->add_option("-k,--k", o.k, "Exact neighbors in the local part");
  kde->add_option("--m1", o.m1, "Global pre-sample size");
  kde->add_option("--m2", o.m2, "Per-query random sample size");
  kde->add_option("--kernel", o.kernel, "gaussian or exponential")
      ->check(CLI::IsMember({"gaussian", "exponential"}));
  kde->add_option("--bandwidth", o.bandwidth, "Kernel bandwidth h");
  kde->add_flag("--exact", o.exact, "Also write the exact KDE per query");

  auto* analyze = app.add_subcommand("analyze", "Join densities with metrics and summarize");
  add_common(analyze, o, true);
  analyze->add_option("--kde", o.kde, "KDE CSV from the kde stage");
  analyze->add_option("--metrics", o.metrics, "Per-query metrics CSV");
  analyze->add_option("--labels", o.labels, "query_id,leaked CSV");
  analyze->add_option("--corpus", o.corpus, "Corpus matrix for the bandwidth sweep");
  analyze->add_option("--queries", o.queries, "Query matrix for the bandwidth sweep");
  analyze->add_option("-k,--k", o.k, "Neighbors for the bandwidth sweep");
  analyze->add_option("--kernel", o.kernel, "Kernel family for the sweep")
      ->check(CLI::IsMember({"gaussian", "exponential"}));
  analyze->add_option("--bins", o.bins, "Equal-mass bins");
  analyze->add_option("--density-column", o.density_column, "z_local, z_random or z_combined")
      ->check(CLI::IsMember({"z_local", "z_random", "z_combined"}));

  auto* synth = app.add_subcommand("synth", "Run the synthetic leakage experiment");
  add_common(synth, o, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    error_line(err, "usage", kExitUsage, e.what());
    return kExitUsage;
  }
  // Subcommand help is raised as CallForHelp from the parse above; nothing to
  // do here when it was handled.

  try {
    RunConfig cfg = o.config ? load_run_config(*o.config) : RunConfig{};
    apply(o, cfg);
    if (cfg.threads) set_num_threads(*cfg.threads);
    if (segment->parsed()) cmd_segment(cfg, out);
    if (embed->parsed()) cmd_embed(cfg, out);
    if (index->parsed()) cmd_index(cfg, out);
    if (kde->parsed()) cmd_kde(cfg, out);
    if (analyze->parsed()) cmd_analyze(cfg, out);
    if (synth->parsed()) cmd_synth(cfg, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    error_line(err, error_code_name(e.code()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    error_line(err, "internal", kExitInternal, e.what());
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace kdprobe::cli
