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

#include "config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "kdprobe/error.hpp"

namespace kdprobe::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) {
      fail(ErrorCode::kSchemaViolation, "unknown config key '" + where + key + "'");
    }
  }
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kSchemaViolation, "config key '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& j, const std::string& key) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    fail(ErrorCode::kSchemaViolation, "config key '" + key + "' must be a nonnegative integer");
  }
  return j.get<std::size_t>();
}

fs::path resolve(const json& j, const std::string& key, const fs::path& base) {
  fs::path p = get_as<std::string>(j, key);
  return p.is_absolute() || base.empty() ? p : base / p;
}

void parse_paths(const json& j, const fs::path& base, Paths& p) {
  reject_unknown(j, {"input", "corpus", "queries", "neighbors", "kde", "metrics", "labels"},
                 "paths.");
  const std::pair<const char*, std::optional<fs::path>*> slots[] = {
      {"input", &p.input},         {"corpus", &p.corpus},   {"queries", &p.queries},
      {"neighbors", &p.neighbors}, {"kde", &p.kde},         {"metrics", &p.metrics},
      {"labels", &p.labels}};
  for (const auto& [name, slot] : slots) {
    if (j.contains(name)) *slot = resolve(j[name], std::string("paths.") + name, base);
  }
}

void parse_segmentation(const json& j, SegmentationConfig& s) {
  reject_unknown(j, {"window_len", "stride", "emit_trailing", "tokenizer"}, "segmentation.");
  if (j.contains("window_len")) s.window_len = get_count(j["window_len"], "segmentation.window_len");
  if (j.contains("stride")) s.stride = get_count(j["stride"], "segmentation.stride");
  if (j.contains("emit_trailing")) {
    s.emit_trailing = get_as<bool>(j["emit_trailing"], "segmentation.emit_trailing");
  }
  if (j.contains("tokenizer")) {
    const auto t = get_as<std::string>(j["tokenizer"], "segmentation.tokenizer");
    if (t == "whitespace_runs") {
      s.tokenizer = TokenizerMode::kWhitespaceRuns;
    } else if (t == "single_space") {
      s.tokenizer = TokenizerMode::kSingleSpace;
    } else {
      fail(ErrorCode::kSchemaViolation, "unknown tokenizer '" + t + "'");
    }
  }
}

void parse_embedder(const json& j, EmbedderSpec& e) {
  reject_unknown(j,
                 {"kind", "dim", "endpoint", "batch_size", "max_retries", "max_in_flight",
                  "timeout_seconds"},
                 "embedder.");
  if (j.contains("kind")) {
    const auto k = get_as<std::string>(j["kind"], "embedder.kind");
    if (k == "toy_hash") {
      e.kind = EmbedderKind::kToyHash;
    } else if (k == "external") {
      e.kind = EmbedderKind::kExternalService;
    } else {
      fail(ErrorCode::kSchemaViolation, "unknown embedder kind '" + k + "'");
    }
  }
  if (j.contains("dim")) e.dim = get_count(j["dim"], "embedder.dim");
  if (j.contains("endpoint")) e.endpoint = get_as<std::string>(j["endpoint"], "embedder.endpoint");
  if (j.contains("batch_size")) e.batch_size = get_count(j["batch_size"], "embedder.batch_size");
  if (j.contains("max_retries")) {
    e.max_retries = static_cast<int>(get_count(j["max_retries"], "embedder.max_retries"));
  }
  if (j.contains("max_in_flight")) {
    e.max_in_flight = static_cast<int>(get_count(j["max_in_flight"], "embedder.max_in_flight"));
  }
  if (j.contains("timeout_seconds")) {
    e.timeout_seconds =
        static_cast<int>(get_count(j["timeout_seconds"], "embedder.timeout_seconds"));
  }
}

void parse_analysis(const json& j, AnalysisOptions& a) {
  reject_unknown(j, {"n_bins", "length_range", "ppl_caps", "bandwidths", "density_column"},
                 "analysis.");
  if (j.contains("n_bins")) a.n_bins = get_count(j["n_bins"], "analysis.n_bins");
  if (j.contains("length_range")) {
    const auto r = get_as<std::vector<std::int64_t>>(j["length_range"], "analysis.length_range");
    require(r.size() == 2, ErrorCode::kSchemaViolation,
            "analysis.length_range must be [lo, hi]");
    a.length_range = LengthRange{r[0], r[1]};
  }
  if (j.contains("ppl_caps")) {
    a.ppl_caps = get_as<std::map<std::string, double>>(j["ppl_caps"], "analysis.ppl_caps");
  }
  if (j.contains("bandwidths")) {
    a.bandwidths = get_as<std::vector<double>>(j["bandwidths"], "analysis.bandwidths");
  }
  if (j.contains("density_column")) {
    a.density_column = get_as<std::string>(j["density_column"], "analysis.density_column");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kSchemaViolation, std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::kSchemaViolation, "config must be a JSON object");
  reject_unknown(j,
                 {"paths", "segmentation", "embedder", "kernel", "k", "m1", "m2", "seed",
                  "exact_kde", "analysis", "synth", "out_dir", "output", "threads"},
                 "");
  RunConfig cfg;
  if (j.contains("paths")) parse_paths(j["paths"], base_dir, cfg.paths);
  if (j.contains("segmentation")) parse_segmentation(j["segmentation"], cfg.segmentation);
  if (j.contains("embedder")) parse_embedder(j["embedder"], cfg.embedder);
  if (j.contains("kernel")) {
    const auto& kj = j["kernel"];
    reject_unknown(kj, {"family", "bandwidth"}, "kernel.");
    if (kj.contains("family")) {
      cfg.kernel.family = parse_kernel_family(get_as<std::string>(kj["family"], "kernel.family"));
    }
    if (kj.contains("bandwidth")) {
      cfg.kernel.bandwidth = get_as<double>(kj["bandwidth"], "kernel.bandwidth");
    }
  }
  if (j.contains("k")) cfg.k = get_count(j["k"], "k");
  if (j.contains("m1")) cfg.m1 = get_count(j["m1"], "m1");
  if (j.contains("m2")) cfg.m2 = get_count(j["m2"], "m2");
  if (j.contains("seed")) cfg.seed = get_count(j["seed"], "seed");
  if (j.contains("exact_kde")) cfg.exact_kde = get_as<bool>(j["exact_kde"], "exact_kde");
  if (j.contains("analysis")) parse_analysis(j["analysis"], cfg.analysis);
  if (j.contains("synth")) {
    auto s = j["synth"];
    // The run seed applies to the experiment unless the block pins its own.
    if (cfg.seed && !s.contains("seed")) s["seed"] = *cfg.seed;
    cfg.synth = synth_config_from_json(s.dump());
  }
  if (j.contains("out_dir")) cfg.out_dir = resolve(j["out_dir"], "out_dir", base_dir);
  if (j.contains("output")) cfg.output = get_as<std::string>(j["output"], "output");
  if (j.contains("threads")) cfg.threads = static_cast<int>(get_count(j["threads"], "threads"));
  return cfg;
}

RunConfig load_run_config(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kMissingInput,
          "cannot open config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), file.parent_path());
}

std::size_t resolve_k(const RunConfig& cfg, std::size_t n, std::vector<std::string>* warnings) {
  if (cfg.k) return *cfg.k;
  const std::size_t k = std::min(kDefaultK, std::max<std::size_t>(1, n / 10));
  if (k != kDefaultK && warnings) {
    warnings->push_back("k scaled from " + std::to_string(kDefaultK) + " to " +
                        std::to_string(k) + " for a corpus of " + std::to_string(n));
  }
  return k;
}

ResolvedDecomposition resolve_decomposition(const RunConfig& cfg, std::size_t n) {
  ResolvedDecomposition out;
  auto& p = out.params;
  p.seed = cfg.seed_or_default();
  p.k = resolve_k(cfg, n, &out.warnings);
  if (cfg.m1) {
    p.m1 = *cfg.m1;
  } else {
    p.m1 = std::min(kDefaultM1, n / 2);
    if (p.m1 != kDefaultM1) {
      out.warnings.push_back("m1 scaled from " + std::to_string(kDefaultM1) + " to " +
                             std::to_string(p.m1) + " for a corpus of " + std::to_string(n));
    }
  }
  if (cfg.m2) {
    p.m2 = *cfg.m2;
  } else {
    p.m2 = std::min(kDefaultM2, p.m1 > p.k ? p.m1 - p.k : 0);
    if (p.m2 != kDefaultM2) {
      out.warnings.push_back("m2 scaled from " + std::to_string(kDefaultM2) + " to " +
                             std::to_string(p.m2) + " (m1=" + std::to_string(p.m1) +
                             ", k=" + std::to_string(p.k) + ")");
    }
  }
  return out;
}

}  // namespace kdprobe::cli
