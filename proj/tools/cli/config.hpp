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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kdprobe/corpus.hpp"
#include "kdprobe/embed.hpp"
#include "kdprobe/kde.hpp"
#include "kdprobe/synthlab.hpp"

namespace kdprobe::cli {

// Pipeline defaults at pretraining scale. Values left unset in the config and
// on the command line are shrunk to fit small corpora; explicit values are
// validated as given.
inline constexpr std::size_t kDefaultK = 1000;
inline constexpr std::size_t kDefaultM1 = 1'000'000;
inline constexpr std::size_t kDefaultM2 = 10'000;

struct Paths {
  std::optional<std::filesystem::path> input;      // documents or texts JSONL
  std::optional<std::filesystem::path> corpus;     // .lmd3
  std::optional<std::filesystem::path> queries;    // .lmd3
  std::optional<std::filesystem::path> neighbors;  // neighbors JSONL
  std::optional<std::filesystem::path> kde;        // kde CSV
  std::optional<std::filesystem::path> metrics;    // metrics CSV
  std::optional<std::filesystem::path> labels;     // query_id,leaked CSV
};

struct AnalysisOptions {
  std::size_t n_bins = 20;
  std::optional<LengthRange> length_range;
  std::map<std::string, double> ppl_caps;
  std::vector<double> bandwidths{0.1, 0.2, 0.5, 1.0};
  std::string density_column = "z_local";
};

struct RunConfig {
  Paths paths;
  SegmentationConfig segmentation;
  EmbedderSpec embedder;
  KernelSpec kernel{KernelFamily::kGaussian, 0.5};
  std::optional<std::size_t> k;
  std::optional<std::size_t> m1;
  std::optional<std::size_t> m2;
  std::optional<std::uint64_t> seed;
  bool exact_kde = false;
  AnalysisOptions analysis;
  std::optional<SynthConfig> synth;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::string> output;  // artifact file name inside out_dir
  std::optional<int> threads;

  std::uint64_t seed_or_default() const { return seed.value_or(0); }
};

// Parses a config document. Relative paths resolve against `base_dir`.
// Unknown keys are schema violations.
RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& file);

struct ResolvedDecomposition {
  DecomposedParams params;
  std::vector<std::string> warnings;
};

// Fills unset k/m1/m2 for a corpus of n rows:
//   k  <- min(1000, max(1, n/10)), m1 <- min(1e6, n/2), m2 <- min(1e4, m1 - k).
// A warning is produced for every value that differs from its default.
ResolvedDecomposition resolve_decomposition(const RunConfig& cfg, std::size_t n);

// k for the index stage: explicit value, else the scaled default above.
std::size_t resolve_k(const RunConfig& cfg, std::size_t n, std::vector<std::string>* warnings);

}  // namespace kdprobe::cli
