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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kdprobe/matrix.hpp"

namespace kdprobe {

enum class EmbedderKind { kToyHash, kExternalService };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::kToyHash;
  std::size_t dim = 64;
  std::optional<std::string> endpoint;  // http://host:port/path
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;               // toy-hash only
  int max_retries = 3;
  int max_in_flight = 4;
  int timeout_seconds = 30;

  void validate() const;
};

// Hashed bag of whitespace tokens: each token adds +-1 to one bucket chosen by
// a seeded 64-bit hash, then the sum is L2-normalized. An all-zero sum maps to
// e_0.
std::vector<float> toy_embed(std::string_view text, std::size_t dim,
                             std::uint64_t seed);

// Dot product of two unit vectors. Throws on a length mismatch.
double cosine_sim(std::span<const float> x, std::span<const float> y);

// Row i embeds texts[i]; rows are normalized regardless of source.
//
// External service protocol: POST {"texts": [...]} to the endpoint, expect
// {"vectors": [[...], ...]} with one dim-length vector per text. At most
// max_in_flight requests run at once. Transport failures and 5xx responses
// are retried up to max_retries times with exponential backoff from 50 ms;
// 4xx responses are not retried. Any batch that still fails raises kService
// listing the affected input indices.
EmbeddingMatrix embed_batch(const std::vector<std::string>& texts,
                            const EmbedderSpec& spec);

}  // namespace kdprobe
