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

#include "kdprobe/embed.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "distance.hpp"
#include "kdprobe/corpus.hpp"
#include "kdprobe/error.hpp"

namespace kdprobe {

using nlohmann::json;

void EmbedderSpec::validate() const {
  require(dim >= 2, ErrorCode::kInvalidArgument, "embedding dim must be at least 2");
  require(batch_size > 0, ErrorCode::kInvalidArgument, "batch_size must be positive");
  require(max_in_flight > 0, ErrorCode::kInvalidArgument, "max_in_flight must be positive");
  require(max_retries >= 0, ErrorCode::kInvalidArgument, "max_retries must be >= 0");
  if (kind == EmbedderKind::kToyHash) {
    require(!endpoint.has_value(), ErrorCode::kParameterContradiction,
            "toy-hash embedder takes no endpoint");
  } else {
    require(endpoint.has_value() && !endpoint->empty(), ErrorCode::kParameterContradiction,
            "external-service embedder requires an endpoint");
  }
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<float> normalized(std::span<const double> acc) {
  double sq = 0.0;
  for (double v : acc) sq += v * v;
  std::vector<float> out(acc.size(), 0.0f);
  if (sq == 0.0) {
    out[0] = 1.0f;
    return out;
  }
  const double n = std::sqrt(sq);
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / n);
  return out;
}

}  // namespace

std::vector<float> toy_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  require(dim >= 2, ErrorCode::kInvalidArgument, "embedding dim must be at least 2");
  std::vector<double> acc(dim, 0.0);
  for (auto tok : tokenize(text, TokenizerMode::kWhitespaceRuns)) {
    const std::uint64_t h = mix64(fnv1a64(tok) ^ mix64(seed));
    acc[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  return normalized(acc);
}

double cosine_sim(std::span<const float> x, std::span<const float> y) {
  require(x.size() == y.size(), ErrorCode::kInvalidArgument,
          "cosine_sim dimension mismatch: " + std::to_string(x.size()) + " vs " +
              std::to_string(y.size()));
  // Divide by the actual norms: float storage leaves |x| within ~1e-7 of 1,
  // and this keeps cos(x, x) == 1 and cos(x, -x) == -1 exactly.
  const double xy = detail::dot_f32_f64(x.data(), y.data(), x.size());
  const double xx = detail::dot_f32_f64(x.data(), x.data(), x.size());
  const double yy = detail::dot_f32_f64(y.data(), y.data(), y.size());
  if (xx == 0.0 || yy == 0.0) return 0.0;
  return std::clamp(xy / std::sqrt(xx * yy), -1.0, 1.0);
}

namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  require(scheme != std::string::npos, ErrorCode::kInvalidArgument,
          "endpoint must be an absolute URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string describe_indices(const std::vector<std::size_t>& idx) {
  std::ostringstream os;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && idx[j + 1] == idx[j] + 1) ++j;
    if (i) os << ',';
    os << idx[i];
    if (j > i) os << '-' << idx[j];
    i = j + 1;
  }
  return os.str();
}

// One POST; returns vectors or an error string. `retryable` is cleared for
// client errors (4xx), which a retry cannot fix.
bool post_batch(httplib::Client& client, const std::string& path,
                std::span<const std::string> texts, std::size_t dim,
                std::vector<std::vector<float>>& out, std::string& err, bool& retryable) {
  retryable = true;
  json body;
  body["texts"] = texts;
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    err = "transport: " + httplib::to_string(res.error());
    return false;
  }
  if (res->status != 200) {
    err = "http status " + std::to_string(res->status);
    retryable = res->status < 400 || res->status >= 500;
    return false;
  }
  try {
    const json j = json::parse(res->body);
    const auto& vecs = j.at("vectors");
    if (!vecs.is_array() || vecs.size() != texts.size()) {
      err = "response has wrong vector count";
      return false;
    }
    out.clear();
    for (const auto& v : vecs) {
      auto row = v.get<std::vector<float>>();
      if (row.size() != dim) {
        err = "response vector has dim " + std::to_string(row.size());
        return false;
      }
      out.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    err = std::string("bad response body: ") + e.what();
    return false;
  }
  return true;
}

EmbeddingMatrix embed_external(const std::vector<std::string>& texts,
                               const EmbedderSpec& spec) {
  const Endpoint ep = split_endpoint(*spec.endpoint);
  const std::size_t n_batches = (texts.size() + spec.batch_size - 1) / spec.batch_size;
  std::vector<float> data(texts.size() * spec.dim, 0.0f);
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<std::size_t> failed;
  std::string last_error;

  auto worker = [&] {
    httplib::Client client(ep.scheme_host_port);
    client.set_connection_timeout(spec.timeout_seconds, 0);
    client.set_read_timeout(spec.timeout_seconds, 0);
    client.set_write_timeout(spec.timeout_seconds, 0);
    for (std::size_t b = next++; b < n_batches; b = next++) {
      const std::size_t lo = b * spec.batch_size;
      const std::size_t hi = std::min(texts.size(), lo + spec.batch_size);
      std::span<const std::string> batch(texts.data() + lo, hi - lo);
      std::vector<std::vector<float>> vecs;
      std::string err;
      bool ok = false;
      bool retryable = true;
      for (int attempt = 0; attempt <= spec.max_retries && !ok && retryable; ++attempt) {
        if (attempt > 0) {
          std::this_thread::sleep_for(std::chrono::milliseconds(50 << std::min(attempt - 1, 6)));
        }
        ok = post_batch(client, ep.path, batch, spec.dim, vecs, err, retryable);
      }
      if (!ok) {
        std::lock_guard lock(mu);
        for (std::size_t i = lo; i < hi; ++i) failed.push_back(i);
        last_error = err;
        continue;
      }
      for (std::size_t i = 0; i < vecs.size(); ++i) {
        std::copy(vecs[i].begin(), vecs[i].end(), data.begin() + (lo + i) * spec.dim);
      }
    }
  };

  const auto n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(spec.max_in_flight), n_batches);
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  pool.clear();

  if (!failed.empty()) {
    std::sort(failed.begin(), failed.end());
    fail(ErrorCode::kService, "embedding service " + *spec.endpoint + " failed for indices [" +
                                  describe_indices(failed) + "]: " + last_error);
  }
  EmbeddingMatrix m(spec.dim, std::move(data));
  m.normalize_rows();
  return m;
}

}  // namespace

EmbeddingMatrix embed_batch(const std::vector<std::string>& texts,
                            const EmbedderSpec& spec) {
  spec.validate();
  if (spec.kind == EmbedderKind::kExternalService) return embed_external(texts, spec);
  std::vector<float> data;
  data.reserve(texts.size() * spec.dim);
  for (const auto& t : texts) {
    const auto v = toy_embed(t, spec.dim, spec.seed);
    data.insert(data.end(), v.begin(), v.end());
  }
  return EmbeddingMatrix(spec.dim, std::move(data));
}

}  // namespace kdprobe
