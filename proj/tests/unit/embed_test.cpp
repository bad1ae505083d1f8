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

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <json.hpp>
#include <random>
#include <thread>

#include "kdprobe/embed.hpp"
#include "kdprobe/error.hpp"
#include "kdprobe/knn.hpp"
#include "support/oracles.hpp"

namespace kdprobe {
namespace {

TEST(ToyEmbed, Deterministic) {
  EXPECT_EQ(toy_embed("a a a", 8, 7), toy_embed("a a a", 8, 7));
  EXPECT_NE(toy_embed("a a a", 8, 7), toy_embed("a a a", 8, 8));
}

TEST(ToyEmbed, EmptyTextIsFirstBasisVector) {
  const auto v = toy_embed("", 8, 7);
  ASSERT_EQ(v.size(), 8u);
  EXPECT_EQ(v[0], 1.0f);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_EQ(v[i], 0.0f);
}

TEST(ToyEmbed, UnitNorm) {
  const auto v = toy_embed("alpha beta", 16, 3);
  EXPECT_NEAR(std::sqrt(norm_squared(v)), 1.0, 1e-6);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    std::string text;
    for (int w = 0, n = static_cast<int>(rng() % 30); w < n; ++w) {
      text += "tok" + std::to_string(rng() % 50) + " ";
    }
    EXPECT_NEAR(std::sqrt(norm_squared(toy_embed(text, 32, 9))), 1.0, 1e-6);
  }
}

TEST(ToyEmbed, WhitespaceLayoutDoesNotMatter) {
  EXPECT_EQ(toy_embed("x  y\tz", 16, 1), toy_embed("x y z", 16, 1));
}

TEST(ToyEmbed, RejectsTinyDim) { EXPECT_THROW(toy_embed("a", 1, 0), Error); }

TEST(CosineSim, BasisCases) {
  const std::vector<float> e0{1, 0, 0, 0}, e1{0, 1, 0, 0}, m0{-1, 0, 0, 0};
  EXPECT_EQ(cosine_sim(e0, e0), 1.0);
  EXPECT_EQ(cosine_sim(e0, e1), 0.0);
  EXPECT_EQ(cosine_sim(e0, m0), -1.0);
  EXPECT_THROW(cosine_sim(e0, std::vector<float>{1, 0}), Error);
}

TEST(CosineSim, SelfSimilarityIsExactlyOne) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto v = oracle::random_unit(1 + rng() % 100 + 1, rng);
    EXPECT_EQ(cosine_sim(v, v), 1.0);
  }
}

TEST(CosineSim, EuclideanIdentityOnUnitVectors) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto x = oracle::random_unit(24, rng);
    const auto y = oracle::random_unit(24, rng);
    const double d = oracle::euclidean(x, y);
    EXPECT_NEAR(d * d, 2.0 - 2.0 * cosine_sim(x, y), 1e-5);
  }
}

TEST(EmbedBatch, ToyHashShapesAndDuplicates) {
  EmbedderSpec spec;
  spec.dim = 12;
  spec.seed = 5;
  const auto m = embed_batch({"one two", "three", "one two"}, spec);
  EXPECT_EQ(m.count(), 3u);
  EXPECT_EQ(m.dim(), 12u);
  EXPECT_TRUE(std::equal(m.row(0).begin(), m.row(0).end(), m.row(2).begin()));
  EXPECT_LT(m.max_norm_deviation(), 1e-4);
}

TEST(EmbedBatch, SpecValidation) {
  EmbedderSpec toy;
  toy.endpoint = "http://localhost:1/";
  EXPECT_THROW(toy.validate(), Error);
  EmbedderSpec ext;
  ext.kind = EmbedderKind::kExternalService;
  EXPECT_THROW(ext.validate(), Error);
  ext.endpoint = "http://localhost:1/embed";
  EXPECT_NO_THROW(ext.validate());
}

TEST(EmbedBatch, SegmentReembeddedAsQueryIsItsOwnNearestNeighbor) {
  EmbedderSpec spec;
  spec.dim = 64;
  spec.seed = 11;
  std::vector<std::string> corpus_texts;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 300; ++i) {
    std::string t;
    for (int w = 0; w < 20; ++w) t += "w" + std::to_string(rng() % 500) + " ";
    corpus_texts.push_back(t);
  }
  const auto corpus = embed_batch(corpus_texts, spec);
  const auto queries = embed_batch({corpus_texts[17], corpus_texts[230]}, spec);
  const auto nn = batch_query(corpus, queries, 1);
  EXPECT_EQ(nn[0].neighbor_ids[0], 17u);
  EXPECT_NEAR(nn[0].distances[0], 0.0, 1e-5);
  EXPECT_EQ(nn[1].neighbor_ids[0], 230u);
  EXPECT_NEAR(nn[1].distances[0], 0.0, 1e-5);
}

// Fake embedding service speaking {"texts": [...]} -> {"vectors": [...]}.
class FakeService {
 public:
  explicit FakeService(int fail_first = 0, int fail_status = 503)
      : fail_remaining_(fail_first), fail_status_(fail_status) {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (fail_remaining_.fetch_sub(1) > 0) {
        res.status = fail_status_;
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json out;
      out["vectors"] = nlohmann::json::array();
      for (const auto& t : body["texts"]) {
        // Unnormalized on purpose: the client must normalize.
        auto v = toy_embed(t.get<std::string>(), 8, 99);
        for (auto& x : v) x *= 3.0f;
        out["vectors"].push_back(v);
      }
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }
  int requests() const { return requests_; }

 private:
  httplib::Server server_;
  std::atomic<int> fail_remaining_;
  std::atomic<int> requests_{0};
  int fail_status_;
  int port_ = 0;
  std::thread thread_;
};

EmbedderSpec external(const std::string& url) {
  EmbedderSpec s;
  s.kind = EmbedderKind::kExternalService;
  s.endpoint = url;
  s.dim = 8;
  s.batch_size = 3;
  s.max_in_flight = 2;
  s.max_retries = 2;
  s.timeout_seconds = 5;
  return s;
}

TEST(ExternalEmbedder, ReassemblesBatchesInInputOrder) {
  FakeService svc;
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back("text number " + std::to_string(i));
  const auto m = embed_batch(texts, external(svc.url()));
  ASSERT_EQ(m.count(), 10u);
  EXPECT_EQ(svc.requests(), 4);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto want = toy_embed(texts[i], 8, 99);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(m.row(i)[j], want[j], 1e-6);
  }
}

TEST(ExternalEmbedder, RetriesTransientFailures) {
  FakeService svc(2);
  const auto m = embed_batch({"a", "b"}, external(svc.url()));
  EXPECT_EQ(m.count(), 2u);
  EXPECT_EQ(svc.requests(), 3);
}

TEST(ExternalEmbedder, PersistentFailureListsIndices) {
  FakeService svc(1000);
  std::vector<std::string> texts(5, "x");
  try {
    embed_batch(texts, external(svc.url()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kService);
    EXPECT_NE(std::string(e.what()).find("[0-4]"), std::string::npos) << e.what();
  }
}

TEST(ExternalEmbedder, ClientErrorsAreNotRetried) {
  FakeService svc(1000, 400);
  EXPECT_THROW(embed_batch({"a"}, external(svc.url())), Error);
  EXPECT_EQ(svc.requests(), 1);
}

}  // namespace
}  // namespace kdprobe
