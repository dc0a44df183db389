// Copyright 2026 The tagcl Authors.
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

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "tagcl/errors.hpp"
#include "tagcl/http.hpp"
#include "tagcl/text_encoder.hpp"

using namespace tagcl;
using nlohmann::json;
using tagcl::testing::TempDir;

namespace {

EmbeddingConfig unigram(int d) {
  EmbeddingConfig c;
  c.dimension = d;
  c.ngram_min = 1;
  c.ngram_max = 1;
  return c;
}

EmbeddingClientConfig remote_config() {
  EmbeddingClientConfig c;
  c.base_url = "http://emb.test";
  c.model_id = "bert-base-uncased";
  c.retry.sleep = [](double) {};
  return c;
}

std::string embedding_request(const std::vector<std::string>& inputs) {
  return json{{"model", "bert-base-uncased"}, {"input", inputs}}.dump();
}

void write_fixture(const std::filesystem::path& path, const json& exchanges) {
  std::ofstream(path) << exchanges.dump(2);
}

}  // namespace

TEST_CASE("hash golden values are frozen") {
  CHECK(ngram_hash("a", 0) == 0xe604613a248ff1acULL);
  CHECK(ngram_hash("b", 0) == 0xe604643a248ff6c5ULL);
  CHECK(ngram_hash("a b", 0) == 0xaa3fd3db615433b2ULL);
  CHECK(ngram_hash("a", 1) != ngram_hash("a", 0));
}

TEST_CASE("golden four-dimensional encoding") {
  const auto config = unigram(4);
  const Vector counts = hashed_counts("a a b", config);
  CHECK(counts(0) == -2.0);
  CHECK(counts(1) == -1.0);
  CHECK(counts(2) == 0.0);
  CHECK(counts(3) == 0.0);
  const Vector v = encode_text("a a b", config);
  CHECK(v(0) == doctest::Approx(-0.8944271909999159).epsilon(1e-15));
  CHECK(v(1) == doctest::Approx(-0.4472135954999579).epsilon(1e-15));
  CHECK(v(2) == 0.0);
  CHECK(v(3) == 0.0);

  EmbeddingConfig bigrams = config;
  bigrams.ngram_max = 2;
  // "a b" hashes to bucket 2 with a negative sign.
  CHECK(hashed_counts("a b", bigrams)(2) == -1.0);
}

TEST_CASE("empty and whitespace text encode to zero") {
  const EmbeddingConfig config;
  CHECK(encode_text("", config).isZero());
  CHECK(encode_text(" \t\n", config).isZero());
  CHECK(encode_text("", config).size() == 768);
}

TEST_CASE("tokenizer splits on unicode whitespace and lowercases ascii") {
  CHECK(tokenize("Hello\xc2\xa0WORLD\xe3\x80\x80x\ty", true) ==
        std::vector<std::string>{"hello", "world", "x", "y"});
  CHECK(tokenize("\xc3\x89t\xc3\xa9 Ok", true) ==
        std::vector<std::string>{"\xc3\x89t\xc3\xa9", "ok"});
  CHECK(tokenize("Mixed Case", false) == std::vector<std::string>{"Mixed", "Case"});
  CHECK(tokenize("", true).empty());
}

TEST_CASE("lowercasing makes case irrelevant") {
  EmbeddingConfig config;
  CHECK(encode_text("The Cat", config) == encode_text("the cat", config));
  config.lowercase = false;
  CHECK(encode_text("The Cat", config) != encode_text("the cat", config));
}

TEST_CASE("unigram counts are additive before normalization") {
  const auto config = unigram(64);
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta"};
  for (const auto& a : words) {
    for (const auto& b : words) {
      CHECK(hashed_counts(a + " " + b, config) ==
            hashed_counts(a, config) + hashed_counts(b, config));
    }
  }
}

TEST_CASE("encodings are deterministic and unit norm") {
  const EmbeddingConfig config;
  const auto g = generate_synthetic(SyntheticSpec{}, 1);
  const FeatureMatrix m = encode_corpus(g.texts(), config);
  const FeatureMatrix again = encode_corpus(g.texts(), config);
  CHECK(m == again);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    CHECK(std::abs(m.row(i).norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("corpus rows equal per-text encodings") {
  EmbeddingConfig config;
  config.dimension = 8;
  const std::vector<std::string> texts = {"red fox", "lazy dog", "red fox jumps"};
  const FeatureMatrix m = encode_corpus(texts, config);
  REQUIRE(m.rows() == 3);
  REQUIRE(m.cols() == 8);
  for (int i = 0; i < 3; ++i) {
    CHECK(m.row(i).transpose() == encode_text(texts[i], config));
  }
  CHECK(encode_corpus({}, config).rows() == 0);
  CHECK(encode_corpus({}, config).cols() == 8);
}

TEST_CASE("duplicate texts give identical rows and edits stay local") {
  const EmbeddingConfig config;
  std::vector<std::string> texts = {"a", "b", "same text", "c", "d", "same text"};
  const FeatureMatrix m = encode_corpus(texts, config);
  CHECK(m.row(2) == m.row(5));
  texts[3] = "something else";
  const FeatureMatrix edited = encode_corpus(texts, config);
  for (int i = 0; i < 6; ++i) {
    if (i == 3) {
      CHECK(edited.row(i) != m.row(i));
    } else {
      CHECK(edited.row(i) == m.row(i));
    }
  }
}

TEST_CASE("invalid embedding configs are rejected") {
  EmbeddingConfig c;
  c.dimension = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = EmbeddingConfig{};
  c.ngram_min = 3;
  c.ngram_max = 2;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.ngram_min = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("remote vectors are normalized") {
  TempDir dir;
  write_fixture(dir / "f.json",
                json::array({{{"url_path", "/v1/embeddings"},
                              {"request", json::parse(embedding_request({"hello"}))},
                              {"response", {{"data", json::array({{{"index", 0},
                                                                   {"embedding", {3, 4}}}})}}}}}));
  ReplayTransport replay(dir / "f.json");
  EmbeddingClient client(replay, remote_config());
  const FeatureMatrix m = remote_encode(client, {"hello"}, 2);
  CHECK(m(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(m(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("empty text list makes no requests") {
  TempDir dir;
  write_fixture(dir / "f.json", json::array());
  ReplayTransport replay(dir / "f.json");
  EmbeddingClient client(replay, remote_config());
  const FeatureMatrix m = remote_encode(client, {}, 5);
  CHECK(m.rows() == 0);
  CHECK(m.cols() == 5);
  CHECK(replay.calls() == 0);
}

TEST_CASE("shuffled response indices are reassembled in input order") {
  TempDir dir;
  write_fixture(dir / "f.json",
                json::array({{{"url_path", "/v1/embeddings"},
                              {"request", json::parse(embedding_request({"first", "second"}))},
                              {"response", {{"data", json::array({
                                                         {{"index", 1}, {"embedding", {0, 2}}},
                                                         {{"index", 0}, {"embedding", {5, 0}}},
                                                     })}}}}}));
  ReplayTransport replay(dir / "f.json");
  EmbeddingClient client(replay, remote_config());
  const FeatureMatrix m = remote_encode(client, {"first", "second"}, 2);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(0, 1) == 0.0);
  CHECK(m(1, 0) == 0.0);
  CHECK(m(1, 1) == 1.0);
}

TEST_CASE("batches split requests and the cache avoids repeats") {
  TempDir dir;
  json exchanges = json::array();
  for (const auto& [inputs, vecs] :
       std::vector<std::pair<std::vector<std::string>, std::vector<std::vector<double>>>>{
           {{"a", "b"}, {{1, 0}, {0, 1}}}, {{"c"}, {{1, 1}}}}) {
    json data = json::array();
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      data.push_back({{"index", i}, {"embedding", vecs[i]}});
    }
    exchanges.push_back({{"url_path", "/v1/embeddings"},
                         {"request", json::parse(embedding_request(inputs))},
                         {"response", {{"data", data}}}});
  }
  write_fixture(dir / "f.json", exchanges);
  auto config = remote_config();
  config.batch_size = 2;
  config.cache_dir = dir / "cache";
  ReplayTransport replay(dir / "f.json");
  EmbeddingClient client(replay, config);
  const FeatureMatrix first = remote_encode(client, {"a", "b", "c"}, 2);
  CHECK(replay.calls() == 2);
  const FeatureMatrix second = remote_encode(client, {"a", "b", "c"}, 2);
  CHECK(replay.calls() == 2);
  CHECK(first == second);
  CHECK(first(2, 0) == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("dimension mismatch from the service is an error") {
  TempDir dir;
  write_fixture(dir / "f.json",
                json::array({{{"url_path", "/v1/embeddings"},
                              {"request", json::parse(embedding_request({"x"}))},
                              {"response", {{"data", json::array({{{"index", 0},
                                                                   {"embedding", {1, 2, 3}}}})}}}}}));
  ReplayTransport replay(dir / "f.json");
  EmbeddingClient client(replay, remote_config());
  CHECK_THROWS_AS(remote_encode(client, {"x"}, 2), NumericError);
}

TEST_CASE("missing inputs in a response are a transport error") {
  TempDir dir;
  write_fixture(dir / "f.json",
                json::array({{{"url_path", "/v1/embeddings"},
                              {"request", json::parse(embedding_request({"x", "y"}))},
                              {"response", {{"data", json::array({{{"index", 0},
                                                                   {"embedding", {1, 2}}}})}}}}}));
  ReplayTransport replay(dir / "f.json");
  EmbeddingClient client(replay, remote_config());
  CHECK_THROWS_AS(remote_encode(client, {"x", "y"}, 2), TransportError);
}
