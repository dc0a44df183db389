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

#ifndef TAGCL_TEXT_ENCODER_HPP_
#define TAGCL_TEXT_ENCODER_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tagcl/http.hpp"
#include "tagcl/matrix.hpp"

namespace tagcl {

struct EmbeddingConfig {
  int dimension = 768;
  int ngram_min = 1;
  int ngram_max = 2;
  bool lowercase = true;
  std::uint64_t hash_seed = 0;
};

void validate(const EmbeddingConfig& config);

// Splits on ASCII and Unicode (UTF-8 encoded) whitespace.
std::vector<std::string> tokenize(std::string_view text, bool lowercase);

// 64-bit FNV-1a over the 8 little-endian bytes of seed followed by bytes.
std::uint64_t ngram_hash(std::string_view bytes, std::uint64_t seed);

// Signed feature hashing of word n-grams before normalization. Each n-gram
// (tokens joined by one space) adds +1, or -1 when the hash's top bit is
// set, at hash mod dimension.
Vector hashed_counts(std::string_view text, const EmbeddingConfig& config);

// hashed_counts scaled to unit L2 norm; empty text gives the zero vector.
Vector encode_text(std::string_view text, const EmbeddingConfig& config);

FeatureMatrix encode_corpus(const std::vector<std::string>& texts,
                            const EmbeddingConfig& config);

struct EmbeddingClientConfig {
  std::string base_url = "https://api.openai.com";
  std::string api_key;
  std::string model_id = "text-embedding";
  int batch_size = 64;
  std::optional<std::filesystem::path> cache_dir;
  RetryPolicy retry;
};

// Reads EMB_BASE_URL and EMB_API_KEY (falling back to LLM_API_KEY).
EmbeddingClientConfig embedding_config_from_env(std::string model_id);

// POST {base_url}/v1/embeddings in batches; results are reassembled by the
// response's `index` field.
class EmbeddingClient {
 public:
  EmbeddingClient(HttpTransport& transport, EmbeddingClientConfig config)
      : transport_(transport), config_(std::move(config)) {}
  std::vector<std::vector<double>> embed_batch(
      const std::vector<std::string>& texts);
  const EmbeddingClientConfig& config() const { return config_; }
  std::size_t request_count() const { return requests_; }

 private:
  HttpTransport& transport_;
  EmbeddingClientConfig config_;
  std::size_t requests_ = 0;
};

// Rows in input order, L2-normalized. Cached per text when the client has a
// cache directory. Throws NumericError when the service returns vectors of
// the wrong width.
FeatureMatrix remote_encode(EmbeddingClient& client,
                            const std::vector<std::string>& texts,
                            int dimension);

}  // namespace tagcl

#endif  // TAGCL_TEXT_ENCODER_HPP_
