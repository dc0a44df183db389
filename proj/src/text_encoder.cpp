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

#include "tagcl/text_encoder.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tagcl/digest.hpp"

namespace tagcl {
namespace {

using nlohmann::json;

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// Length in bytes of a whitespace sequence starting at s[i], or 0.
std::size_t whitespace_length(std::string_view s, std::size_t i) {
  const auto byte = [&](std::size_t k) {
    return k < s.size() ? static_cast<unsigned char>(s[k]) : 0u;
  };
  const unsigned c = byte(i);
  if (c == ' ' || (c >= '\t' && c <= '\r')) return 1;
  if (c == 0xC2 && (byte(i + 1) == 0x85 || byte(i + 1) == 0xA0)) return 2;
  if (c == 0xE1 && byte(i + 1) == 0x9A && byte(i + 2) == 0x80) return 3;
  if (c == 0xE2 && byte(i + 1) == 0x80) {
    const unsigned t = byte(i + 2);
    if ((t >= 0x80 && t <= 0x8A) || t == 0xA8 || t == 0xA9 || t == 0xAF) {
      return 3;
    }
  }
  if (c == 0xE2 && byte(i + 1) == 0x81 && byte(i + 2) == 0x9F) return 3;
  if (c == 0xE3 && byte(i + 1) == 0x80 && byte(i + 2) == 0x80) return 3;
  return 0;
}

std::string embedding_cache_key(const std::string& model,
                                const std::string& text) {
  std::string bytes = "embedding";
  bytes += '\0';
  bytes += model;
  bytes += '\0';
  bytes += text;
  return sha256_hex(bytes);
}

}  // namespace

void validate(const EmbeddingConfig& config) {
  if (config.dimension < 1) throw ConfigError("encoder.dimension must be >= 1");
  if (config.ngram_min < 1 || config.ngram_max < config.ngram_min) {
    throw ConfigError("encoder n-gram range must satisfy 1 <= min <= max");
  }
}

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < text.size();) {
    if (const auto ws = whitespace_length(text, i)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      i += ws;
      continue;
    }
    char c = text[i++];
    if (lowercase && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    current += c;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t ngram_hash(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = kFnvOffset;
  for (int k = 0; k < 8; ++k) {
    h ^= (seed >> (8 * k)) & 0xffu;
    h *= kFnvPrime;
  }
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

Vector hashed_counts(std::string_view text, const EmbeddingConfig& config) {
  validate(config);
  Vector v = Vector::Zero(config.dimension);
  const auto tokens = tokenize(text, config.lowercase);
  const auto n_tokens = static_cast<int>(tokens.size());
  for (int n = config.ngram_min; n <= config.ngram_max; ++n) {
    for (int start = 0; start + n <= n_tokens; ++start) {
      std::string gram = tokens[start];
      for (int k = 1; k < n; ++k) {
        gram += ' ';
        gram += tokens[start + k];
      }
      const auto h = ngram_hash(gram, config.hash_seed);
      const double sign = (h >> 63) ? -1.0 : 1.0;
      v(static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(config.dimension))) += sign;
    }
  }
  return v;
}

Vector encode_text(std::string_view text, const EmbeddingConfig& config) {
  Vector v = hashed_counts(text, config);
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

FeatureMatrix encode_corpus(const std::vector<std::string>& texts,
                            const EmbeddingConfig& config) {
  validate(config);
  FeatureMatrix out(static_cast<Eigen::Index>(texts.size()), config.dimension);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = encode_text(texts[i], config);
  }
  return out;
}

EmbeddingClientConfig embedding_config_from_env(std::string model_id) {
  EmbeddingClientConfig config;
  config.model_id = std::move(model_id);
  if (const char* key = std::getenv("EMB_API_KEY"); key && *key) {
    config.api_key = key;
  } else if (const char* llm_key = std::getenv("LLM_API_KEY")) {
    config.api_key = llm_key;
  }
  if (const char* base = std::getenv("EMB_BASE_URL"); base && *base) {
    config.base_url = base;
  }
  return config;
}

std::vector<std::vector<double>> EmbeddingClient::embed_batch(
    const std::vector<std::string>& texts) {
  ++requests_;
  HttpHeaders headers{{"Content-Type", "application/json"}};
  if (!config_.api_key.empty()) {
    headers["Authorization"] = "Bearer " + config_.api_key;
  }
  const std::string body =
      json{{"model", config_.model_id}, {"input", texts}}.dump();
  const auto response =
      post_with_retry(transport_, join_url(config_.base_url, "/v1/embeddings"),
                      headers, body, config_.retry);
  if (response.status != 200) {
    throw TransportError("embedding request rejected with status " +
                             std::to_string(response.status),
                         response.status);
  }
  std::vector<std::vector<double>> out(texts.size());
  std::vector<bool> seen(texts.size(), false);
  try {
    const json doc = json::parse(response.body);
    const auto& data = doc.at("data");
    for (std::size_t k = 0; k < data.size(); ++k) {
      const auto index = data[k].contains("index")
                             ? data[k].at("index").get<std::size_t>()
                             : k;
      if (index >= texts.size() || seen[index]) {
        throw TransportError("embedding response has bad index", 200);
      }
      out[index] = data[k].at("embedding").get<std::vector<double>>();
      seen[index] = true;
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed embedding response: ") + e.what(),
                         200);
  }
  for (bool s : seen) {
    if (!s) throw TransportError("embedding response is missing inputs", 200);
  }
  return out;
}

FeatureMatrix remote_encode(EmbeddingClient& client,
                            const std::vector<std::string>& texts,
                            int dimension) {
  if (dimension < 1) throw ConfigError("remote_encode: dimension must be >= 1");
  const auto& config = client.config();
  const auto n = static_cast<Eigen::Index>(texts.size());
  FeatureMatrix out(n, dimension);

  const auto store = [&](Eigen::Index row, const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != dimension) {
      throw NumericError("embedding service returned width " +
                         std::to_string(v.size()) + ", expected " +
                         std::to_string(dimension));
    }
    for (int c = 0; c < dimension; ++c) out(row, c) = v[c];
  };

  std::vector<Eigen::Index> pending;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (config.cache_dir) {
      std::ifstream in(*config.cache_dir /
                       (embedding_cache_key(config.model_id, texts[i]) + ".json"));
      if (in) {
        store(i, json::parse(in).at("embedding").get<std::vector<double>>());
        continue;
      }
    }
    pending.push_back(i);
  }

  const auto batch = static_cast<std::size_t>(std::max(1, config.batch_size));
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const auto end = std::min(pending.size(), start + batch);
    std::vector<std::string> inputs;
    for (auto k = start; k < end; ++k) inputs.push_back(texts[pending[k]]);
    const auto vectors = client.embed_batch(inputs);
    for (auto k = start; k < end; ++k) {
      const auto row = pending[k];
      store(row, vectors[k - start]);
      if (config.cache_dir) {
        std::filesystem::create_directories(*config.cache_dir);
        const auto key = embedding_cache_key(config.model_id, texts[row]);
        const auto tmp = *config.cache_dir / (key + ".tmp");
        std::ofstream(tmp, std::ios::trunc)
            << json{{"model", config.model_id},
                    {"text", texts[row]},
                    {"embedding", vectors[k - start]}}
                   .dump();
        std::filesystem::rename(tmp, *config.cache_dir / (key + ".json"));
      }
    }
  }
  if (!out.allFinite()) throw NumericError("embedding service returned NaN/inf");
  return l2_normalize_rows(out);
}

}  // namespace tagcl
