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

#ifndef TAGCL_AUGMENT_HPP_
#define TAGCL_AUGMENT_HPP_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tagcl/graph.hpp"
#include "tagcl/http.hpp"

namespace tagcl {

enum class AugmentationKind { kShorten, kRewriting, kExpansion };

// "shorten", "rewriting", "expansion".
std::string_view to_string(AugmentationKind kind);
AugmentationKind parse_augmentation_kind(std::string_view name);

// The request sentence after the subject sentence, e.g. "Please simplify and
// summarize the provided content in one short sentence."
std::string_view request_instruction(AugmentationKind kind);

// "Request: The following content is the description of <subject>.
// <instruction>\nContent: <text>". Throws ConfigError on blank text.
std::string render_prompt(AugmentationKind kind, std::string_view subject_hint,
                          std::string_view text);

// SHA-256 over kind ‖ 0x00 ‖ model_id ‖ 0x00 ‖ text, lowercase hex.
std::string cache_key(AugmentationKind kind, std::string_view model_id,
                      std::string_view text);

// Deterministic offline stand-in for the language model.
std::string mock_augment(AugmentationKind kind, std::string_view text);

struct AugmentationRecord {
  int node_id = 0;
  AugmentationKind kind = AugmentationKind::kShorten;
  std::string model_id;
  std::string input_text;
  std::string output_text;
  std::string cache_key;
  std::string timestamp;  // ISO-8601 UTC, e.g. 2026-01-02T03:04:05Z

  friend bool operator==(const AugmentationRecord&,
                         const AugmentationRecord&) = default;
};

std::string to_json_line(const AugmentationRecord& record);
AugmentationRecord record_from_json(std::string_view line);

struct AugmentedCorpus {
  AugmentationKind kind = AugmentationKind::kShorten;
  std::vector<AugmentationRecord> records;  // node order

  std::vector<std::string> texts() const;
  friend bool operator==(const AugmentedCorpus&,
                         const AugmentedCorpus&) = default;
};

void write_corpus(const AugmentedCorpus& corpus,
                  const std::filesystem::path& path);
AugmentedCorpus read_corpus(const std::filesystem::path& path);

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  // Returns the assistant message content for a single user message.
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string model_id() const = 0;
  std::size_t request_count() const { return requests_; }

 protected:
  std::atomic<std::size_t> requests_{0};
};

// Answers with mock_augment, recovering kind and content from the rendered
// prompt.
class MockLlmClient : public LlmClient {
 public:
  std::string complete(const std::string& prompt) override;
  std::string model_id() const override { return "mock"; }
};

struct ChatClientConfig {
  std::string base_url = "https://api.openai.com";
  std::string api_key;
  std::string model_id = "gpt-3.5-turbo";
  double temperature = 0.0;
  RetryPolicy retry;
};

// POST {base_url}/v1/chat/completions with one user message.
class ChatCompletionsClient : public LlmClient {
 public:
  ChatCompletionsClient(HttpTransport& transport, ChatClientConfig config)
      : transport_(transport), config_(std::move(config)) {}
  std::string complete(const std::string& prompt) override;
  std::string model_id() const override { return config_.model_id; }
  std::string request_body(const std::string& prompt) const;

 private:
  HttpTransport& transport_;
  ChatClientConfig config_;
};

// Reads LLM_API_KEY and LLM_BASE_URL.
ChatClientConfig chat_config_from_env(std::string model_id);

// Directory of <cache_key>.json records. Writes go through a temporary file
// and rename, so concurrent writers never expose partial files.
class CacheStore {
 public:
  explicit CacheStore(std::filesystem::path dir);
  std::optional<AugmentationRecord> get(const std::string& key) const;
  void put(const AugmentationRecord& record) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

using Clock = std::function<std::chrono::system_clock::time_point()>;
std::string format_utc(std::chrono::system_clock::time_point t);

struct AugmentOptions {
  std::string subject_hint = "an item";
  int max_in_flight = 1;
  // Timestamp source for new records; system clock when empty.
  Clock clock;
};

// One node. On a cache hit the stored record is returned (with node_id set
// to `node_id`) and the client is not called.
AugmentationRecord augment_node(LlmClient& client, AugmentationKind kind,
                                std::string_view subject_hint, int node_id,
                                const std::string& text, const CacheStore& cache,
                                const Clock& clock = {});

// Every node of the graph, with at most max_in_flight requests outstanding.
// Throws AugmentationError naming the nodes that could not be augmented;
// records for the others are already cached.
AugmentedCorpus augment_graph(LlmClient& client, AugmentationKind kind,
                              const TextAttributedGraph& graph,
                              const CacheStore& cache,
                              const AugmentOptions& options);

}  // namespace tagcl

#endif  // TAGCL_AUGMENT_HPP_
