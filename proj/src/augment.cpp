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

#include "tagcl/augment.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tagcl/digest.hpp"
#include "tagcl/errors.hpp"

namespace tagcl {
namespace {

using nlohmann::json;

constexpr std::string_view kSubjectPrefix =
    "The following content is the description of ";
constexpr std::string_view kContentLabel = "\nContent: ";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string_view to_string(AugmentationKind kind) {
  switch (kind) {
    case AugmentationKind::kShorten:
      return "shorten";
    case AugmentationKind::kRewriting:
      return "rewriting";
    case AugmentationKind::kExpansion:
      return "expansion";
  }
  return "unknown";
}

AugmentationKind parse_augmentation_kind(std::string_view name) {
  for (auto kind : {AugmentationKind::kShorten, AugmentationKind::kRewriting,
                    AugmentationKind::kExpansion}) {
    if (name == to_string(kind)) return kind;
  }
  throw ConfigError("unknown augmentation kind '" + std::string(name) +
                    "' (expected shorten, rewriting or expansion)");
}

std::string_view request_instruction(AugmentationKind kind) {
  switch (kind) {
    case AugmentationKind::kShorten:
      return "Please simplify and summarize the provided content in one short "
             "sentence.";
    case AugmentationKind::kRewriting:
      return "Please rewrite the provided content to improve the spelling, "
             "grammar, clarity, concision, logical coherence, and overall "
             "readability.";
    case AugmentationKind::kExpansion:
      return "Please expand the provided content to give more related and "
             "necessary information.";
  }
  return {};
}

std::string render_prompt(AugmentationKind kind, std::string_view subject_hint,
                          std::string_view text) {
  if (trim(text).empty()) throw ConfigError("render_prompt: empty text");
  std::string out = "Request: ";
  out += kSubjectPrefix;
  out += subject_hint;
  out += ". ";
  out += request_instruction(kind);
  out += kContentLabel;
  out += text;
  return out;
}

std::string cache_key(AugmentationKind kind, std::string_view model_id,
                      std::string_view text) {
  std::string bytes(to_string(kind));
  bytes += '\0';
  bytes += model_id;
  bytes += '\0';
  bytes += text;
  return sha256_hex(bytes);
}

std::string mock_augment(AugmentationKind kind, std::string_view text) {
  switch (kind) {
    case AugmentationKind::kShorten: {
      const auto dot = text.find('.');
      return "SUMMARY: " +
             std::string(dot == std::string_view::npos ? text
                                                       : text.substr(0, dot + 1));
    }
    case AugmentationKind::kRewriting:
      return "REWRITTEN: " + std::string(text);
    case AugmentationKind::kExpansion: {
      std::set<std::string> tokens;
      std::istringstream in{std::string(text)};
      for (std::string token; in >> token;) tokens.insert(token);
      std::string out = std::string(text) + " EXPANDED:";
      for (const auto& token : tokens) out += " " + token;
      return out;
    }
  }
  return std::string(text);
}

std::string to_json_line(const AugmentationRecord& record) {
  return json{{"node_id", record.node_id},
              {"kind", to_string(record.kind)},
              {"model_id", record.model_id},
              {"input_text", record.input_text},
              {"output_text", record.output_text},
              {"cache_key", record.cache_key},
              {"timestamp", record.timestamp}}
      .dump();
}

AugmentationRecord record_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    AugmentationRecord r;
    r.node_id = j.at("node_id").get<int>();
    r.kind = parse_augmentation_kind(j.at("kind").get<std::string>());
    r.model_id = j.at("model_id").get<std::string>();
    r.input_text = j.at("input_text").get<std::string>();
    r.output_text = j.at("output_text").get<std::string>();
    r.cache_key = j.at("cache_key").get<std::string>();
    r.timestamp = j.at("timestamp").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed augmentation record: ") + e.what());
  }
}

std::vector<std::string> AugmentedCorpus::texts() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.output_text);
  return out;
}

void write_corpus(const AugmentedCorpus& corpus,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& record : corpus.records) out << to_json_line(record) << '\n';
  if (!out) throw ConfigError("write failed: " + path.string());
}

AugmentedCorpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  AugmentedCorpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    AugmentationRecord record;
    try {
      record = record_from_json(line);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
    if (!corpus.records.empty() && record.kind != corpus.kind) {
      throw ConfigError(path.string() + ": corpus mixes augmentation kinds");
    }
    if (record.node_id != static_cast<int>(corpus.records.size())) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": records must be in node order");
    }
    corpus.kind = record.kind;
    corpus.records.push_back(std::move(record));
  }
  return corpus;
}

std::string MockLlmClient::complete(const std::string& prompt) {
  ++requests_;
  for (auto kind : {AugmentationKind::kShorten, AugmentationKind::kRewriting,
                    AugmentationKind::kExpansion}) {
    const auto at = prompt.find(request_instruction(kind));
    if (at == std::string::npos) continue;
    const auto content = prompt.find(kContentLabel, at);
    if (content == std::string::npos) break;
    return mock_augment(kind, std::string_view(prompt).substr(
                                  content + kContentLabel.size()));
  }
  throw ConfigError("mock client: prompt does not match any template");
}

std::string ChatCompletionsClient::request_body(const std::string& prompt) const {
  return json{{"model", config_.model_id},
              {"temperature", config_.temperature},
              {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}}
      .dump();
}

std::string ChatCompletionsClient::complete(const std::string& prompt) {
  ++requests_;
  HttpHeaders headers{{"Content-Type", "application/json"}};
  if (!config_.api_key.empty()) {
    headers["Authorization"] = "Bearer " + config_.api_key;
  }
  const auto url = join_url(config_.base_url, "/v1/chat/completions");
  const auto response = post_with_retry(transport_, url, headers,
                                        request_body(prompt), config_.retry);
  if (response.status != 200) {
    throw TransportError("chat completion rejected with status " +
                             std::to_string(response.status) + ": " +
                             response.body.substr(0, 200),
                         response.status);
  }
  try {
    const json doc = json::parse(response.body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    return content.is_string() ? content.get<std::string>() : std::string();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat completion: ") + e.what(),
                         response.status);
  }
}

ChatClientConfig chat_config_from_env(std::string model_id) {
  ChatClientConfig config;
  config.model_id = std::move(model_id);
  if (const char* key = std::getenv("LLM_API_KEY")) config.api_key = key;
  if (const char* base = std::getenv("LLM_BASE_URL"); base && *base) {
    config.base_url = base;
  }
  return config;
}

CacheStore::CacheStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create cache dir " + dir_.string());
}

std::optional<AugmentationRecord> CacheStore::get(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".json"));
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  auto record = record_from_json(buf.str());
  if (record.cache_key != key) {
    throw ConfigError("cache entry " + key + " has mismatched key");
  }
  return record;
}

void CacheStore::put(const AugmentationRecord& record) const {
  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream tmp_name;
  tmp_name << record.cache_key << ".tmp." << std::this_thread::get_id() << "."
           << counter++;
  const auto tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << to_json_line(record) << '\n';
    if (!out) {
      throw ConfigError("cache write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, dir_ / (record.cache_key + ".json"), ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ConfigError("cache rename failed for " + record.cache_key);
  }
}

std::string format_utc(std::chrono::system_clock::time_point t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

AugmentationRecord augment_node(LlmClient& client, AugmentationKind kind,
                                std::string_view subject_hint, int node_id,
                                const std::string& text, const CacheStore& cache,
                                const Clock& clock) {
  const auto key = cache_key(kind, client.model_id(), text);
  if (auto hit = cache.get(key)) {
    hit->node_id = node_id;
    return *hit;
  }
  const auto prompt = render_prompt(kind, subject_hint, text);
  const std::string output(trim(client.complete(prompt)));
  if (output.empty()) {
    throw AugmentationError("empty model response for node " +
                                std::to_string(node_id),
                            {node_id});
  }
  AugmentationRecord record;
  record.node_id = node_id;
  record.kind = kind;
  record.model_id = client.model_id();
  record.input_text = text;
  record.output_text = output;
  record.cache_key = key;
  record.timestamp =
      format_utc(clock ? clock() : std::chrono::system_clock::now());
  cache.put(record);
  return record;
}

AugmentedCorpus augment_graph(LlmClient& client, AugmentationKind kind,
                              const TextAttributedGraph& graph,
                              const CacheStore& cache,
                              const AugmentOptions& options) {
  if (options.max_in_flight < 1) {
    throw ConfigError("augment_graph: max_in_flight must be >= 1");
  }
  const int n = graph.node_count();
  AugmentedCorpus corpus;
  corpus.kind = kind;
  corpus.records.resize(n);

  std::atomic<int> next{0};
  std::mutex mu;
  std::vector<int> failed;
  std::string first_error;
  const auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      const auto& text = graph.texts()[i];
      try {
        if (trim(text).empty()) {
          // Nothing to send; the augmented view keeps the empty text.
          AugmentationRecord r;
          r.node_id = i;
          r.kind = kind;
          r.model_id = client.model_id();
          r.input_text = text;
          r.cache_key = cache_key(kind, client.model_id(), text);
          r.timestamp = format_utc(std::chrono::system_clock::time_point{});
          corpus.records[i] = std::move(r);
          continue;
        }
        corpus.records[i] = augment_node(client, kind, options.subject_hint, i,
                                         text, cache, options.clock);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        failed.push_back(i);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };

  const int workers = std::min(options.max_in_flight, std::max(n, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  if (!failed.empty()) {
    std::sort(failed.begin(), failed.end());
    std::string ids;
    for (std::size_t k = 0; k < failed.size() && k < 20; ++k) {
      ids += (k ? "," : "") + std::to_string(failed[k]);
    }
    if (failed.size() > 20) ids += ",...";
    throw AugmentationError(std::to_string(failed.size()) +
                                " node(s) not augmented [" + ids +
                                "]; first error: " + first_error,
                            std::move(failed));
  }
  return corpus;
}

}  // namespace tagcl
