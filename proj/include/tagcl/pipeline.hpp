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

#ifndef TAGCL_PIPELINE_HPP_
#define TAGCL_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tagcl/augment.hpp"
#include "tagcl/contrastive.hpp"
#include "tagcl/eval.hpp"
#include "tagcl/text_encoder.hpp"

namespace tagcl {

inline constexpr const char* kToolVersion = "0.1.0";

enum class LlmBackend { kAuto, kMock, kLive };
enum class EncoderBackend { kLocal, kRemote };

struct AugmentationSettings {
  AugmentationKind kind = AugmentationKind::kShorten;
  std::string subject_hint = "an item";
  std::string model_id = "gpt-3.5-turbo";
  std::filesystem::path cache_dir;  // empty: <output_dir>/augment_cache
  LlmBackend backend = LlmBackend::kAuto;
  int max_in_flight = 4;
};

struct EncoderSettings {
  EncoderBackend backend = EncoderBackend::kLocal;
  EmbeddingConfig local;
  // Remote service; dimension is local.dimension.
  std::string base_url;  // empty: EMB_BASE_URL or the default
  std::string model_id = "bert-base-uncased";
  int batch_size = 64;
  std::filesystem::path cache_dir;
};

struct PipelineConfig {
  std::filesystem::path nodes;
  std::filesystem::path edges;
  AugmentationSettings augmentation;
  EncoderSettings encoder;
  TrainConfig train;
  ProtocolConfig eval;
  std::filesystem::path output_dir = "tagcl_out";
  std::string label = "tagcl";
};

// Parses and checks a JSON config. Relative paths resolve against base_dir.
// In strict mode unknown keys are rejected. With require_dataset the node
// and edge files must be named and exist. Throws ConfigError naming the
// offending field.
PipelineConfig config_from_json(const nlohmann::json& doc,
                                const std::filesystem::path& base_dir,
                                bool strict = true, bool require_dataset = true);
PipelineConfig validate_config(const std::filesystem::path& path,
                               bool strict = true, bool require_dataset = true);

// Normalized snapshot with every default filled in.
nlohmann::json to_json(const PipelineConfig& config);

// Applies --seed: training, batching, negatives and evaluation splits.
void override_seed(PipelineConfig& config, std::uint64_t seed);

struct StageRecord {
  std::string name;
  bool executed = false;
  double seconds = 0;
};

struct RunManifest {
  nlohmann::json config;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path -> sha256
  std::string tool_version = kToolVersion;
  std::vector<StageRecord> stages;
  MetricsReport report;

  nlohmann::json to_json() const;
};

// Test and embedding hooks. Null members fall back to the configured
// backends.
struct RunHooks {
  LlmClient* llm = nullptr;
  HttpTransport* transport = nullptr;
};

// Stage failure wrapper: names the stage and keeps the original error's
// exit category.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, int exit_code)
      : std::runtime_error(stage + ": " + what),
        stage_(std::move(stage)),
        exit_code_(exit_code) {}
  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

// Exit code for an exception per the CLI contract (2 config, 3 transport,
// 4 numeric, 5 partial augmentation, 1 otherwise).
int exit_code_for(const std::exception& e);

// augment -> encode -> train -> eval -> report. Stages whose recorded input
// digests and parameters are unchanged and whose outputs are intact are
// skipped. The manifest is written last and removed at the start, so a
// failed run leaves none.
RunManifest run_pipeline(const PipelineConfig& config, const RunHooks& hooks = {});

struct SweepRow {
  std::string setting;
  MetricsReport report;
};

// One pipeline run per adaptor width (plus the configured default first),
// each under <output_dir>/adaptor_<width>; writes adaptor_sweep.md.
std::vector<SweepRow> adaptor_sweep(const PipelineConfig& config,
                                    const std::vector<int>& widths,
                                    const RunHooks& hooks = {});

}  // namespace tagcl

#endif  // TAGCL_PIPELINE_HPP_
