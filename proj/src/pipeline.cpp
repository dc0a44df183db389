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

#include "tagcl/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>

#include "tagcl/digest.hpp"
#include "tagcl/errors.hpp"
#include "tagcl/graph.hpp"
#include "tagcl/matrix.hpp"

namespace tagcl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so strict mode
// can reject the rest.
class Section {
 public:
  Section(const json& obj, std::string path, bool strict)
      : obj_(obj), path_(std::move(path)), strict_(strict) {
    if (!obj_.is_object()) fail("", "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw std::invalid_argument("boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw std::invalid_argument("integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw std::invalid_argument("number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw std::invalid_argument("string");
      }
      return v->get<T>();
    } catch (const std::exception& e) {
      fail(key, std::string("expected ") + e.what());
    }
  }

  Section sub(const std::string& key) {
    const json* v = raw(key);
    static const json kEmpty = json::object();
    return Section(v ? *v : kEmpty, name(key), strict_);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(name(key) + ": " + what);
  }

  std::string name(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    if (!strict_) return;
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) fail(key, "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  bool strict_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string_view to_string(LlmBackend b) {
  switch (b) {
    case LlmBackend::kAuto:
      return "auto";
    case LlmBackend::kMock:
      return "mock";
    case LlmBackend::kLive:
      return "live";
  }
  return "auto";
}

void check_positive(Section& s, const std::string& key, double v) {
  if (!(v > 0)) s.fail(key, "must be positive");
}

double elapsed_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t)
      .count();
}

// Persistent record of what a stage consumed and produced.
class StageStamp {
 public:
  StageStamp(fs::path dir, std::string stage)
      : file_(dir / ".stages" / (stage + ".json")), stage_(std::move(stage)) {}

  // True when a previous run had the same inputs and params and every output
  // is still present with its recorded digest.
  bool reusable(const json& inputs, const json& params,
                const std::vector<fs::path>& outputs) const {
    std::ifstream in(file_);
    if (!in) return false;
    json stamp;
    try {
      stamp = json::parse(in);
    } catch (const json::parse_error&) {
      return false;
    }
    if (stamp.value("inputs", json()) != inputs ||
        stamp.value("params", json()) != params) {
      return false;
    }
    const json recorded = stamp.value("outputs", json::object());
    for (const auto& out : outputs) {
      if (!fs::exists(out)) return false;
      const auto key = out.filename().string();
      if (!recorded.contains(key)) return false;
      if (recorded[key] != sha256_file(out)) {
        throw ConfigError(stage_ + ": digest mismatch on reuse of " +
                          out.string() + " (modified since it was produced)");
      }
    }
    return true;
  }

  void write(const json& inputs, const json& params,
             const std::vector<fs::path>& outputs) const {
    fs::create_directories(file_.parent_path());
    json digests = json::object();
    for (const auto& out : outputs) {
      digests[out.filename().string()] = sha256_file(out);
    }
    std::ofstream(file_, std::ios::trunc)
        << json{{"inputs", inputs}, {"params", params}, {"outputs", digests}}
               .dump(2)
        << '\n';
  }

 private:
  fs::path file_;
  std::string stage_;
};

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), exit_code_for(e));
  }
}

void write_trace(const fs::path& path, const TrainResult& result) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "epoch,mean_loss,wall_seconds\n";
  char buf[128];
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.6f\n", e, result.loss_trace[e],
                  result.epoch_seconds[e]);
    out << buf;
  }
}

json report_to_json(const MetricsReport& report) {
  const auto rec = [](const MetricRecord& r) {
    return json{{"accuracy", r.accuracy},
                {"precision", r.macro_precision},
                {"recall", r.macro_recall},
                {"f1", r.macro_f1}};
  };
  json repeats = json::array();
  for (const auto& r : report.repeats) repeats.push_back(rec(r));
  return {{"repeats", repeats},
          {"mean", rec(report.mean)},
          {"std", rec(report.std)},
          {"config_digest", report.config_digest},
          {"metadata", report.metadata}};
}

MetricsReport report_from_json(const json& j) {
  const auto rec = [](const json& r) {
    return MetricRecord{r.at("accuracy").get<double>(),
                        r.at("precision").get<double>(),
                        r.at("recall").get<double>(), r.at("f1").get<double>()};
  };
  MetricsReport report;
  for (const auto& r : j.at("repeats")) report.repeats.push_back(rec(r));
  report.mean = rec(j.at("mean"));
  report.std = rec(j.at("std"));
  report.config_digest = j.value("config_digest", "");
  report.metadata = j.value("metadata", json::object());
  return report;
}

}  // namespace

PipelineConfig config_from_json(const json& doc, const fs::path& base_dir,
                                bool strict, bool require_dataset) {
  PipelineConfig config;
  Section root(doc, "", strict);

  {
    Section s = root.sub("dataset");
    config.nodes = resolve(base_dir, s.get<std::string>("nodes", ""));
    config.edges = resolve(base_dir, s.get<std::string>("edges", ""));
    if (require_dataset) {
      if (config.nodes.empty()) s.fail("nodes", "required");
      if (config.edges.empty()) s.fail("edges", "required");
      if (!fs::exists(config.nodes)) {
        s.fail("nodes", "file not found: " + config.nodes.string());
      }
      if (!fs::exists(config.edges)) {
        s.fail("edges", "file not found: " + config.edges.string());
      }
    }
    s.finish();
  }

  {
    Section s = root.sub("augmentation");
    auto& a = config.augmentation;
    if (const json* kind = s.raw("kind")) {
      if (!kind->is_string()) {
        s.fail("kind", "exactly one augmentation kind per run is allowed "
                       "(shorten, rewriting or expansion)");
      }
      try {
        a.kind = parse_augmentation_kind(kind->get<std::string>());
      } catch (const ConfigError& e) {
        s.fail("kind", e.what());
      }
    }
    a.subject_hint = s.get<std::string>("subject_hint", a.subject_hint);
    a.model_id = s.get<std::string>("model", a.model_id);
    a.cache_dir = resolve(base_dir, s.get<std::string>("cache_dir", ""));
    const auto backend = s.get<std::string>("backend", "auto");
    if (backend == "auto") {
      a.backend = LlmBackend::kAuto;
    } else if (backend == "mock") {
      a.backend = LlmBackend::kMock;
    } else if (backend == "live") {
      a.backend = LlmBackend::kLive;
    } else {
      s.fail("backend", "expected auto, mock or live");
    }
    a.max_in_flight = s.get<int>("max_in_flight", a.max_in_flight);
    if (a.max_in_flight < 1) s.fail("max_in_flight", "must be >= 1");
    s.finish();
  }

  {
    Section s = root.sub("encoder");
    auto& e = config.encoder;
    const auto backend = s.get<std::string>("backend", "local");
    if (backend == "local") {
      e.backend = EncoderBackend::kLocal;
    } else if (backend == "remote") {
      e.backend = EncoderBackend::kRemote;
    } else {
      s.fail("backend", "expected local or remote (exactly one backend)");
    }
    e.local.dimension = s.get<int>("dimension", e.local.dimension);
    e.local.ngram_min = s.get<int>("ngram_min", e.local.ngram_min);
    e.local.ngram_max = s.get<int>("ngram_max", e.local.ngram_max);
    e.local.lowercase = s.get<bool>("lowercase", e.local.lowercase);
    e.local.hash_seed = s.get<std::uint64_t>("hash_seed", e.local.hash_seed);
    e.base_url = s.get<std::string>("base_url", e.base_url);
    e.model_id = s.get<std::string>("model", e.model_id);
    e.batch_size = s.get<int>("batch_size", e.batch_size);
    e.cache_dir = resolve(base_dir, s.get<std::string>("cache_dir", ""));
    try {
      validate(e.local);
    } catch (const ConfigError& err) {
      s.fail("", err.what());
    }
    if (e.batch_size < 1) s.fail("batch_size", "must be >= 1");
    s.finish();
  }

  {
    Section s = root.sub("train");
    auto& t = config.train;
    t.batch_size = s.get<int>("batch_size", t.batch_size);
    t.epochs = s.get<int>("epochs", t.epochs);
    t.learning_rate = s.get<double>("learning_rate", t.learning_rate);
    t.seed = s.get<std::uint64_t>("seed", t.seed);
    t.loss.temperature = s.get<double>("temperature", t.loss.temperature);
    if (const json* m = s.raw("negatives_per_target")) {
      if (m->is_string() && m->get<std::string>() == "all") {
        t.loss.negatives_per_target.reset();
      } else if (m->is_number_integer() && m->get<int>() >= 1) {
        t.loss.negatives_per_target = m->get<int>();
      } else {
        s.fail("negatives_per_target", "expected \"all\" or an integer >= 1");
      }
    }
    t.loss.tau_on_negatives =
        s.get<bool>("tau_on_negatives", t.loss.tau_on_negatives);
    t.loss.symmetric_views = s.get<bool>("symmetric_views", t.loss.symmetric_views);
    try {
      t.encoder = parse_encoder_kind(s.get<std::string>("encoder", "gcn"));
    } catch (const ConfigError& err) {
      s.fail("encoder", err.what());
    }
    t.hidden = s.get<std::vector<int>>("hidden", t.hidden);
    t.output_dim = s.get<int>("output_dim", t.output_dim);
    {
      Section a = s.sub("adaptor");
      t.adaptor.enabled = a.get<bool>("enabled", t.adaptor.enabled);
      t.adaptor.out_dim = a.get<int>("out_dim", t.adaptor.out_dim);
      if (t.adaptor.out_dim < 1) a.fail("out_dim", "must be >= 1");
      a.finish();
    }
    check_positive(s, "temperature", t.loss.temperature);
    check_positive(s, "learning_rate", t.learning_rate);
    if (t.batch_size < 2) s.fail("batch_size", "must be >= 2");
    if (t.epochs < 1) s.fail("epochs", "must be >= 1");
    if (t.output_dim < 1) s.fail("output_dim", "must be >= 1");
    for (int h : t.hidden) {
      if (h < 1) s.fail("hidden", "widths must be >= 1");
    }
    s.finish();
  }

  {
    Section s = root.sub("eval");
    auto& e = config.eval;
    e.repeats = s.get<int>("repeats", e.repeats);
    e.seed = s.get<std::uint64_t>("seed", e.seed);
    e.train_frac = s.get<double>("train_frac", e.train_frac);
    e.test_frac = s.get<double>("test_frac", e.test_frac);
    e.stratified = s.get<bool>("stratified", e.stratified);
    if (e.repeats < 1) s.fail("repeats", "must be >= 1");
    if (!(e.train_frac > 0 && e.train_frac < 1)) {
      s.fail("train_frac", "must lie in (0, 1)");
    }
    if (!(e.test_frac > 0 && e.test_frac <= 1)) {
      s.fail("test_frac", "must lie in (0, 1]");
    }
    {
      Section p = s.sub("probe");
      const auto loss = p.get<std::string>("loss", "softmax");
      if (loss == "softmax") {
        e.probe.loss = ProbeLoss::kSoftmax;
      } else if (loss == "hinge") {
        e.probe.loss = ProbeLoss::kHinge;
      } else {
        p.fail("loss", "expected softmax or hinge");
      }
      e.probe.learning_rate = p.get<double>("learning_rate", e.probe.learning_rate);
      e.probe.epochs = p.get<int>("epochs", e.probe.epochs);
      e.probe.l2 = p.get<double>("l2", e.probe.l2);
      check_positive(p, "learning_rate", e.probe.learning_rate);
      if (e.probe.epochs < 1) p.fail("epochs", "must be >= 1");
      if (!(e.probe.l2 >= 0)) p.fail("l2", "must be >= 0");
      p.finish();
    }
    s.finish();
  }

  config.output_dir =
      resolve(base_dir, root.get<std::string>("output_dir", "tagcl_out"));
  config.label = root.get<std::string>("label", config.label);
  if (const json* seed = root.raw("seed")) {
    if (!seed->is_number_unsigned() && !seed->is_number_integer()) {
      root.fail("seed", "expected an integer");
    }
    override_seed(config, seed->get<std::uint64_t>());
  }
  root.finish();
  return config;
}

PipelineConfig validate_config(const fs::path& path, bool strict,
                               bool require_dataset) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc, path.parent_path(), strict, require_dataset);
}

void override_seed(PipelineConfig& config, std::uint64_t seed) {
  config.train.seed = seed;
  config.eval.seed = seed;
}

json to_json(const PipelineConfig& c) {
  const auto& t = c.train;
  return {
      {"dataset", {{"nodes", c.nodes.string()}, {"edges", c.edges.string()}}},
      {"augmentation",
       {{"kind", to_string(c.augmentation.kind)},
        {"subject_hint", c.augmentation.subject_hint},
        {"model", c.augmentation.model_id},
        {"cache_dir", c.augmentation.cache_dir.string()},
        {"backend", to_string(c.augmentation.backend)},
        {"max_in_flight", c.augmentation.max_in_flight}}},
      {"encoder",
       {{"backend",
         c.encoder.backend == EncoderBackend::kLocal ? "local" : "remote"},
        {"dimension", c.encoder.local.dimension},
        {"ngram_min", c.encoder.local.ngram_min},
        {"ngram_max", c.encoder.local.ngram_max},
        {"lowercase", c.encoder.local.lowercase},
        {"hash_seed", c.encoder.local.hash_seed},
        {"base_url", c.encoder.base_url},
        {"model", c.encoder.model_id},
        {"batch_size", c.encoder.batch_size},
        {"cache_dir", c.encoder.cache_dir.string()}}},
      {"train",
       {{"batch_size", t.batch_size},
        {"epochs", t.epochs},
        {"learning_rate", t.learning_rate},
        {"seed", t.seed},
        {"temperature", t.loss.temperature},
        {"negatives_per_target", t.loss.negatives_per_target
                                     ? json(*t.loss.negatives_per_target)
                                     : json("all")},
        {"tau_on_negatives", t.loss.tau_on_negatives},
        {"symmetric_views", t.loss.symmetric_views},
        {"encoder", to_string(t.encoder)},
        {"hidden", t.hidden},
        {"output_dim", t.output_dim},
        {"adaptor",
         {{"enabled", t.adaptor.enabled}, {"out_dim", t.adaptor.out_dim}}}}},
      {"eval",
       {{"repeats", c.eval.repeats},
        {"seed", c.eval.seed},
        {"train_frac", c.eval.train_frac},
        {"test_frac", c.eval.test_frac},
        {"stratified", c.eval.stratified},
        {"probe",
         {{"loss", c.eval.probe.loss == ProbeLoss::kSoftmax ? "softmax" : "hinge"},
          {"learning_rate", c.eval.probe.learning_rate},
          {"epochs", c.eval.probe.epochs},
          {"l2", c.eval.probe.l2}}}}},
      {"output_dir", c.output_dir.string()},
      {"label", c.label}};
}

json RunManifest::to_json() const {
  json stage_list = json::array();
  for (const auto& s : stages) {
    stage_list.push_back(
        {{"name", s.name}, {"executed", s.executed}, {"seconds", s.seconds}});
  }
  return {{"tool_version", tool_version},
          {"config", config},
          {"inputs", inputs},
          {"outputs", outputs},
          {"stages", stage_list},
          {"report_config_digest", report.config_digest}};
}

int exit_code_for(const std::exception& e) {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
  if (dynamic_cast<const AugmentationError*>(&e)) return 5;
  if (dynamic_cast<const TransportError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  return 1;
}

RunManifest run_pipeline(const PipelineConfig& config, const RunHooks& hooks) {
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  const fs::path manifest_path = out / "manifest.json";
  fs::remove(manifest_path);

  RunManifest manifest;
  manifest.config = to_json(config);
  const auto record = [&](const std::string& name, bool executed,
                          std::chrono::steady_clock::time_point start) {
    manifest.stages.push_back({name, executed, elapsed_since(start)});
  };

  const auto graph = run_stage("load", [&] {
    return load_graph(config.nodes, config.edges);
  });
  const json dataset_digests = {{"nodes", sha256_file(config.nodes)},
                                {"edges", sha256_file(config.edges)}};
  manifest.inputs[config.nodes.string()] = dataset_digests["nodes"];
  manifest.inputs[config.edges.string()] = dataset_digests["edges"];

  // augment
  const fs::path corpus_path = out / "corpus.jsonl";
  {
    const auto start = std::chrono::steady_clock::now();
    std::unique_ptr<HttpTransport> own_transport;
    std::unique_ptr<LlmClient> own_client;
    LlmClient* client = hooks.llm;
    if (!client) {
      LlmBackend backend = config.augmentation.backend;
      if (backend == LlmBackend::kAuto) {
        const char* key = std::getenv("LLM_API_KEY");
        if (key && *key) {
          backend = LlmBackend::kLive;
        } else {
          std::cerr << "WARNING: LLM_API_KEY is not set; using the MOCK "
                       "augmentation backend. Augmented texts are synthetic "
                       "placeholders, not language-model output.\n";
          backend = LlmBackend::kMock;
        }
      }
      if (backend == LlmBackend::kMock) {
        own_client = std::make_unique<MockLlmClient>();
      } else {
        HttpTransport* transport = hooks.transport;
        if (!transport) {
          own_transport = std::make_unique<HttplibTransport>();
          transport = own_transport.get();
        }
        own_client = std::make_unique<ChatCompletionsClient>(
            *transport, chat_config_from_env(config.augmentation.model_id));
      }
      client = own_client.get();
    }
    const json params = {{"kind", to_string(config.augmentation.kind)},
                         {"subject_hint", config.augmentation.subject_hint},
                         {"model", client->model_id()}};
    StageStamp stamp(out, "augment");
    if (stamp.reusable(dataset_digests, params, {corpus_path})) {
      record("augment", false, start);
    } else {
      run_stage("augment", [&] {
        const fs::path cache_dir = config.augmentation.cache_dir.empty()
                                       ? out / "augment_cache"
                                       : config.augmentation.cache_dir;
        CacheStore cache(cache_dir);
        AugmentOptions options;
        options.subject_hint = config.augmentation.subject_hint;
        options.max_in_flight = config.augmentation.max_in_flight;
        const auto corpus =
            augment_graph(*client, config.augmentation.kind, graph, cache, options);
        write_corpus(corpus, corpus_path);
        stamp.write(dataset_digests, params, {corpus_path});
        return 0;
      });
      record("augment", true, start);
    }
  }

  // encode
  const fs::path features_path = out / "features.lgx";
  const fs::path augmented_path = out / "features_augmented.lgx";
  {
    const auto start = std::chrono::steady_clock::now();
    const json inputs = {{"nodes", dataset_digests["nodes"]},
                         {"corpus", sha256_file(corpus_path)}};
    const json params = to_json(config)["encoder"];
    StageStamp stamp(out, "encode");
    if (stamp.reusable(inputs, params, {features_path, augmented_path})) {
      record("encode", false, start);
    } else {
      run_stage("encode", [&] {
        const auto corpus = read_corpus(corpus_path);
        if (static_cast<int>(corpus.records.size()) != graph.node_count()) {
          throw ConfigError("corpus does not match the graph's node count");
        }
        FeatureMatrix features, augmented;
        if (config.encoder.backend == EncoderBackend::kLocal) {
          features = encode_corpus(graph.texts(), config.encoder.local);
          augmented = encode_corpus(corpus.texts(), config.encoder.local);
        } else {
          std::unique_ptr<HttpTransport> own;
          HttpTransport* transport = hooks.transport;
          if (!transport) {
            own = std::make_unique<HttplibTransport>();
            transport = own.get();
          }
          auto client_config = embedding_config_from_env(config.encoder.model_id);
          if (!config.encoder.base_url.empty()) {
            client_config.base_url = config.encoder.base_url;
          }
          client_config.batch_size = config.encoder.batch_size;
          if (!config.encoder.cache_dir.empty()) {
            client_config.cache_dir = config.encoder.cache_dir;
          }
          EmbeddingClient client(*transport, client_config);
          features = remote_encode(client, graph.texts(),
                                   config.encoder.local.dimension);
          augmented = remote_encode(client, corpus.texts(),
                                    config.encoder.local.dimension);
        }
        write_matrix(features_path, features);
        write_matrix(augmented_path, augmented);
        stamp.write(inputs, params, {features_path, augmented_path});
        return 0;
      });
      record("encode", true, start);
    }
  }

  // train
  const fs::path embeddings_path = out / "embeddings.lgx";
  const fs::path checkpoint_path = out / "checkpoint.lgxp";
  const fs::path checkpoint_sidecar = out / "checkpoint.lgxp.json";
  const fs::path trace_path = out / "trace.csv";
  const fs::path train_meta_path = out / "train_metadata.json";
  {
    const auto start = std::chrono::steady_clock::now();
    const json inputs = {{"nodes", dataset_digests["nodes"]},
                         {"edges", dataset_digests["edges"]},
                         {"features", sha256_file(features_path)},
                         {"augmented", sha256_file(augmented_path)}};
    const json params = to_json(config)["train"];
    const std::vector<fs::path> outputs = {embeddings_path, checkpoint_path,
                                           checkpoint_sidecar, trace_path,
                                           train_meta_path};
    StageStamp stamp(out, "train");
    if (stamp.reusable(inputs, params, outputs)) {
      record("train", false, start);
    } else {
      run_stage("train", [&] {
        const auto features = read_matrix(features_path);
        const auto augmented = read_matrix(augmented_path);
        const auto result = train(graph, features, augmented, config.train);
        write_matrix(embeddings_path, result.embeddings);
        save_checkpoint(result.stack, checkpoint_path);
        write_trace(trace_path, result);
        json meta = result.metadata;
        meta["loss_trace"] = result.loss_trace;
        meta["augmentation_model"] = config.augmentation.model_id;
        meta["encoder_backend"] =
            config.encoder.backend == EncoderBackend::kLocal
                ? "local feature hashing"
                : "remote:" + config.encoder.model_id;
        std::ofstream(train_meta_path, std::ios::trunc) << meta.dump(2) << '\n';
        stamp.write(inputs, params, outputs);
        return 0;
      });
      record("train", true, start);
    }
  }

  // eval
  const fs::path metrics_path = out / "metrics.json";
  {
    const auto start = std::chrono::steady_clock::now();
    const json inputs = {{"nodes", dataset_digests["nodes"]},
                         {"edges", dataset_digests["edges"]},
                         {"embeddings", sha256_file(embeddings_path)}};
    const json params = to_json(config.eval);
    StageStamp stamp(out, "eval");
    if (stamp.reusable(inputs, params, {metrics_path})) {
      record("eval", false, start);
    } else {
      run_stage("eval", [&] {
        const auto embeddings = read_matrix(embeddings_path);
        const auto report = run_protocol(embeddings, graph, config.eval);
        std::ofstream(metrics_path, std::ios::trunc)
            << report_to_json(report).dump(2) << '\n';
        stamp.write(inputs, params, {metrics_path});
        return 0;
      });
      record("eval", true, start);
    }
  }

  // report
  const fs::path report_csv = out / "report.csv";
  const fs::path report_md = out / "report.md";
  {
    const auto start = std::chrono::steady_clock::now();
    const json inputs = {{"metrics", sha256_file(metrics_path)}};
    const json params = {{"label", config.label}};
    StageStamp stamp(out, "report");
    std::ifstream metrics_in(metrics_path);
    manifest.report = report_from_json(json::parse(metrics_in));
    if (stamp.reusable(inputs, params, {report_csv, report_md})) {
      record("report", false, start);
    } else {
      run_stage("report", [&] {
        write_report(manifest.report, report_csv, ReportFormat::kCsv, config.label);
        write_report(manifest.report, report_md, ReportFormat::kMarkdown,
                     config.label);
        stamp.write(inputs, params, {report_csv, report_md});
        return 0;
      });
      record("report", true, start);
    }
  }

  for (const auto& p : {corpus_path, features_path, augmented_path,
                        embeddings_path, checkpoint_path, checkpoint_sidecar,
                        trace_path, train_meta_path, metrics_path, report_csv,
                        report_md}) {
    manifest.outputs[p.string()] = sha256_file(p);
  }
  std::ofstream(manifest_path, std::ios::trunc) << manifest.to_json().dump(2)
                                                << '\n';
  return manifest;
}

std::vector<SweepRow> adaptor_sweep(const PipelineConfig& config,
                                    const std::vector<int>& widths,
                                    const RunHooks& hooks) {
  std::vector<SweepRow> rows;
  const fs::path shared_cache = config.augmentation.cache_dir.empty()
                                    ? config.output_dir / "augment_cache"
                                    : config.augmentation.cache_dir;
  const auto run_one = [&](const std::string& setting, const fs::path& dir,
                           std::optional<int> width) {
    PipelineConfig c = config;
    c.augmentation.cache_dir = shared_cache;
    c.output_dir = dir;
    c.train.adaptor.enabled = width.has_value();
    if (width) c.train.adaptor.out_dim = *width;
    c.label = setting;
    rows.push_back({setting, run_pipeline(c, hooks).report});
  };
  run_one("Default", config.output_dir / "adaptor_default", std::nullopt);
  for (int w : widths) {
    if (w < 1) throw ConfigError("adaptor sweep: widths must be >= 1");
    run_one(std::to_string(w), config.output_dir / ("adaptor_" + std::to_string(w)),
            w);
  }
  std::ofstream table(config.output_dir / "adaptor_sweep.md", std::ios::trunc);
  table << markdown_header();
  for (const auto& row : rows) table << markdown_row(row.setting, row.report);
  return rows;
}

}  // namespace tagcl
