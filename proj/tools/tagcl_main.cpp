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

// Command-line front end: synth, augment, encode, train, eval, report, run.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "tagcl/augment.hpp"
#include "tagcl/contrastive.hpp"
#include "tagcl/eval.hpp"
#include "tagcl/graph.hpp"
#include "tagcl/pipeline.hpp"
#include "tagcl/text_encoder.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tagcl;

SyntheticSpec read_synthetic_spec(const fs::path& path) {
  SyntheticSpec spec;
  if (path.empty()) return spec;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synthetic spec " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& [key, value] : doc.items()) {
    if (key == "classes") spec.classes = value.get<int>();
    else if (key == "nodes_per_class") spec.nodes_per_class = value.get<int>();
    else if (key == "p_in") spec.p_in = value.get<double>();
    else if (key == "p_out") spec.p_out = value.get<double>();
    else if (key == "vocab_per_class") spec.vocab_per_class = value.get<int>();
    else if (key == "tokens_per_node") spec.tokens_per_node = value.get<int>();
    else if (key == "noise_token_fraction") spec.noise_token_fraction = value.get<double>();
    else if (key == "sentence_length") spec.sentence_length = value.get<int>();
    else throw ConfigError(path.string() + ": unknown key '" + key + "'");
  }
  validate(spec);
  return spec;
}

// Options shared by the stage commands: an optional pipeline config whose
// values serve as defaults for the flags.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;

  PipelineConfig load() const {
    PipelineConfig c;
    if (!config.empty()) c = validate_config(config, true, false);
    if (seed) override_seed(c, *seed);
    return c;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config, "Pipeline config (JSON)");
  cmd->add_option("--seed", common.seed, "Seed override");
}

std::unique_ptr<LlmClient> make_llm(const std::string& backend,
                                    const std::string& model,
                                    std::unique_ptr<HttpTransport>& transport) {
  std::string chosen = backend;
  if (chosen == "auto") {
    const char* key = std::getenv("LLM_API_KEY");
    if (key && *key) {
      chosen = "live";
    } else {
      std::cerr << "WARNING: LLM_API_KEY is not set; using the MOCK "
                   "augmentation backend.\n";
      chosen = "mock";
    }
  }
  if (chosen == "mock") return std::make_unique<MockLlmClient>();
  if (chosen != "live") throw ConfigError("--backend: expected auto, mock or live");
  transport = std::make_unique<HttplibTransport>();
  return std::make_unique<ChatCompletionsClient>(*transport,
                                                 chat_config_from_env(model));
}

FeatureMatrix encode_texts(const PipelineConfig& c,
                           const std::vector<std::string>& texts) {
  if (c.encoder.backend == EncoderBackend::kLocal) {
    return encode_corpus(texts, c.encoder.local);
  }
  HttplibTransport transport;
  auto cfg = embedding_config_from_env(c.encoder.model_id);
  if (!c.encoder.base_url.empty()) cfg.base_url = c.encoder.base_url;
  cfg.batch_size = c.encoder.batch_size;
  if (!c.encoder.cache_dir.empty()) cfg.cache_dir = c.encoder.cache_dir;
  EmbeddingClient client(transport, cfg);
  return remote_encode(client, texts, c.encoder.local.dimension);
}

int run(int argc, char** argv) {
  CLI::App app{"Contrastive learning on text-attributed graphs with "
               "language-model text augmentation"};
  app.require_subcommand(1);

  // synth
  std::string spec_path, out_nodes, out_edges;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic SBM graph");
  synth->add_option("--spec", spec_path, "Synthetic spec (JSON)");
  synth->add_option("--config", spec_path, "Alias of --spec");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--out-nodes", out_nodes)->required();
  synth->add_option("--out-edges", out_edges)->required();

  // augment
  Common aug_common;
  std::string kind, subject, nodes, edges, cache_dir, model, corpus_out,
      backend = "auto";
  std::optional<int> max_in_flight;
  auto* augment = app.add_subcommand("augment", "Augment node texts with an LLM");
  add_common(augment, aug_common);
  augment->add_option("--kind", kind, "shorten | rewriting | expansion");
  augment->add_option("--subject", subject, "Subject hint, e.g. 'a book'");
  augment->add_option("--nodes", nodes);
  augment->add_option("--edges", edges);
  augment->add_option("--cache-dir", cache_dir);
  augment->add_option("--model", model);
  augment->add_option("--max-in-flight", max_in_flight);
  augment->add_option("--backend", backend, "auto | mock | live");
  augment->add_option("--out", corpus_out)->required();

  // encode
  Common enc_common;
  std::string enc_nodes, enc_corpus, enc_out;
  std::optional<int> dim;
  auto* encode_cmd = app.add_subcommand("encode", "Encode texts to features");
  add_common(encode_cmd, enc_common);
  encode_cmd->add_option("--nodes", enc_nodes);
  encode_cmd->add_option("--corpus", enc_corpus, "Augmented corpus; encodes "
                                                 "its outputs instead of the "
                                                 "node texts");
  encode_cmd->add_option("--dim", dim);
  encode_cmd->add_option("--out", enc_out)->required();

  // train
  Common train_common;
  std::string tr_nodes, tr_edges, tr_corpus, tr_features, tr_aug_features,
      out_embeddings, out_checkpoint, out_trace;
  auto* train_cmd = app.add_subcommand("train", "Contrastive training");
  add_common(train_cmd, train_common);
  train_cmd->add_option("--nodes", tr_nodes);
  train_cmd->add_option("--edges", tr_edges);
  train_cmd->add_option("--corpus", tr_corpus);
  train_cmd->add_option("--features", tr_features, "Precomputed original-view "
                                                   "feature matrix");
  train_cmd->add_option("--augmented-features", tr_aug_features);
  train_cmd->add_option("--out-embeddings", out_embeddings)->required();
  train_cmd->add_option("--out-checkpoint", out_checkpoint);
  train_cmd->add_option("--out-trace", out_trace);

  // eval
  Common eval_common;
  std::string ev_embeddings, ev_nodes, ev_edges, ev_out, ev_format = "csv";
  std::optional<int> repeats;
  auto* eval_cmd = app.add_subcommand("eval", "Linear evaluation protocol");
  add_common(eval_cmd, eval_common);
  eval_cmd->add_option("--embeddings", ev_embeddings)->required();
  eval_cmd->add_option("--nodes", ev_nodes);
  eval_cmd->add_option("--edges", ev_edges);
  eval_cmd->add_option("--repeats", repeats);
  eval_cmd->add_option("--out", ev_out)->required();
  eval_cmd->add_option("--format", ev_format, "csv | markdown");

  // report
  std::vector<std::string> rep_inputs, rep_labels;
  std::string rep_out;
  auto* report_cmd = app.add_subcommand(
      "report", "Render report CSVs as a markdown results table");
  std::string rep_config;
  report_cmd->add_option("--config", rep_config, "Unused; accepted for symmetry");
  report_cmd->add_option("--reports", rep_inputs)->required();
  report_cmd->add_option("--labels", rep_labels);
  report_cmd->add_option("--out", rep_out)->required();

  // run
  Common run_common;
  std::vector<int> sweep;
  auto* run_cmd = app.add_subcommand("run", "Full pipeline from one config");
  add_common(run_cmd, run_common);
  run_cmd->add_option("--adaptor-sweep", sweep,
                      "Adaptor widths, e.g. 256 512 768")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors count as configuration errors.
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (synth->parsed()) {
    const auto spec = read_synthetic_spec(spec_path);
    const auto graph = generate_synthetic(spec, synth_seed);
    save_graph(graph, out_nodes, out_edges);
    std::cout << "wrote " << graph.node_count() << " nodes, "
              << graph.edges().size() << " edges\n";
    return 0;
  }

  if (augment->parsed()) {
    auto c = aug_common.load();
    if (!kind.empty()) c.augmentation.kind = parse_augmentation_kind(kind);
    if (!subject.empty()) c.augmentation.subject_hint = subject;
    if (!nodes.empty()) c.nodes = nodes;
    if (!edges.empty()) c.edges = edges;
    if (!model.empty()) c.augmentation.model_id = model;
    if (max_in_flight) c.augmentation.max_in_flight = *max_in_flight;
    if (!cache_dir.empty()) c.augmentation.cache_dir = cache_dir;
    if (c.augmentation.cache_dir.empty()) {
      throw ConfigError("--cache-dir is required");
    }
    if (c.nodes.empty() || c.edges.empty()) {
      throw ConfigError("--nodes and --edges are required");
    }
    const auto graph = load_graph(c.nodes, c.edges);
    std::unique_ptr<HttpTransport> transport;
    auto client = make_llm(backend, c.augmentation.model_id, transport);
    CacheStore cache(c.augmentation.cache_dir);
    AugmentOptions options;
    options.subject_hint = c.augmentation.subject_hint;
    options.max_in_flight = c.augmentation.max_in_flight;
    const auto corpus =
        augment_graph(*client, c.augmentation.kind, graph, cache, options);
    write_corpus(corpus, corpus_out);
    std::cout << "augmented " << corpus.records.size() << " nodes with "
              << client->request_count() << " requests\n";
    return 0;
  }

  if (encode_cmd->parsed()) {
    auto c = enc_common.load();
    if (dim) c.encoder.local.dimension = *dim;
    std::vector<std::string> texts;
    if (!enc_corpus.empty()) {
      texts = read_corpus(enc_corpus).texts();
    } else {
      if (!enc_nodes.empty()) c.nodes = enc_nodes;
      if (c.nodes.empty()) throw ConfigError("--nodes or --corpus is required");
      // Edges are irrelevant to encoding; an empty edge file is not needed.
      std::ifstream in(c.nodes);
      if (!in) throw ConfigError("cannot open " + c.nodes.string());
      for (std::string line; std::getline(in, line);) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        texts.push_back(json::parse(line).at("text").get<std::string>());
      }
    }
    const auto matrix = encode_texts(c, texts);
    write_matrix(enc_out, matrix);
    std::cout << "wrote " << matrix.rows() << "x" << matrix.cols() << " matrix\n";
    return 0;
  }

  if (train_cmd->parsed()) {
    auto c = train_common.load();
    if (!tr_nodes.empty()) c.nodes = tr_nodes;
    if (!tr_edges.empty()) c.edges = tr_edges;
    if (c.nodes.empty() || c.edges.empty()) {
      throw ConfigError("--nodes and --edges are required");
    }
    const auto graph = load_graph(c.nodes, c.edges);
    FeatureMatrix features, augmented;
    if (!tr_features.empty()) {
      features = read_matrix(tr_features);
    } else {
      features = encode_texts(c, graph.texts());
    }
    if (!tr_aug_features.empty()) {
      augmented = read_matrix(tr_aug_features);
    } else {
      if (tr_corpus.empty()) {
        throw ConfigError("--corpus or --augmented-features is required");
      }
      augmented = encode_texts(c, read_corpus(tr_corpus).texts());
    }
    const auto result = train(graph, features, augmented, c.train,
                              [](int epoch, double loss) {
                                std::cerr << "epoch " << epoch << " loss "
                                          << loss << '\n';
                              });
    write_matrix(out_embeddings, result.embeddings);
    if (!out_checkpoint.empty()) save_checkpoint(result.stack, out_checkpoint);
    if (!out_trace.empty()) {
      std::ofstream trace(out_trace, std::ios::trunc);
      trace << "epoch,mean_loss,wall_seconds\n";
      char buf[128];
      for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.6f\n", e,
                      result.loss_trace[e], result.epoch_seconds[e]);
        trace << buf;
      }
    }
    return 0;
  }

  if (eval_cmd->parsed()) {
    auto c = eval_common.load();
    if (repeats) c.eval.repeats = *repeats;
    if (!ev_nodes.empty()) c.nodes = ev_nodes;
    if (c.nodes.empty()) throw ConfigError("--nodes is required");
    // Evaluation needs labels only; edges are optional.
    fs::path edges_path = ev_edges.empty() ? c.edges : fs::path(ev_edges);
    std::optional<fs::path> scratch;
    if (edges_path.empty()) {
      scratch = fs::temp_directory_path() / "tagcl_no_edges.jsonl";
      std::ofstream(*scratch, std::ios::trunc);
      edges_path = *scratch;
    }
    const auto graph = load_graph(c.nodes, edges_path);
    if (scratch) fs::remove(*scratch);
    const auto embeddings = read_matrix(ev_embeddings);
    const auto report = run_protocol(embeddings, graph, c.eval);
    const auto format = ev_format == "markdown" ? ReportFormat::kMarkdown
                                                : ReportFormat::kCsv;
    if (ev_format != "markdown" && ev_format != "csv") {
      throw ConfigError("--format: expected csv or markdown");
    }
    write_report(report, ev_out, format, c.label);
    std::cout << markdown_header() << markdown_row(c.label, report);
    return 0;
  }

  if (report_cmd->parsed()) {
    std::ostringstream table;
    table << markdown_header();
    for (std::size_t k = 0; k < rep_inputs.size(); ++k) {
      const auto label =
          k < rep_labels.size() ? rep_labels[k] : fs::path(rep_inputs[k]).stem().string();
      table << markdown_row(label, read_report_csv(rep_inputs[k]));
    }
    std::ofstream out(rep_out, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + rep_out);
    out << table.str();
    std::cout << table.str();
    return 0;
  }

  if (run_cmd->parsed()) {
    if (run_common.config.empty()) throw ConfigError("--config is required");
    auto c = validate_config(run_common.config);
    if (run_common.seed) override_seed(c, *run_common.seed);
    if (!sweep.empty()) {
      const auto rows = adaptor_sweep(c, sweep);
      std::cout << markdown_header();
      for (const auto& row : rows) std::cout << markdown_row(row.setting, row.report);
      return 0;
    }
    const auto manifest = run_pipeline(c);
    for (const auto& stage : manifest.stages) {
      std::cerr << stage.name << (stage.executed ? " ran" : " reused") << " ("
                << stage.seconds << " s)\n";
    }
    std::cout << markdown_header() << markdown_row(c.label, manifest.report);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return tagcl::exit_code_for(e);
  }
}
