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

#include <fstream>
#include <json.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "tagcl/digest.hpp"
#include "tagcl/errors.hpp"
#include "tagcl/matrix.hpp"
#include "tagcl/pipeline.hpp"

using namespace tagcl;
using nlohmann::json;
using tagcl::testing::TempDir;

namespace {

json small_config(const TempDir& dir) {
  SyntheticSpec spec;
  spec.nodes_per_class = 15;
  save_graph(generate_synthetic(spec, 1), dir / "nodes.jsonl", dir / "edges.jsonl");
  return json{
      {"dataset", {{"nodes", "nodes.jsonl"}, {"edges", "edges.jsonl"}}},
      {"augmentation", {{"kind", "shorten"}, {"backend", "mock"}, {"max_in_flight", 2}}},
      {"encoder", {{"dimension", 32}}},
      {"train",
       {{"batch_size", 16}, {"epochs", 2}, {"hidden", {8}}, {"output_dim", 4},
        {"learning_rate", 1e-3}}},
      {"eval", {{"repeats", 2}, {"probe", {{"epochs", 20}}}}},
      {"output_dir", "out"},
  };
}

std::map<std::string, bool> executed(const RunManifest& m) {
  std::map<std::string, bool> out;
  for (const auto& s : m.stages) out[s.name] = s.executed;
  return out;
}

std::string field_error(const json& doc, const std::filesystem::path& base) {
  try {
    config_from_json(doc, base);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
  TempDir dir;
  auto doc = small_config(dir);
  const json minimal = {{"dataset", doc["dataset"]}};
  const auto c = config_from_json(minimal, dir.path());
  CHECK(c.encoder.local.dimension == 768);
  CHECK(c.train.output_dim == 256);
  CHECK(c.train.hidden == std::vector<int>{256});
  CHECK(c.train.learning_rate == 2e-5);
  CHECK(c.train.batch_size == 512);
  CHECK(c.train.epochs == 10);
  CHECK(c.train.loss.temperature == 0.5);
  CHECK(c.train.loss.tau_on_negatives);
  CHECK_FALSE(c.train.loss.negatives_per_target.has_value());
  CHECK(c.eval.repeats == 5);
  CHECK(c.eval.train_frac == 0.2);
  CHECK(c.eval.test_frac == 0.1);
  CHECK_FALSE(c.train.adaptor.enabled);
  CHECK(c.nodes == dir / "nodes.jsonl");
}

TEST_CASE("invalid configs are rejected with the field named") {
  TempDir dir;
  auto doc = small_config(dir);

  auto two_kinds = doc;
  two_kinds["augmentation"]["kind"] = {"shorten", "expansion"};
  CHECK(field_error(two_kinds, dir.path()).find("augmentation.kind") != std::string::npos);

  auto negative_tau = doc;
  negative_tau["train"]["temperature"] = -1;
  CHECK(field_error(negative_tau, dir.path()).find("train.temperature") !=
        std::string::npos);

  auto unknown = doc;
  unknown["train"]["learning_rat"] = 0.1;
  CHECK(field_error(unknown, dir.path()).find("learning_rat") != std::string::npos);
  CHECK_NOTHROW(config_from_json(unknown, dir.path(), false));

  auto missing = doc;
  missing["dataset"]["nodes"] = "nope.jsonl";
  CHECK(field_error(missing, dir.path()).find("dataset.nodes") != std::string::npos);

  auto zero_lr = doc;
  zero_lr["train"]["learning_rate"] = 0;
  CHECK(field_error(zero_lr, dir.path()).find("train.learning_rate") != std::string::npos);

  auto bad_backend = doc;
  bad_backend["encoder"]["backend"] = "both";
  CHECK(field_error(bad_backend, dir.path()).find("encoder.backend") != std::string::npos);
}

TEST_CASE("config files validate from disk and seeds override") {
  TempDir dir;
  std::ofstream(dir / "c.json") << small_config(dir).dump();
  auto c = validate_config(dir / "c.json");
  CHECK(c.output_dir == dir / "out");
  override_seed(c, 77);
  CHECK(c.train.seed == 77);
  CHECK(c.eval.seed == 77);
  const auto round = config_from_json(to_json(c), dir.path());
  CHECK(to_json(round) == to_json(c));
}

TEST_CASE("pipeline runs, memoizes and reruns only what changed") {
  TempDir dir;
  const auto config = config_from_json(small_config(dir), dir.path());
  const auto first = run_pipeline(config);
  const auto out = dir / "out";
  for (const char* f : {"corpus.jsonl", "features.lgx", "features_augmented.lgx",
                        "embeddings.lgx", "checkpoint.lgxp", "trace.csv", "metrics.json",
                        "report.csv", "report.md", "manifest.json"}) {
    CHECK(std::filesystem::exists(out / f));
  }
  for (const auto& [name, ran] : executed(first)) CHECK(ran);
  CHECK(first.report.repeats.size() == 2);
  for (const auto& [path, digest] : first.outputs) CHECK(sha256_file(path) == digest);

  const auto embeddings = read_matrix(out / "embeddings.lgx");
  const auto report = sha256_file(out / "report.csv");
  const auto second = run_pipeline(config);
  for (const auto& [name, ran] : executed(second)) {
    if (name != "load") CHECK_MESSAGE(!ran, name);
  }
  CHECK(read_matrix(out / "embeddings.lgx") == embeddings);
  CHECK(sha256_file(out / "report.csv") == report);

  std::filesystem::remove(out / "report.csv");
  const auto third = executed(run_pipeline(config));
  CHECK_FALSE(third.at("augment"));
  CHECK_FALSE(third.at("encode"));
  CHECK_FALSE(third.at("train"));
  CHECK(third.at("report"));
  CHECK(sha256_file(out / "report.csv") == report);
}

TEST_CASE("identical runs in separate directories are byte identical") {
  TempDir a, b;
  const auto ca = config_from_json(small_config(a), a.path());
  const auto cb = config_from_json(small_config(b), b.path());
  run_pipeline(ca);
  run_pipeline(cb);
  for (const char* f : {"embeddings.lgx", "report.csv", "corpus.jsonl"}) {
    CHECK(sha256_file(a / "out" / f) == sha256_file(b / "out" / f));
  }
}

TEST_CASE("tampered outputs are caught on reuse") {
  TempDir dir;
  const auto config = config_from_json(small_config(dir), dir.path());
  run_pipeline(config);
  std::ofstream(dir / "out" / "features.lgx", std::ios::app) << "x";
  CHECK_THROWS(run_pipeline(config));
  CHECK_FALSE(std::filesystem::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("a failing stage leaves earlier outputs and no manifest") {
  TempDir dir;
  auto doc = small_config(dir);
  // Nine of ten nodes share a label, so two-node training splits are almost
  // always single-class and the probe refuses them.
  std::vector<int> labels(10, 0);
  labels[9] = 1;
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back("text number " + std::to_string(i) + ".");
  save_graph(TextAttributedGraph(texts, {{0, 1}, {1, 2}}, labels), dir / "nodes.jsonl",
             dir / "edges.jsonl");
  doc["train"]["batch_size"] = 4;
  const auto config = config_from_json(doc, dir.path());
  try {
    run_pipeline(config);
    FAIL("expected failure");
  } catch (const StageError& e) {
    CHECK(e.stage() == "eval");
    CHECK(e.exit_code() == 2);
  }
  CHECK(std::filesystem::exists(dir / "out" / "embeddings.lgx"));
  CHECK_FALSE(std::filesystem::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("exit codes map error families") {
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(TransportError("x", 500)) == 3);
  CHECK(exit_code_for(NumericError("x")) == 4);
  CHECK(exit_code_for(AugmentationError("x", {1})) == 5);
  CHECK(exit_code_for(StageError("train", "x", 4)) == 4);
}

TEST_CASE("adaptor sweep emits one row per setting") {
  TempDir dir;
  const auto config = config_from_json(small_config(dir), dir.path());
  const auto rows = adaptor_sweep(config, {8, 16});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].setting == "Default");
  CHECK(rows[1].setting == "8");
  CHECK(rows[2].setting == "16");
  std::ifstream in(dir / "out" / "adaptor_sweep.md");
  std::string line;
  int data_rows = 0;
  while (std::getline(in, line)) data_rows += line.rfind("| ", 0) == 0;
  CHECK(data_rows == 4);  // header plus three settings
}
