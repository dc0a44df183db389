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

#ifndef TAGCL_EVAL_HPP_
#define TAGCL_EVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tagcl/graph.hpp"
#include "tagcl/matrix.hpp"

namespace tagcl {

enum class ProbeLoss { kSoftmax, kHinge };

struct ProbeHyper {
  double learning_rate = 0.01;
  int epochs = 200;
  double l2 = 1e-4;
  ProbeLoss loss = ProbeLoss::kSoftmax;
};

// Linear classifier on frozen embeddings: logits = x W + b.
struct ProbeParams {
  DenseMatrix weight;  // d x C
  RowVector bias;      // C
  ProbeHyper hyper;
  std::vector<double> loss_trace;  // objective before each epoch's update
};

// Full-batch Adam from zero weights on train_ids only. The objective is
// softmax cross-entropy (or multiclass hinge) plus l2 * |W|^2; the bias is
// not regularized. Throws ConfigError when train_ids cover fewer than two
// classes.
ProbeParams train_linear_probe(const FeatureMatrix& embeddings,
                               const std::vector<int>& labels,
                               const std::vector<int>& train_ids, int classes,
                               const ProbeHyper& hyper);

// argmax of the logits, ties to the lowest class index.
std::vector<int> predict(const ProbeParams& probe, const FeatureMatrix& embeddings,
                         const std::vector<int>& ids);

struct MetricRecord {
  double accuracy = 0;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;

  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

// Per-class precision/recall/F1 averaged uniformly over `classes`; a class
// with an empty denominator scores 0.
MetricRecord compute_metrics(const std::vector<int>& truth,
                             const std::vector<int>& predicted, int classes);

MetricRecord evaluate_probe(const ProbeParams& probe,
                            const FeatureMatrix& embeddings,
                            const std::vector<int>& labels,
                            const std::vector<int>& test_ids);

struct ProtocolConfig {
  int repeats = 5;
  std::uint64_t seed = 0;
  double train_frac = 0.2;
  double test_frac = 0.1;
  bool stratified = false;
  ProbeHyper probe;
};

nlohmann::json to_json(const ProtocolConfig& config);

struct MetricsReport {
  std::vector<MetricRecord> repeats;
  MetricRecord mean;
  MetricRecord std;  // sample standard deviation, 0 when there is one repeat
  std::string config_digest;
  nlohmann::json metadata;
};

// Mean and n-1 standard deviation of each metric.
MetricsReport summarize(std::vector<MetricRecord> repeats);

// Splits per make_splits, a fresh probe per repeat, aggregated.
MetricsReport run_protocol(const FeatureMatrix& embeddings,
                           const TextAttributedGraph& graph,
                           const ProtocolConfig& config);

enum class ReportFormat { kCsv, kMarkdown };

// CSV: metric,mean,std,repeat_0..; markdown: a table with one row of
// "mean (std s)" cells in percent. Throws ConfigError for an empty report.
void write_report(const MetricsReport& report, const std::filesystem::path& path,
                  ReportFormat format, const std::string& label = "tagcl");
MetricsReport read_report_csv(const std::filesystem::path& path);

// "41.72 (std 0.45)" for mean 0.4172, std 0.0045.
std::string percent_cell(double mean, double std);
std::string markdown_header();
std::string markdown_row(const std::string& label, const MetricsReport& report);

}  // namespace tagcl

#endif  // TAGCL_EVAL_HPP_
