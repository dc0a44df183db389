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

#include "tagcl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "tagcl/digest.hpp"
#include "tagcl/optim.hpp"

namespace tagcl {
namespace {

using nlohmann::json;

// Objective value and gradients for one full-batch pass.
double probe_objective(const DenseMatrix& x, const std::vector<int>& y,
                       const DenseMatrix& weight, const RowVector& bias,
                       const ProbeHyper& hyper, DenseMatrix& grad_w,
                       DenseMatrix& grad_b) {
  const auto n = x.rows();
  const auto classes = weight.cols();
  DenseMatrix logits = (x * weight).rowwise() + bias;
  DenseMatrix dlogits = DenseMatrix::Zero(n, classes);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = y[i];
    if (hyper.loss == ProbeLoss::kSoftmax) {
      const double zmax = logits.row(i).maxCoeff();
      const RowVector e = (logits.row(i).array() - zmax).exp().matrix();
      const double denom = e.sum();
      loss += zmax + std::log(denom) - logits(i, label);
      dlogits.row(i) = e / denom;
      dlogits(i, label) -= 1.0;
    } else {
      // Crammer-Singer multiclass hinge.
      Eigen::Index worst = -1;
      double worst_margin = -INFINITY;
      for (Eigen::Index c = 0; c < classes; ++c) {
        if (c == label) continue;
        if (logits(i, c) > worst_margin) {
          worst_margin = logits(i, c);
          worst = c;
        }
      }
      const double slack = 1.0 + worst_margin - logits(i, label);
      if (worst >= 0 && slack > 0) {
        loss += slack;
        dlogits(i, worst) += 1.0;
        dlogits(i, label) -= 1.0;
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss = loss * inv_n + hyper.l2 * weight.squaredNorm();
  dlogits *= inv_n;
  grad_w = x.transpose() * dlogits + 2.0 * hyper.l2 * weight;
  grad_b = dlogits.colwise().sum();
  return loss;
}

double mean_of(const std::vector<MetricRecord>& rs, double MetricRecord::*field) {
  double total = 0;
  for (const auto& r : rs) total += r.*field;
  return total / static_cast<double>(rs.size());
}

double std_of(const std::vector<MetricRecord>& rs, double MetricRecord::*field,
              double mean) {
  if (rs.size() < 2) return 0.0;
  double ss = 0;
  for (const auto& r : rs) ss += (r.*field - mean) * (r.*field - mean);
  return std::sqrt(ss / static_cast<double>(rs.size() - 1));
}

constexpr std::pair<const char*, double MetricRecord::*> kMetrics[] = {
    {"accuracy", &MetricRecord::accuracy},
    {"precision", &MetricRecord::macro_precision},
    {"recall", &MetricRecord::macro_recall},
    {"f1", &MetricRecord::macro_f1},
};

}  // namespace

ProbeParams train_linear_probe(const FeatureMatrix& embeddings,
                               const std::vector<int>& labels,
                               const std::vector<int>& train_ids, int classes,
                               const ProbeHyper& hyper) {
  if (static_cast<Eigen::Index>(labels.size()) != embeddings.rows()) {
    throw ConfigError("probe: one label per embedding row required");
  }
  if (train_ids.empty()) throw ConfigError("probe: empty training split");
  if (hyper.epochs < 1 || !(hyper.learning_rate > 0) || !(hyper.l2 >= 0)) {
    throw ConfigError("probe: invalid hyperparameters");
  }
  std::set<int> present;
  DenseMatrix x(static_cast<Eigen::Index>(train_ids.size()), embeddings.cols());
  std::vector<int> y;
  for (std::size_t k = 0; k < train_ids.size(); ++k) {
    const int id = train_ids[k];
    if (id < 0 || id >= embeddings.rows()) {
      throw ConfigError("probe: train id out of range");
    }
    if (labels[id] < 0 || labels[id] >= classes) {
      throw ConfigError("probe: label out of range");
    }
    x.row(static_cast<Eigen::Index>(k)) = embeddings.row(id);
    y.push_back(labels[id]);
    present.insert(labels[id]);
  }
  if (present.size() < 2) {
    throw ConfigError("probe: training split covers a single class");
  }

  ProbeParams probe;
  probe.hyper = hyper;
  probe.weight = DenseMatrix::Zero(embeddings.cols(), classes);
  DenseMatrix bias = DenseMatrix::Zero(1, classes);
  AdamState adam;
  DenseMatrix grad_w, grad_b;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const RowVector b = bias.row(0);
    const double loss =
        probe_objective(x, y, probe.weight, b, hyper, grad_w, grad_b);
    if (!std::isfinite(loss)) {
      throw NumericError("probe: non-finite loss at epoch " +
                         std::to_string(epoch));
    }
    probe.loss_trace.push_back(loss);
    DenseMatrix* params[] = {&probe.weight, &bias};
    const DenseMatrix grads[] = {grad_w, grad_b};
    adam_step(params, grads, adam, hyper.learning_rate);
  }
  probe.bias = bias.row(0);
  return probe;
}

std::vector<int> predict(const ProbeParams& probe, const FeatureMatrix& embeddings,
                         const std::vector<int>& ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int id : ids) {
    const RowVector logits = embeddings.row(id) * probe.weight + probe.bias;
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.size(); ++c) {
      if (logits(c) > logits(best)) best = c;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

MetricRecord compute_metrics(const std::vector<int>& truth,
                             const std::vector<int>& predicted, int classes) {
  if (truth.empty()) throw ConfigError("metrics: empty test set");
  if (truth.size() != predicted.size()) {
    throw ConfigError("metrics: truth/prediction length mismatch");
  }
  std::vector<double> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  double correct = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const int t = truth[k];
    const int p = predicted[k];
    if (t < 0 || t >= classes || p < 0 || p >= classes) {
      throw ConfigError("metrics: class index out of range");
    }
    if (t == p) {
      ++tp[t];
      ++correct;
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  MetricRecord m;
  m.accuracy = correct / static_cast<double>(truth.size());
  for (int c = 0; c < classes; ++c) {
    const double precision = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    const double recall = tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    const double f1 = precision + recall > 0
                          ? 2 * precision * recall / (precision + recall)
                          : 0.0;
    m.macro_precision += precision;
    m.macro_recall += recall;
    m.macro_f1 += f1;
  }
  m.macro_precision /= classes;
  m.macro_recall /= classes;
  m.macro_f1 /= classes;
  return m;
}

MetricRecord evaluate_probe(const ProbeParams& probe,
                            const FeatureMatrix& embeddings,
                            const std::vector<int>& labels,
                            const std::vector<int>& test_ids) {
  if (test_ids.empty()) throw ConfigError("evaluate_probe: empty test set");
  std::vector<int> truth;
  for (int id : test_ids) truth.push_back(labels.at(id));
  return compute_metrics(truth, predict(probe, embeddings, test_ids),
                         static_cast<int>(probe.weight.cols()));
}

json to_json(const ProtocolConfig& config) {
  return {{"repeats", config.repeats},
          {"seed", config.seed},
          {"train_frac", config.train_frac},
          {"test_frac", config.test_frac},
          {"stratified", config.stratified},
          {"probe",
           {{"family", config.probe.loss == ProbeLoss::kSoftmax
                           ? "multinomial_logistic_regression"
                           : "multiclass_hinge"},
            {"learning_rate", config.probe.learning_rate},
            {"epochs", config.probe.epochs},
            {"l2", config.probe.l2},
            {"optimizer", "adam full-batch"}}},
          {"averaging", "macro"}};
}

MetricsReport summarize(std::vector<MetricRecord> repeats) {
  if (repeats.empty()) throw ConfigError("report has no repeats");
  MetricsReport report;
  report.repeats = std::move(repeats);
  for (const auto& [name, field] : kMetrics) {
    const double mean = mean_of(report.repeats, field);
    report.mean.*field = mean;
    report.std.*field = std_of(report.repeats, field, mean);
  }
  return report;
}

MetricsReport run_protocol(const FeatureMatrix& embeddings,
                           const TextAttributedGraph& graph,
                           const ProtocolConfig& config) {
  if (!graph.has_labels()) throw ConfigError("run_protocol: graph has no labels");
  if (embeddings.rows() != graph.node_count()) {
    throw ConfigError("run_protocol: embedding rows do not match node count");
  }
  if (!embeddings.allFinite()) {
    throw NumericError("run_protocol: non-finite embeddings");
  }
  const auto splits = make_splits(graph, config.train_frac, config.test_frac,
                                  config.repeats, config.seed, config.stratified);
  const auto& labels = *graph.labels();
  std::vector<MetricRecord> records;
  for (const auto& split : splits) {
    const auto probe = train_linear_probe(embeddings, labels, split.train_ids,
                                          graph.class_count(), config.probe);
    records.push_back(evaluate_probe(probe, embeddings, labels, split.test_ids));
  }
  auto report = summarize(std::move(records));
  const json cfg = to_json(config);
  report.config_digest = sha256_hex(cfg.dump());
  report.metadata = cfg;
  report.metadata["classes"] = graph.class_count();
  report.metadata["std_convention"] =
      config.repeats == 1 ? "single repeat: std reported as 0" : "sample (n-1)";
  report.metadata["probe_substitutes"] = "linear SVM (toolkit defaults unknown)";
  return report;
}

std::string percent_cell(double mean, double std) {
  return fmt::format("{:.2f} (std {:.2f})", mean * 100.0, std * 100.0);
}

std::string markdown_header() {
  return "| Setting | Accuracy | Precision | Recall | F1 |\n"
         "|---|---|---|---|---|\n";
}

std::string markdown_row(const std::string& label, const MetricsReport& report) {
  std::string row = "| " + label + " |";
  for (const auto& [name, field] : kMetrics) {
    row += " " + percent_cell(report.mean.*field, report.std.*field) + " |";
  }
  return row + "\n";
}

void write_report(const MetricsReport& report, const std::filesystem::path& path,
                  ReportFormat format, const std::string& label) {
  if (report.repeats.empty()) throw ConfigError("refusing to write empty report");
  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << "metric,mean,std";
    for (std::size_t r = 0; r < report.repeats.size(); ++r) {
      out << ",repeat_" << r;
    }
    out << '\n';
    for (const auto& [name, field] : kMetrics) {
      out << name << ',' << fmt::format("{:.17g}", report.mean.*field) << ','
          << fmt::format("{:.17g}", report.std.*field);
      for (const auto& r : report.repeats) {
        out << ',' << fmt::format("{:.17g}", r.*field);
      }
      out << '\n';
    }
  } else {
    out << markdown_header() << markdown_row(label, report);
  }
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw ConfigError("cannot write report " + path.string());
  file << out.str();
  if (!file) throw ConfigError("write failed: " + path.string());
}

MetricsReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<MetricRecord> repeats;
  MetricRecord mean, std;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() < 4) throw ConfigError(path.string() + ": short row");
    double MetricRecord::*field = nullptr;
    for (const auto& [name, f] : kMetrics) {
      if (cells[0] == name) field = f;
    }
    if (!field) throw ConfigError(path.string() + ": unknown metric " + cells[0]);
    mean.*field = std::stod(cells[1]);
    std.*field = std::stod(cells[2]);
    repeats.resize(cells.size() - 3);
    for (std::size_t r = 3; r < cells.size(); ++r) {
      repeats[r - 3].*field = std::stod(cells[r]);
    }
    ++rows;
  }
  if (rows != 4) throw ConfigError(path.string() + ": expected 4 metric rows");
  MetricsReport report;
  report.repeats = std::move(repeats);
  report.mean = mean;
  report.std = std;
  return report;
}

}  // namespace tagcl
