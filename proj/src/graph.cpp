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

#include "tagcl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "tagcl/rng.hpp"

namespace tagcl {
namespace {

using nlohmann::json;

std::string where(const std::filesystem::path& path, int line) {
  return path.string() + ":" + std::to_string(line);
}

std::int64_t require_int(const json& record, const char* field,
                         const std::filesystem::path& path, int line) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_number_integer()) {
    throw ConfigError(where(path, line) + ": field '" + field +
                      "' missing or not an integer");
  }
  return it->get<std::int64_t>();
}

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(where(path, line) + ": malformed record: " + e.what());
    }
    if (!record.is_object()) {
      throw ConfigError(where(path, line) + ": record is not an object");
    }
    fn(record, line);
  }
}

SparseMatrix build_adjacency(int n, const std::vector<TextAttributedGraph::Edge>& edges) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    triplets.emplace_back(u, v, 1.0);
    triplets.emplace_back(v, u, 1.0);
  }
  SparseMatrix adjacency(n, n);
  adjacency.setFromTriplets(triplets.begin(), triplets.end());
  adjacency.makeCompressed();
  return adjacency;
}

// Largest-remainder allocation of `total` across groups of the given sizes.
std::vector<int> allocate(const std::vector<int>& sizes, int total) {
  const int population = std::accumulate(sizes.begin(), sizes.end(), 0);
  std::vector<int> out(sizes.size(), 0);
  if (population == 0) return out;
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double exact =
        static_cast<double>(total) * sizes[c] / static_cast<double>(population);
    out[c] = static_cast<int>(std::floor(exact));
    assigned += out[c];
    remainders.emplace_back(-(exact - out[c]), static_cast<int>(c));
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k) {
    const int c = remainders[k].second;
    if (out[c] < sizes[c]) {
      ++out[c];
      ++assigned;
    }
  }
  return out;
}

}  // namespace

TextAttributedGraph::TextAttributedGraph(std::vector<std::string> texts,
                                         std::vector<Edge> edges,
                                         std::optional<std::vector<int>> labels)
    : texts_(std::move(texts)), labels_(std::move(labels)) {
  const int n = node_count();
  if (labels_ && static_cast<int>(labels_->size()) != n) {
    throw ConfigError("labels must have one entry per node");
  }
  if (labels_) {
    for (int label : *labels_) {
      if (label < 0) throw ConfigError("labels must be nonnegative");
    }
  }
  for (auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw ConfigError("edge endpoint out of range");
    }
    if (u == v) throw ConfigError("self-loop edges are not allowed");
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
  adjacency_ = build_adjacency(n, edges_);
}

int TextAttributedGraph::class_count() const {
  if (!labels_ || labels_->empty()) return 0;
  return *std::max_element(labels_->begin(), labels_->end()) + 1;
}

TextAttributedGraph load_graph(const std::filesystem::path& nodes_path,
                               const std::filesystem::path& edges_path) {
  std::unordered_map<std::int64_t, int> dense_id;
  std::vector<std::string> texts;
  std::vector<int> labels;
  int labelled = 0;
  for_each_record(nodes_path, [&](const json& record, int line) {
    const auto id = require_int(record, "id", nodes_path, line);
    auto text = record.find("text");
    if (text == record.end() || !text->is_string()) {
      throw ConfigError(where(nodes_path, line) +
                        ": field 'text' missing or not a string");
    }
    if (!dense_id.emplace(id, static_cast<int>(texts.size())).second) {
      throw ConfigError(where(nodes_path, line) + ": duplicate node id " +
                        std::to_string(id));
    }
    texts.push_back(text->get<std::string>());
    if (record.contains("label") && !record["label"].is_null()) {
      const auto label = require_int(record, "label", nodes_path, line);
      if (label < 0) {
        throw ConfigError(where(nodes_path, line) + ": negative label");
      }
      labels.push_back(static_cast<int>(label));
      ++labelled;
    } else {
      labels.push_back(-1);
    }
  });
  if (labelled != 0 && labelled != static_cast<int>(texts.size())) {
    throw ConfigError(nodes_path.string() +
                      ": labels must be given for all nodes or none");
  }

  std::vector<TextAttributedGraph::Edge> edges;
  for_each_record(edges_path, [&](const json& record, int line) {
    const auto src = require_int(record, "src", edges_path, line);
    const auto dst = require_int(record, "dst", edges_path, line);
    auto s = dense_id.find(src);
    auto d = dense_id.find(dst);
    if (s == dense_id.end() || d == dense_id.end()) {
      throw ConfigError(where(edges_path, line) + ": edge references unknown id " +
                        std::to_string(s == dense_id.end() ? src : dst));
    }
    if (s->second == d->second) {
      throw ConfigError(where(edges_path, line) + ": self-loop on id " +
                        std::to_string(src));
    }
    edges.emplace_back(s->second, d->second);
  });

  std::optional<std::vector<int>> maybe_labels;
  if (labelled != 0) maybe_labels = std::move(labels);
  return TextAttributedGraph(std::move(texts), std::move(edges),
                             std::move(maybe_labels));
}

void save_graph(const TextAttributedGraph& graph,
                const std::filesystem::path& nodes_path,
                const std::filesystem::path& edges_path) {
  std::ofstream nodes(nodes_path, std::ios::trunc);
  if (!nodes) throw ConfigError("cannot write " + nodes_path.string());
  for (int i = 0; i < graph.node_count(); ++i) {
    json record = {{"id", i}, {"text", graph.texts()[i]}};
    if (graph.has_labels()) record["label"] = (*graph.labels())[i];
    nodes << record.dump() << '\n';
  }
  std::ofstream edges(edges_path, std::ios::trunc);
  if (!edges) throw ConfigError("cannot write " + edges_path.string());
  for (const auto& [u, v] : graph.edges()) {
    edges << json{{"src", u}, {"dst", v}}.dump() << '\n';
  }
  if (!nodes || !edges) throw ConfigError("graph write failed");
}

int round_half_up(double x) {
  return static_cast<int>(std::floor(x + 0.5 + 1e-9));
}

std::vector<SplitAssignment> make_splits(const TextAttributedGraph& graph,
                                         double train_frac, double test_frac,
                                         int repeats, std::uint64_t seed,
                                         bool stratified) {
  if (!graph.has_labels()) throw ConfigError("make_splits: graph has no labels");
  if (!(train_frac >= 0 && train_frac <= 1) ||
      !(test_frac >= 0 && test_frac <= 1) ||
      train_frac + test_frac * (1 - train_frac) > 1 + 1e-12) {
    throw ConfigError("make_splits: fractions out of range");
  }
  if (repeats < 1) throw ConfigError("make_splits: repeats must be >= 1");

  const int n = graph.node_count();
  const int train_size = round_half_up(train_frac * n);
  const int test_size = round_half_up(test_frac * (n - train_size));
  const auto& labels = *graph.labels();
  const int classes = graph.class_count();

  std::vector<SplitAssignment> splits;
  for (int r = 0; r < repeats; ++r) {
    SplitAssignment split;
    split.repeat_index = r;
    split.seed = seed ^ static_cast<std::uint64_t>(r);
    Rng rng(split.seed);
    if (!stratified) {
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order);
      split.train_ids.assign(order.begin(), order.begin() + train_size);
      split.test_ids.assign(order.begin() + train_size,
                            order.begin() + train_size + test_size);
    } else {
      std::vector<std::vector<int>> by_class(classes);
      for (int i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
      std::vector<int> sizes;
      for (auto& members : by_class) {
        rng.shuffle(members);
        sizes.push_back(static_cast<int>(members.size()));
      }
      const auto train_per_class = allocate(sizes, train_size);
      std::vector<int> rest_sizes(classes);
      for (int c = 0; c < classes; ++c) {
        rest_sizes[c] = sizes[c] - train_per_class[c];
      }
      const auto test_per_class = allocate(rest_sizes, test_size);
      for (int c = 0; c < classes; ++c) {
        const auto& m = by_class[c];
        split.train_ids.insert(split.train_ids.end(), m.begin(),
                               m.begin() + train_per_class[c]);
        split.test_ids.insert(
            split.test_ids.end(), m.begin() + train_per_class[c],
            m.begin() + train_per_class[c] + test_per_class[c]);
      }
    }
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    splits.push_back(std::move(split));
  }
  return splits;
}

void validate(const SyntheticSpec& spec) {
  const auto unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (spec.classes < 1 || spec.nodes_per_class < 1 ||
      spec.vocab_per_class < 1 || spec.tokens_per_node < 1 ||
      spec.sentence_length < 1) {
    throw ConfigError("synthetic spec: counts must be positive");
  }
  if (!unit(spec.p_in) || !unit(spec.p_out) ||
      !unit(spec.noise_token_fraction)) {
    throw ConfigError("synthetic spec: probabilities must lie in [0, 1]");
  }
}

TextAttributedGraph generate_synthetic(const SyntheticSpec& spec,
                                       std::uint64_t seed) {
  validate(spec);
  const int n = spec.classes * spec.nodes_per_class;
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i / spec.nodes_per_class;

  Rng edge_rng(derive_seed(seed, 1));
  std::vector<TextAttributedGraph::Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const double p = labels[u] == labels[v] ? spec.p_in : spec.p_out;
      if (edge_rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }

  Rng text_rng(derive_seed(seed, 2));
  std::vector<std::string> texts(n);
  for (int i = 0; i < n; ++i) {
    std::string text;
    for (int k = 0; k < spec.tokens_per_node; ++k) {
      if (k > 0) text += ' ';
      const bool noise = text_rng.bernoulli(spec.noise_token_fraction);
      const auto word = text_rng.below(spec.vocab_per_class);
      if (noise) {
        text += "noise" + std::to_string(word);
      } else {
        text += "c" + std::to_string(labels[i]) + "w" + std::to_string(word);
      }
      if ((k + 1) % spec.sentence_length == 0 || k + 1 == spec.tokens_per_node) {
        text += " .";
      }
    }
    texts[i] = std::move(text);
  }
  return TextAttributedGraph(std::move(texts), std::move(edges),
                             std::move(labels));
}

}  // namespace tagcl
