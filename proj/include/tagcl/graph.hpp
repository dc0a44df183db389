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

#ifndef TAGCL_GRAPH_HPP_
#define TAGCL_GRAPH_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tagcl/matrix.hpp"

namespace tagcl {

// Undirected graph whose nodes carry text and optionally a class label.
// Immutable after construction.
class TextAttributedGraph {
 public:
  using Edge = std::pair<int, int>;  // first < second

  TextAttributedGraph() = default;
  // Validates endpoints, drops duplicate/reversed edges and rejects
  // self-loops. Labels, when given, must have one entry per node.
  TextAttributedGraph(std::vector<std::string> texts, std::vector<Edge> edges,
                      std::optional<std::vector<int>> labels = std::nullopt);

  int node_count() const { return static_cast<int>(texts_.size()); }
  const std::vector<std::string>& texts() const { return texts_; }
  // Sorted, deduplicated, each with first < second.
  const std::vector<Edge>& edges() const { return edges_; }
  const std::optional<std::vector<int>>& labels() const { return labels_; }
  bool has_labels() const { return labels_.has_value(); }
  // max label + 1, or 0 without labels.
  int class_count() const;
  // Symmetric binary adjacency, zero diagonal.
  const SparseMatrix& adjacency() const { return adjacency_; }

  friend bool operator==(const TextAttributedGraph& a,
                         const TextAttributedGraph& b) {
    return a.texts_ == b.texts_ && a.edges_ == b.edges_ &&
           a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> texts_;
  std::vector<Edge> edges_;
  std::optional<std::vector<int>> labels_;
  SparseMatrix adjacency_;
};

// Reads line-delimited JSON node and edge files. File ids are remapped to
// dense indices in first-seen order.
TextAttributedGraph load_graph(const std::filesystem::path& nodes_path,
                               const std::filesystem::path& edges_path);
// Writes dense ids; edges once each with src < dst.
void save_graph(const TextAttributedGraph& graph,
                const std::filesystem::path& nodes_path,
                const std::filesystem::path& edges_path);

struct SplitAssignment {
  int repeat_index = 0;
  std::vector<int> train_ids;  // sorted
  std::vector<int> test_ids;   // sorted
  std::uint64_t seed = 0;
};

// floor(x + 1/2) with a small tolerance for representation error.
int round_half_up(double x);

// `repeats` random train/test splits. Train takes round(train_frac * N)
// nodes; test takes round(test_frac * (N - |train|)) of the rest. Repeat r
// draws from seed ^ r. With `stratified`, each class contributes in
// proportion to its size (largest-remainder allocation).
std::vector<SplitAssignment> make_splits(const TextAttributedGraph& graph,
                                         double train_frac, double test_frac,
                                         int repeats, std::uint64_t seed,
                                         bool stratified = false);

struct SyntheticSpec {
  int classes = 4;
  int nodes_per_class = 50;
  double p_in = 0.1;
  double p_out = 0.01;
  int vocab_per_class = 30;
  int tokens_per_node = 24;
  double noise_token_fraction = 0.5;
  // Words per sentence; sentences end with a " ." token.
  int sentence_length = 8;
};

void validate(const SyntheticSpec& spec);

// Stochastic block model with class-vocabulary texts. Nodes are laid out
// class by class. Deterministic given seed.
TextAttributedGraph generate_synthetic(const SyntheticSpec& spec,
                                       std::uint64_t seed);

}  // namespace tagcl

#endif  // TAGCL_GRAPH_HPP_
