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

// Test-only reference implementations. These deliberately avoid the library's
// code paths (no tape, no sparse kernels, no log-sum-exp) so they can serve as
// independent oracles.

#ifndef TAGCL_TESTS_ORACLES_HPP_
#define TAGCL_TESTS_ORACLES_HPP_

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tagcl/graph.hpp"
#include "tagcl/graph_encoder.hpp"
#include "tagcl/matrix.hpp"
#include "tagcl/rng.hpp"

namespace tagcl::testing {

// Removes the directory on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tagcl_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::vector<double>> to_rows(const DenseMatrix& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

inline std::vector<std::vector<double>> naive_matmul(
    const std::vector<std::vector<double>>& a,
    const std::vector<std::vector<double>>& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  std::vector<std::vector<double>> out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += a[i][t] * b[t][j];
      out[i][j] = s;
    }
  }
  return out;
}

inline double max_abs_diff(const DenseMatrix& a,
                           const std::vector<std::vector<double>>& b) {
  double worst = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b[i][j]));
    }
  }
  return worst;
}

// Dense D^-1/2 (A + I) D^-1/2 from an edge list.
inline std::vector<std::vector<double>> dense_normalized(
    int n, const std::vector<TextAttributedGraph::Edge>& edges) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (const auto& [u, v] : edges) a[u][v] = a[v][u] = 1.0;
  for (int i = 0; i < n; ++i) a[i][i] += 1.0;
  std::vector<double> deg(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) deg[i] += a[i][j];
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i][j] /= std::sqrt(deg[i]) * std::sqrt(deg[j]);
  }
  return a;
}

// InfoNCE written out with plain exp/log and explicit cosines.
inline double naive_cosine(const std::vector<double>& u,
                           const std::vector<double>& v) {
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += u[k] * v[k];
    nu += u[k] * u[k];
    nv += v[k] * v[k];
  }
  if (nu == 0 || nv == 0) return 0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

inline double naive_info_nce(const std::vector<double>& anchor,
                             const std::vector<double>& positive,
                             const std::vector<std::vector<double>>& neg_orig,
                             const std::vector<std::vector<double>>& neg_aug,
                             double tau, bool tau_on_negatives) {
  const double tau_neg = tau_on_negatives ? tau : 1.0;
  const double pos = std::exp(naive_cosine(anchor, positive) / tau);
  double negatives = 0;
  for (std::size_t j = 0; j < neg_orig.size(); ++j) {
    negatives += std::exp(naive_cosine(anchor, neg_orig[j]) / tau_neg) +
                 std::exp(naive_cosine(anchor, neg_aug[j]) / tau_neg);
  }
  return -std::log(pos / (pos + negatives));
}

// Loop-based GCN: per layer h'_i = sum_j Ahat_ij (h_j W) + b, ReLU between.
inline std::vector<std::vector<double>> loop_gcn(
    const std::vector<std::vector<double>>& ahat,
    const std::vector<std::vector<double>>& x, const EncoderStack& stack) {
  auto h = x;
  for (std::size_t k = 0; k < stack.layers.size(); ++k) {
    const auto w = to_rows(stack.layers[k].weight);
    const auto b = to_rows(stack.layers[k].bias)[0];
    const std::size_t n = h.size(), out_dim = b.size();
    std::vector<std::vector<double>> next(n, std::vector<double>(out_dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < out_dim; ++c) {
        double s = b[c];
        for (std::size_t j = 0; j < n; ++j) {
          if (ahat[i][j] == 0) continue;
          for (std::size_t t = 0; t < h[j].size(); ++t) {
            s += ahat[i][j] * h[j][t] * w[t][c];
          }
        }
        next[i][c] = (k + 1 < stack.layers.size()) ? std::max(0.0, s) : s;
      }
    }
    h = std::move(next);
  }
  return h;
}

// Loop-based SAGE-mean: h'_i = h_i Ws + mean_{j in N(i)} h_j Wn + b.
inline std::vector<std::vector<double>> loop_sage(
    int n, const std::vector<TextAttributedGraph::Edge>& edges,
    const std::vector<std::vector<double>>& x, const EncoderStack& stack) {
  std::vector<std::vector<int>> nbrs(n);
  for (const auto& [u, v] : edges) {
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }
  auto h = x;
  for (std::size_t k = 0; k < stack.layers.size(); ++k) {
    const auto ws = to_rows(stack.layers[k].weight);
    const auto wn = to_rows(stack.layers[k].neighbor_weight);
    const auto b = to_rows(stack.layers[k].bias)[0];
    const std::size_t in_dim = h[0].size(), out_dim = b.size();
    std::vector<std::vector<double>> next(n, std::vector<double>(out_dim, 0.0));
    for (int i = 0; i < n; ++i) {
      std::vector<double> mean(in_dim, 0.0);
      for (int j : nbrs[i]) {
        for (std::size_t t = 0; t < in_dim; ++t) mean[t] += h[j][t];
      }
      if (!nbrs[i].empty()) {
        for (auto& m : mean) m /= static_cast<double>(nbrs[i].size());
      }
      for (std::size_t c = 0; c < out_dim; ++c) {
        double s = b[c];
        for (std::size_t t = 0; t < in_dim; ++t) {
          s += h[i][t] * ws[t][c] + mean[t] * wn[t][c];
        }
        next[i][c] = (k + 1 < stack.layers.size()) ? std::max(0.0, s) : s;
      }
    }
    h = std::move(next);
  }
  return h;
}

// Erdos-Renyi graph with uniform texts "node<i>".
inline TextAttributedGraph random_graph(int n, double p, std::uint64_t seed,
                                        int classes = 0) {
  Rng rng(seed);
  std::vector<TextAttributedGraph::Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }
  std::vector<std::string> texts;
  for (int i = 0; i < n; ++i) texts.push_back("node" + std::to_string(i));
  std::optional<std::vector<int>> labels;
  if (classes > 0) {
    labels.emplace();
    for (int i = 0; i < n; ++i) labels->push_back(i % classes);
  }
  return TextAttributedGraph(std::move(texts), std::move(edges),
                             std::move(labels));
}

inline DenseMatrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                 double scale = 1.0) {
  DenseMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

// |a - b| / max(|a|, |b|, floor). The floor keeps gradients that are zero up
// to rounding from dividing by ~0.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace tagcl::testing

#endif  // TAGCL_TESTS_ORACLES_HPP_
