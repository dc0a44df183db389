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

#ifndef TAGCL_GRAPH_ENCODER_HPP_
#define TAGCL_GRAPH_ENCODER_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tagcl/autodiff.hpp"
#include "tagcl/matrix.hpp"
#include "tagcl/rng.hpp"

namespace tagcl {

enum class EncoderKind { kGcn, kSageMean };

std::string_view to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);  // "gcn" | "sage"

struct AdaptorConfig {
  bool enabled = false;
  int out_dim = 256;
};

// Widths of the graph encoder. K = hidden.size() + 1 layers.
struct EncoderDims {
  int input_dim = 768;
  std::vector<int> hidden = {256};
  int output_dim = 256;
};

struct LinearLayer {
  DenseMatrix weight;  // in x out
  DenseMatrix bias;    // 1 x out
};

struct EncoderLayer {
  DenseMatrix weight;           // GCN weight, or SAGE self weight
  DenseMatrix neighbor_weight;  // SAGE only; empty for GCN
  DenseMatrix bias;             // 1 x out
};

// Trainable parameters shared by both views: optional adaptor followed by K
// graph layers, ReLU between layers and identity after the last.
struct EncoderStack {
  EncoderKind kind = EncoderKind::kGcn;
  std::optional<LinearLayer> adaptor;
  std::vector<EncoderLayer> layers;

  int input_dim() const;
  int output_dim() const;
  // Fixed order: adaptor weight, adaptor bias, then per layer weight,
  // [neighbor_weight,] bias.
  std::vector<DenseMatrix*> parameters();
  std::vector<const DenseMatrix*> parameters() const;
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;
  // Throws NumericError when chained shapes disagree.
  void check() const;
};

// sqrt(6 / (fan_in + fan_out)).
double glorot_bound(int fan_in, int fan_out);

// Glorot-uniform weights, zero biases.
EncoderStack init_params(Rng& rng, const EncoderDims& dims, EncoderKind kind,
                         const AdaptorConfig& adaptor);

// D^-1/2 (A + I) D^-1/2 with D the degree of A + I. Throws NumericError when
// A is not square and symmetric with zero diagonal.
SparseMatrix normalize_adjacency(const SparseMatrix& adjacency);

// D^-1 A; isolated nodes get an all-zero row.
SparseMatrix mean_adjacency(const SparseMatrix& adjacency);

// The propagation matrix `kind` consumes: normalized for GCN, row-mean for
// SAGE.
SparseMatrix propagation_matrix(const SparseMatrix& adjacency, EncoderKind kind);

DenseMatrix adaptor_forward(const DenseMatrix& features,
                            const EncoderStack& stack);
// normalized: output of normalize_adjacency.
DenseMatrix gcn_forward(const SparseMatrix& normalized, const DenseMatrix& x,
                        const EncoderStack& stack);
// adjacency: raw binary adjacency.
DenseMatrix sage_forward(const SparseMatrix& adjacency, const DenseMatrix& x,
                         const EncoderStack& stack);
// adaptor then graph layers; propagation from propagation_matrix().
DenseMatrix encode(const SparseMatrix& propagation, const DenseMatrix& features,
                   const EncoderStack& stack);

// Stack parameters registered as tape leaves, in parameters() order.
struct TapedStack {
  std::vector<ad::Var> params;
};
TapedStack record_parameters(ad::Tape& tape, const EncoderStack& stack);
ad::Var encode(const SparseMatrix& propagation, ad::Var features,
               const EncoderStack& stack, const TapedStack& taped);

// "LGXP", u64 tensor count, then one LGX1 record per tensor in parameters()
// order. A sidecar <path>.json lists kind, names and shapes.
void save_checkpoint(const EncoderStack& stack, const std::filesystem::path& path);
EncoderStack load_checkpoint(const std::filesystem::path& path);

}  // namespace tagcl

#endif  // TAGCL_GRAPH_ENCODER_HPP_
