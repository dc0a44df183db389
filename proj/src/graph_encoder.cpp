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

#include "tagcl/graph_encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace tagcl {
namespace {

using nlohmann::json;

DenseMatrix glorot(Rng& rng, int fan_in, int fan_out) {
  const double bound = glorot_bound(fan_in, fan_out);
  DenseMatrix w(fan_in, fan_out);
  // Row-major fill so the stream maps to entries independently of storage.
  for (int r = 0; r < fan_in; ++r) {
    for (int c = 0; c < fan_out; ++c) w(r, c) = rng.uniform(-bound, bound);
  }
  return w;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw NumericError(what);
}

}  // namespace

std::string_view to_string(EncoderKind kind) {
  return kind == EncoderKind::kGcn ? "gcn" : "sage";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "gcn") return EncoderKind::kGcn;
  if (name == "sage" || name == "sage-mean") return EncoderKind::kSageMean;
  throw ConfigError("unknown encoder kind '" + std::string(name) +
                    "' (expected gcn or sage)");
}

int EncoderStack::input_dim() const {
  if (adaptor) return static_cast<int>(adaptor->weight.rows());
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.rows());
}

int EncoderStack::output_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.cols());
}

std::vector<DenseMatrix*> EncoderStack::parameters() {
  std::vector<DenseMatrix*> out;
  if (adaptor) {
    out.push_back(&adaptor->weight);
    out.push_back(&adaptor->bias);
  }
  for (auto& layer : layers) {
    out.push_back(&layer.weight);
    if (kind == EncoderKind::kSageMean) out.push_back(&layer.neighbor_weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<const DenseMatrix*> EncoderStack::parameters() const {
  auto mutable_params = const_cast<EncoderStack*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<std::string> EncoderStack::parameter_names() const {
  std::vector<std::string> names;
  if (adaptor) {
    names.push_back("adaptor.weight");
    names.push_back("adaptor.bias");
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto prefix = "layer" + std::to_string(k) + ".";
    names.push_back(prefix + "weight");
    if (kind == EncoderKind::kSageMean) names.push_back(prefix + "neighbor_weight");
    names.push_back(prefix + "bias");
  }
  return names;
}

std::size_t EncoderStack::parameter_count() const {
  std::size_t total = 0;
  for (const auto* p : parameters()) total += static_cast<std::size_t>(p->size());
  return total;
}

void EncoderStack::check() const {
  require(!layers.empty(), "encoder stack needs at least one layer");
  Eigen::Index width = -1;
  if (adaptor) {
    require(adaptor->bias.rows() == 1 &&
                adaptor->bias.cols() == adaptor->weight.cols(),
            "adaptor bias shape");
    width = adaptor->weight.cols();
  }
  for (const auto& layer : layers) {
    require(width < 0 || layer.weight.rows() == width, "layer input width");
    require(layer.bias.rows() == 1 && layer.bias.cols() == layer.weight.cols(),
            "layer bias shape");
    if (kind == EncoderKind::kSageMean) {
      require(layer.neighbor_weight.rows() == layer.weight.rows() &&
                  layer.neighbor_weight.cols() == layer.weight.cols(),
              "SAGE neighbor weight shape");
    } else {
      require(layer.neighbor_weight.size() == 0, "GCN layer has neighbor weight");
    }
    width = layer.weight.cols();
  }
}

double glorot_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

EncoderStack init_params(Rng& rng, const EncoderDims& dims, EncoderKind kind,
                         const AdaptorConfig& adaptor) {
  if (dims.input_dim < 1 || dims.output_dim < 1) {
    throw ConfigError("encoder dims must be positive");
  }
  EncoderStack stack;
  stack.kind = kind;
  int width = dims.input_dim;
  if (adaptor.enabled) {
    if (adaptor.out_dim < 1) throw ConfigError("adaptor.out_dim must be >= 1");
    stack.adaptor = LinearLayer{glorot(rng, width, adaptor.out_dim),
                                DenseMatrix::Zero(1, adaptor.out_dim)};
    width = adaptor.out_dim;
  }
  std::vector<int> outs = dims.hidden;
  outs.push_back(dims.output_dim);
  for (int out : outs) {
    if (out < 1) throw ConfigError("encoder hidden widths must be positive");
    EncoderLayer layer;
    layer.weight = glorot(rng, width, out);
    if (kind == EncoderKind::kSageMean) {
      layer.neighbor_weight = glorot(rng, width, out);
    }
    layer.bias = DenseMatrix::Zero(1, out);
    stack.layers.push_back(std::move(layer));
    width = out;
  }
  return stack;
}

SparseMatrix normalize_adjacency(const SparseMatrix& adjacency) {
  const auto n = adjacency.rows();
  require(adjacency.cols() == n, "normalize_adjacency: matrix not square");
  SparseMatrix transposed = adjacency.transpose();
  require((transposed - adjacency).norm() == 0.0,
          "normalize_adjacency: adjacency is not symmetric");
  require(adjacency.diagonal().cwiseAbs().sum() == 0.0,
          "normalize_adjacency: adjacency has self-loops");

  SparseMatrix with_loops = adjacency;
  for (Eigen::Index i = 0; i < n; ++i) with_loops.coeffRef(i, i) = 1.0;
  with_loops.makeCompressed();
  Vector degree(n);
  for (Eigen::Index i = 0; i < n; ++i) degree(i) = with_loops.row(i).sum();
  // One rounding per entry: 1 / sqrt(d_i d_j).
  for (Eigen::Index r = 0; r < n; ++r) {
    for (SparseMatrix::InnerIterator it(with_loops, r); it; ++it) {
      it.valueRef() /= std::sqrt(degree(r) * degree(it.col()));
    }
  }
  return with_loops;
}

SparseMatrix mean_adjacency(const SparseMatrix& adjacency) {
  SparseMatrix out = adjacency;
  out.makeCompressed();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double degree = out.row(r).sum();
    if (degree <= 0) continue;
    for (SparseMatrix::InnerIterator it(out, r); it; ++it) {
      it.valueRef() /= degree;
    }
  }
  return out;
}

SparseMatrix propagation_matrix(const SparseMatrix& adjacency, EncoderKind kind) {
  return kind == EncoderKind::kGcn ? normalize_adjacency(adjacency)
                                   : mean_adjacency(adjacency);
}

DenseMatrix adaptor_forward(const DenseMatrix& features,
                            const EncoderStack& stack) {
  if (!stack.adaptor) return features;
  require(features.cols() == stack.adaptor->weight.rows(),
          "adaptor_forward: feature width mismatch");
  return add_bias(matmul(features, stack.adaptor->weight), stack.adaptor->bias);
}

DenseMatrix gcn_forward(const SparseMatrix& normalized, const DenseMatrix& x,
                        const EncoderStack& stack) {
  require(stack.kind == EncoderKind::kGcn, "gcn_forward: stack is not GCN");
  require(normalized.rows() == x.rows(), "gcn_forward: node count mismatch");
  stack.check();
  DenseMatrix h = x;
  for (std::size_t k = 0; k < stack.layers.size(); ++k) {
    const auto& layer = stack.layers[k];
    require(h.cols() == layer.weight.rows(), "gcn_forward: width mismatch");
    h = add_bias(sparse_dense_matmul(normalized, DenseMatrix(h * layer.weight)),
                 layer.bias);
    if (k + 1 < stack.layers.size()) h = relu(h);
  }
  return h;
}

DenseMatrix sage_forward(const SparseMatrix& adjacency, const DenseMatrix& x,
                         const EncoderStack& stack) {
  require(stack.kind == EncoderKind::kSageMean, "sage_forward: stack is not SAGE");
  require(adjacency.rows() == x.rows(), "sage_forward: node count mismatch");
  stack.check();
  const SparseMatrix mean = mean_adjacency(adjacency);
  DenseMatrix h = x;
  for (std::size_t k = 0; k < stack.layers.size(); ++k) {
    const auto& layer = stack.layers[k];
    require(h.cols() == layer.weight.rows(), "sage_forward: width mismatch");
    const DenseMatrix neighbors = mean * h;
    h = add_bias(DenseMatrix(h * layer.weight + neighbors * layer.neighbor_weight),
                 layer.bias);
    if (k + 1 < stack.layers.size()) h = relu(h);
  }
  return h;
}

DenseMatrix encode(const SparseMatrix& propagation, const DenseMatrix& features,
                   const EncoderStack& stack) {
  ad::Tape tape;
  const auto taped = record_parameters(tape, stack);
  return encode(propagation, tape.constant(features), stack, taped).value();
}

TapedStack record_parameters(ad::Tape& tape, const EncoderStack& stack) {
  TapedStack taped;
  for (const DenseMatrix* p : stack.parameters()) {
    taped.params.push_back(tape.leaf(*p, true));
  }
  return taped;
}

ad::Var encode(const SparseMatrix& propagation, ad::Var features,
               const EncoderStack& stack, const TapedStack& taped) {
  stack.check();
  require(taped.params.size() == stack.parameters().size(),
          "encode: taped parameters do not match stack");
  require(propagation.rows() == features.rows() &&
              propagation.cols() == features.rows(),
          "encode: propagation/feature node count mismatch");
  std::size_t p = 0;
  ad::Var h = features;
  if (stack.adaptor) {
    h = ad::add_bias(ad::matmul(h, taped.params[p]), taped.params[p + 1]);
    p += 2;
  }
  for (std::size_t k = 0; k < stack.layers.size(); ++k) {
    if (stack.kind == EncoderKind::kGcn) {
      h = ad::add_bias(ad::spmm(propagation, ad::matmul(h, taped.params[p])),
                       taped.params[p + 1]);
      p += 2;
    } else {
      const ad::Var self = ad::matmul(h, taped.params[p]);
      const ad::Var nbr =
          ad::matmul(ad::spmm(propagation, h), taped.params[p + 1]);
      h = ad::add_bias(ad::add(self, nbr), taped.params[p + 2]);
      p += 3;
    }
    if (k + 1 < stack.layers.size()) h = ad::relu(h);
  }
  return h;
}

void save_checkpoint(const EncoderStack& stack,
                     const std::filesystem::path& path) {
  stack.check();
  const auto params = stack.parameters();
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write("LGXP", 4);
    const std::uint64_t count = params.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (const auto* p : params) write_matrix_record(out, *p);
    if (!out) throw ConfigError("write failed: " + path.string());
  }
  json sidecar;
  sidecar["kind"] = to_string(stack.kind);
  sidecar["adaptor"] = stack.adaptor.has_value();
  sidecar["layers"] = stack.layers.size();
  json tensors = json::array();
  const auto names = stack.parameter_names();
  for (std::size_t k = 0; k < params.size(); ++k) {
    tensors.push_back({{"name", names[k]},
                       {"rows", params[k]->rows()},
                       {"cols", params[k]->cols()}});
  }
  sidecar["tensors"] = tensors;
  json dims = json::array();
  dims.push_back(stack.input_dim());
  for (const auto& layer : stack.layers) dims.push_back(layer.weight.cols());
  sidecar["dims"] = dims;
  std::ofstream(path.string() + ".json", std::ios::trunc) << sidecar.dump(2)
                                                          << '\n';
}

EncoderStack load_checkpoint(const std::filesystem::path& path) {
  std::ifstream side(path.string() + ".json");
  if (!side) throw ConfigError("missing checkpoint sidecar for " + path.string());
  const json sidecar = json::parse(side);
  EncoderStack stack;
  stack.kind = parse_encoder_kind(sidecar.at("kind").get<std::string>());
  const bool has_adaptor = sidecar.at("adaptor").get<bool>();
  const auto layer_count = sidecar.at("layers").get<std::size_t>();

  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LGXP", 4) != 0) {
    throw ConfigError(path.string() + " is not an LGXP checkpoint");
  }
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  std::vector<DenseMatrix> tensors;
  for (std::uint64_t k = 0; k < count; ++k) {
    tensors.push_back(read_matrix_record(in));
  }
  std::size_t t = 0;
  const auto next = [&]() -> DenseMatrix {
    if (t >= tensors.size()) throw ConfigError("checkpoint has too few tensors");
    return tensors[t++];
  };
  if (has_adaptor) {
    LinearLayer adaptor;
    adaptor.weight = next();
    adaptor.bias = next();
    stack.adaptor = std::move(adaptor);
  }
  for (std::size_t k = 0; k < layer_count; ++k) {
    EncoderLayer layer;
    layer.weight = next();
    if (stack.kind == EncoderKind::kSageMean) layer.neighbor_weight = next();
    layer.bias = next();
    stack.layers.push_back(std::move(layer));
  }
  if (t != tensors.size()) throw ConfigError("checkpoint has extra tensors");
  stack.check();
  return stack;
}

}  // namespace tagcl
