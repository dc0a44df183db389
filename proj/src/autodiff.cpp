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

#include "tagcl/autodiff.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace tagcl::ad {
namespace {

void require_same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw NumericError("autodiff: operands recorded on different tapes");
  }
}

void require_shape(bool ok, const char* op) {
  if (!ok) throw NumericError(std::string(op) + ": shape mismatch");
}

}  // namespace

const DenseMatrix& Var::value() const { return tape->value(*this); }

Var Tape::leaf(DenseMatrix value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(DenseMatrix value, std::initializer_list<Var> inputs,
               Backprop backprop) {
  Node node;
  node.value = std::move(value);
  const int self = static_cast<int>(nodes_.size());
  for (Var in : inputs) {
    if (in.tape != this) throw NumericError("autodiff: foreign operand");
    if (in.id >= self) throw NumericError("autodiff: cycle in graph");
    node.inputs.push_back(in.id);
    node.requires_grad = node.requires_grad || nodes_[in.id].requires_grad;
  }
  if (node.requires_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{this, self};
}

void Tape::accumulate(int id, const DenseMatrix& g) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

DenseMatrix Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id);
  if (node.grad.size() == 0) {
    return DenseMatrix::Zero(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw NumericError("backward: foreign loss");
  if (value(loss).rows() != 1 || value(loss).cols() != 1) {
    throw NumericError("backward: loss must be a scalar");
  }
  for (Node& node : nodes_) node.grad.resize(0, 0);
  backward_visits_ = 0;
  nodes_[loss.id].grad = DenseMatrix::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.size() == 0) continue;
    ++backward_visits_;
    if (node.backprop) node.backprop(*this, id);
  }
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  require_shape(a.cols() == b.rows(), "matmul");
  return a.tape->push(a.value() * b.value(), {a, b}, [a, b](Tape& t, int self) {
    const DenseMatrix& g = t.upstream(self);
    if (t.requires_grad(a.id)) t.accumulate(a.id, g * b.value().transpose());
    if (t.requires_grad(b.id)) t.accumulate(b.id, a.value().transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b);
  require_shape(a.cols() == b.cols(), "matmul_nt");
  return a.tape->push(a.value() * b.value().transpose(), {a, b},
                      [a, b](Tape& t, int self) {
                        const DenseMatrix& g = t.upstream(self);
                        if (t.requires_grad(a.id))
                          t.accumulate(a.id, g * b.value());
                        if (t.requires_grad(b.id))
                          t.accumulate(b.id, g.transpose() * a.value());
                      });
}

Var spmm(const SparseMatrix& s, Var b) {
  require_shape(s.cols() == b.rows(), "spmm");
  const SparseMatrix* sp = &s;
  return b.tape->push(s * b.value(), {b}, [sp, b](Tape& t, int self) {
    t.accumulate(b.id, DenseMatrix(sp->transpose() * t.upstream(self)));
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  return a.tape->push(a.value() + b.value(), {a, b}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.upstream(self));
    t.accumulate(b.id, t.upstream(self));
  });
}

Var scale(Var a, double c) {
  return a.tape->push(a.value() * c, {a}, [a, c](Tape& t, int self) {
    t.accumulate(a.id, t.upstream(self) * c);
  });
}

Var add_bias(Var x, Var bias) {
  require_same_tape(x, bias);
  require_shape(bias.rows() == 1 && bias.cols() == x.cols(), "add_bias");
  DenseMatrix out = x.value().rowwise() + bias.value().row(0);
  return x.tape->push(std::move(out), {x, bias}, [x, bias](Tape& t, int self) {
    const DenseMatrix& g = t.upstream(self);
    t.accumulate(x.id, g);
    t.accumulate(bias.id, g.colwise().sum());
  });
}

Var relu(Var x) {
  return x.tape->push(x.value().cwiseMax(0.0), {x}, [x](Tape& t, int self) {
    const DenseMatrix mask =
        (x.value().array() > 0.0).cast<double>().matrix();
    t.accumulate(x.id, t.upstream(self).cwiseProduct(mask));
  });
}

Var l2_normalize_rows(Var x) {
  const DenseMatrix& in = x.value();
  Vector norms = in.rowwise().norm();
  DenseMatrix out = in;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (norms(i) > 0) out.row(i) /= norms(i);
  }
  return x.tape->push(out, {x}, [x, norms, out](Tape& t, int self) {
    const DenseMatrix& g = t.upstream(self);
    DenseMatrix dx = DenseMatrix::Zero(g.rows(), g.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (norms(i) <= 0) continue;
      const double proj = out.row(i).dot(g.row(i));
      dx.row(i) = (g.row(i) - proj * out.row(i)) / norms(i);
    }
    t.accumulate(x.id, dx);
  });
}

Var gather_rows(Var x, std::span<const int> rows) {
  std::vector<int> idx(rows.begin(), rows.end());
  DenseMatrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= x.rows()) {
      throw NumericError("gather_rows: index out of range");
    }
    out.row(static_cast<Eigen::Index>(k)) = x.value().row(idx[k]);
  }
  return x.tape->push(std::move(out), {x}, [x, idx](Tape& t, int self) {
    const DenseMatrix& g = t.upstream(self);
    DenseMatrix dx = DenseMatrix::Zero(x.rows(), x.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      dx.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
    }
    t.accumulate(x.id, dx);
  });
}

Var diagonal(Var x) {
  require_shape(x.rows() == x.cols(), "diagonal");
  DenseMatrix out = x.value().diagonal();
  return x.tape->push(std::move(out), {x}, [x](Tape& t, int self) {
    DenseMatrix dx = DenseMatrix::Zero(x.rows(), x.cols());
    dx.diagonal() = t.upstream(self).col(0);
    t.accumulate(x.id, dx);
  });
}

Var pick(Var s, const std::vector<std::vector<int>>& columns) {
  require_shape(static_cast<Eigen::Index>(columns.size()) == s.rows(), "pick");
  const Eigen::Index m =
      columns.empty() ? 0 : static_cast<Eigen::Index>(columns[0].size());
  DenseMatrix out(s.rows(), m);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    require_shape(static_cast<Eigen::Index>(columns[i].size()) == m, "pick");
    for (Eigen::Index k = 0; k < m; ++k) {
      const int c = columns[i][k];
      if (c < 0 || c >= s.cols()) throw NumericError("pick: column range");
      out(i, k) = s.value()(i, c);
    }
  }
  return s.tape->push(std::move(out), {s}, [s, columns, m](Tape& t, int self) {
    const DenseMatrix& g = t.upstream(self);
    DenseMatrix ds = DenseMatrix::Zero(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      for (Eigen::Index k = 0; k < m; ++k) ds(i, columns[i][k]) += g(i, k);
    }
    t.accumulate(s.id, ds);
  });
}

Var hconcat(Var a, Var b) {
  require_same_tape(a, b);
  require_shape(a.rows() == b.rows(), "hconcat");
  DenseMatrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const Eigen::Index left = a.cols();
  return a.tape->push(std::move(out), {a, b}, [a, b, left](Tape& t, int self) {
    const DenseMatrix& g = t.upstream(self);
    t.accumulate(a.id, g.leftCols(left));
    t.accumulate(b.id, g.rightCols(g.cols() - left));
  });
}

Var sum(Var x) {
  DenseMatrix out(1, 1);
  out(0, 0) = x.value().sum();
  return x.tape->push(std::move(out), {x}, [x](Tape& t, int self) {
    t.accumulate(x.id, DenseMatrix::Constant(x.rows(), x.cols(),
                                             t.upstream(self)(0, 0)));
  });
}

Var squared_norm(Var x) {
  DenseMatrix out(1, 1);
  out(0, 0) = x.value().squaredNorm();
  return x.tape->push(std::move(out), {x}, [x](Tape& t, int self) {
    t.accumulate(x.id, 2.0 * t.upstream(self)(0, 0) * x.value());
  });
}

Var mean_of(std::span<const Var> scalars) {
  if (scalars.empty()) throw NumericError("mean_of: no terms");
  Var acc = scalars[0];
  for (std::size_t k = 1; k < scalars.size(); ++k) acc = add(acc, scalars[k]);
  return scale(acc, 1.0 / static_cast<double>(scalars.size()));
}

Var contrastive_nll(Var pos, Var neg, double tau_pos, double tau_neg) {
  require_same_tape(pos, neg);
  require_shape(pos.cols() == 1 && pos.rows() == neg.rows(), "contrastive_nll");
  if (neg.cols() < 1) throw NumericError("contrastive_nll: no negatives");
  if (!(tau_pos > 0) || !(tau_neg > 0)) {
    throw NumericError("contrastive_nll: temperature must be positive");
  }
  if (!pos.value().allFinite() || !neg.value().allFinite()) {
    throw NumericError("contrastive_nll: non-finite similarity");
  }
  const Eigen::Index n = pos.rows();
  const Eigen::Index m = neg.cols();
  // Row-wise softmax over [positive, negatives] kept for the backward pass.
  DenseMatrix probs(n, m + 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zpos = pos.value()(i, 0) / tau_pos;
    double zmax = zpos;
    for (Eigen::Index k = 0; k < m; ++k) {
      zmax = std::max(zmax, neg.value()(i, k) / tau_neg);
    }
    probs(i, 0) = std::exp(zpos - zmax);
    double denom = probs(i, 0);
    for (Eigen::Index k = 0; k < m; ++k) {
      probs(i, k + 1) = std::exp(neg.value()(i, k) / tau_neg - zmax);
      denom += probs(i, k + 1);
    }
    probs.row(i) /= denom;
    total += zmax + std::log(denom) - zpos;
  }
  DenseMatrix out(1, 1);
  out(0, 0) = total / static_cast<double>(n);
  return pos.tape->push(
      std::move(out), {pos, neg},
      [pos, neg, probs, tau_pos, tau_neg, n, m](Tape& t, int self) {
        const double g = t.upstream(self)(0, 0) / static_cast<double>(n);
        DenseMatrix dpos = (probs.col(0).array() - 1.0).matrix() *
                           (g / tau_pos);
        DenseMatrix dneg = probs.rightCols(m) * (g / tau_neg);
        t.accumulate(pos.id, dpos);
        t.accumulate(neg.id, dneg);
      });
}

std::vector<DenseMatrix> finite_diff_gradient(
    const std::function<double()>& f, std::span<DenseMatrix* const> params,
    double eps) {
  if (!(eps > 0)) throw NumericError("finite_diff_gradient: eps must be > 0");
  std::vector<DenseMatrix> grads;
  grads.reserve(params.size());
  for (DenseMatrix* p : params) {
    DenseMatrix g(p->rows(), p->cols());
    for (Eigen::Index k = 0; k < p->size(); ++k) {
      double& x = p->data()[k];
      const double saved = x;
      x = saved + eps;
      const double up = f();
      x = saved - eps;
      const double down = f();
      x = saved;
      g.data()[k] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace tagcl::ad
