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

#ifndef TAGCL_AUTODIFF_HPP_
#define TAGCL_AUTODIFF_HPP_

#include <functional>
#include <span>
#include <vector>

#include "tagcl/matrix.hpp"

namespace tagcl::ad {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const DenseMatrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so every operand
// has a smaller id than its consumer and reverse id order is a reverse
// topological order. One tape per training step; not thread-safe.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A leaf holding `value`. Gradients are kept only when requires_grad.
  Var leaf(DenseMatrix value, bool requires_grad = true);
  Var constant(DenseMatrix value) { return leaf(std::move(value), false); }

  const DenseMatrix& value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient of the last backward() target with respect to v; zeros if v
  // did not contribute.
  DenseMatrix grad(Var v) const;

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be 1x1. Gradients
  // from a previous call are cleared first.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  std::size_t backward_visits() const { return backward_visits_; }

  // Records an op result. Used by the op implementations.
  Var push(DenseMatrix value, std::initializer_list<Var> inputs,
           Backprop backprop);
  void accumulate(int id, const DenseMatrix& g);
  const DenseMatrix& upstream(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    DenseMatrix value;
    DenseMatrix grad;
    bool requires_grad = false;
    std::vector<int> inputs;
    Backprop backprop;
  };
  std::vector<Node> nodes_;
  std::size_t backward_visits_ = 0;
};

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
// s * b with s held constant. `s` must outlive the tape.
Var spmm(const SparseMatrix& s, Var b);
Var add(Var a, Var b);
Var scale(Var a, double c);
// Adds the 1 x cols row `bias` to every row of x.
Var add_bias(Var x, Var bias);
Var relu(Var x);
// Unit-norm rows; a zero row maps to zero with zero gradient.
Var l2_normalize_rows(Var x);
Var gather_rows(Var x, std::span<const int> rows);
// n x 1 column of the main diagonal of a square matrix.
Var diagonal(Var x);
// out(i, k) = s(i, columns[i][k]); every row must pick the same count.
Var pick(Var s, const std::vector<std::vector<int>>& columns);
Var hconcat(Var a, Var b);
Var sum(Var x);
Var squared_norm(Var x);
Var mean_of(std::span<const Var> scalars);

// Mean over rows i of
//   logsumexp(pos_i / tau_pos, neg_i* / tau_neg) - pos_i / tau_pos,
// i.e. the InfoNCE negative log-likelihood of the positive logit against
// the row's negatives. pos is n x 1, neg is n x m with m >= 1.
Var contrastive_nll(Var pos, Var neg, double tau_pos, double tau_neg);

// Central-difference gradient of f with respect to every entry of every
// matrix in params. f is re-evaluated with params perturbed in place; they
// are restored before returning.
std::vector<DenseMatrix> finite_diff_gradient(
    const std::function<double()>& f, std::span<DenseMatrix* const> params,
    double eps);

}  // namespace tagcl::ad

#endif  // TAGCL_AUTODIFF_HPP_
