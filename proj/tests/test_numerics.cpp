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

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "tagcl/autodiff.hpp"
#include "tagcl/errors.hpp"
#include "tagcl/matrix.hpp"
#include "tagcl/optim.hpp"
#include "tagcl/rng.hpp"

using namespace tagcl;
using tagcl::testing::TempDir;

namespace {

SparseMatrix sparse_from_dense(const DenseMatrix& d) {
  return d.sparseView();
}

}  // namespace

TEST_CASE("relu zeroes negatives and keeps the rest") {
  DenseMatrix x(1, 4);
  x << -1, 0, 2, -0.5;
  DenseMatrix expected(1, 4);
  expected << 0, 0, 2, 0;
  CHECK(relu(x) == expected);
}

TEST_CASE("l2_normalize_rows gives unit rows and leaves zero rows alone") {
  DenseMatrix x(2, 2);
  x << 3, 4, 0, 0;
  const DenseMatrix y = l2_normalize_rows(x);
  CHECK(y(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(y(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(y.row(1).norm() == 0.0);
}

TEST_CASE("add_bias broadcasts across rows and checks width") {
  DenseMatrix x = DenseMatrix::Zero(3, 2);
  DenseMatrix b(1, 2);
  b << 1, -2;
  const DenseMatrix y = add_bias(x, b);
  for (int i = 0; i < 3; ++i) {
    CHECK(y(i, 0) == 1);
    CHECK(y(i, 1) == -2);
  }
  CHECK_THROWS_AS(add_bias(x, DenseMatrix::Zero(1, 3)), NumericError);
}

TEST_CASE("matmul rejects mismatched shapes") {
  CHECK_THROWS_AS(matmul<double>(DenseMatrix::Zero(2, 3), DenseMatrix::Zero(2, 3)),
                  NumericError);
}

TEST_CASE("sparse identity times B is B") {
  Rng rng(3);
  const DenseMatrix b = testing::random_matrix(rng, 5, 3);
  SparseMatrix eye(5, 5);
  eye.setIdentity();
  CHECK(sparse_dense_matmul(eye, b) == b);
  CHECK(is_valid_csr(eye));
}

TEST_CASE("sparse product matches dense product") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix a = testing::random_matrix(rng, 8, 6);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (rng.uniform() < 0.7) a.data()[i] = 0;
    }
    const DenseMatrix b = testing::random_matrix(rng, 6, 4);
    const DenseMatrix got = sparse_dense_matmul(sparse_from_dense(a), b);
    CHECK(testing::max_abs_diff(got, testing::naive_matmul(testing::to_rows(a),
                                                           testing::to_rows(b))) <=
          1e-12);
  }
}

TEST_CASE("matrix files round-trip bit for bit") {
  TempDir dir;
  Rng rng(5);
  const DenseMatrix m = testing::random_matrix(rng, 7, 3);
  write_matrix(dir / "m.lgx", m);
  CHECK(read_matrix(dir / "m.lgx") == m);

  const DenseMatrix empty(0, 4);
  write_matrix(dir / "e.lgx", empty);
  const DenseMatrix back = read_matrix(dir / "e.lgx");
  CHECK(back.rows() == 0);
  CHECK(back.cols() == 4);
}

TEST_CASE("corrupt matrix files are rejected") {
  TempDir dir;
  {
    std::ofstream out(dir / "bad.lgx", std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS(read_matrix(dir / "bad.lgx"));
  std::stringstream truncated;
  write_matrix_record(truncated, DenseMatrix::Ones(2, 2));
  std::string bytes = truncated.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream in(bytes);
  CHECK_THROWS(read_matrix_record(in));
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("uniform stays in range and has the right mean") {
  Rng rng(9);
  double total = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    total += u;
  }
  // Standard error of the mean is sqrt(1/12 / n) ~ 6.5e-4.
  CHECK(std::abs(total / n - 0.5) < 4 * 6.5e-4);
}

TEST_CASE("normal has zero mean and unit variance") {
  Rng rng(10);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("sample_without_replacement is uniform over subsets") {
  Rng rng(7);
  std::map<std::vector<int>, int> counts;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    const auto s = sample_without_replacement(rng, 5, 2);
    REQUIRE(s.size() == 2);
    REQUIRE(s[0] < s[1]);
    ++counts[s];
  }
  // 10 subsets, p = 0.1 each; sigma = sqrt(n p (1 - p)) ~ 94.9.
  CHECK(counts.size() == 10);
  for (const auto& [subset, c] : counts) {
    CHECK(std::abs(c - 10000) < 3 * 94.9);
  }
  CHECK(sample_without_replacement(rng, 3, 0).empty());
  CHECK(sample_without_replacement(rng, 3, 3) == std::vector<int>{0, 1, 2});
  CHECK_THROWS(sample_without_replacement(rng, 3, 4));
  CHECK_THROWS(sample_without_replacement(rng, 3, -1));
}

TEST_CASE("backward of sum gives ones") {
  ad::Tape tape;
  Rng rng(1);
  auto x = tape.leaf(testing::random_matrix(rng, 3, 2));
  tape.backward(ad::sum(x));
  CHECK(tape.grad(x) == DenseMatrix::Ones(3, 2));
}

TEST_CASE("backward of squared norm gives 2x") {
  ad::Tape tape;
  Rng rng(2);
  const DenseMatrix v = testing::random_matrix(rng, 4, 3);
  auto x = tape.leaf(v);
  tape.backward(ad::squared_norm(x));
  CHECK((tape.grad(x) - 2 * v).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("backward visits every node once and clears old gradients") {
  ad::Tape tape;
  auto x = tape.leaf(DenseMatrix::Constant(1, 1, 3.0));
  // y = x*x + x uses x twice.
  auto y = ad::add(ad::matmul(x, x), x);
  tape.backward(y);
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(7.0));
  CHECK(tape.backward_visits() == tape.size());
  tape.backward(y);
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(7.0));
}

TEST_CASE("unused leaves have zero gradient and constants are skipped") {
  ad::Tape tape;
  auto x = tape.leaf(DenseMatrix::Ones(2, 2));
  auto unused = tape.leaf(DenseMatrix::Ones(3, 1));
  auto c = tape.constant(DenseMatrix::Ones(2, 2));
  tape.backward(ad::sum(ad::add(x, c)));
  CHECK(tape.grad(unused) == DenseMatrix::Zero(3, 1));
  CHECK(tape.grad(c) == DenseMatrix::Zero(2, 2));
}

TEST_CASE("backward requires a scalar") {
  ad::Tape tape;
  auto x = tape.leaf(DenseMatrix::Ones(2, 2));
  CHECK_THROWS(tape.backward(x));
}

TEST_CASE("every op agrees with finite differences") {
  Rng rng(21);
  DenseMatrix a = testing::random_matrix(rng, 4, 3);
  DenseMatrix b = testing::random_matrix(rng, 3, 5);
  DenseMatrix c = testing::random_matrix(rng, 4, 5);
  DenseMatrix bias = testing::random_matrix(rng, 1, 5);
  DenseMatrix s_dense = testing::random_matrix(rng, 4, 4);
  const SparseMatrix s = s_dense.sparseView();
  const std::vector<int> rows = {3, 0, 3, 1};
  const std::vector<std::vector<int>> cols = {{1, 2}, {0, 3}, {3, 3}, {2, 0}};

  auto build = [&](ad::Tape& tape, std::vector<ad::Var>& leaves) {
    leaves = {tape.leaf(a), tape.leaf(b), tape.leaf(c), tape.leaf(bias)};
    auto ab = ad::matmul(leaves[0], leaves[1]);
    auto h = ad::add_bias(ad::add(ab, ad::scale(leaves[2], 0.7)), leaves[3]);
    auto g = ad::spmm(s, ad::relu(h));
    auto n = ad::l2_normalize_rows(g);
    auto sim = ad::matmul_nt(n, ad::l2_normalize_rows(leaves[2]));
    auto picked = ad::pick(ad::gather_rows(sim, rows), cols);
    auto pos = ad::diagonal(sim);
    auto neg = ad::hconcat(picked, ad::gather_rows(sim, rows));
    auto loss = ad::contrastive_nll(pos, neg, 0.5, 0.8);
    std::vector<ad::Var> parts = {loss, ad::scale(ad::squared_norm(n), 0.1)};
    return ad::sum(ad::hconcat(parts[0], parts[1]));
  };

  ad::Tape tape;
  std::vector<ad::Var> leaves;
  tape.backward(build(tape, leaves));

  std::vector<DenseMatrix*> params = {&a, &b, &c, &bias};
  const auto numeric = ad::finite_diff_gradient(
      [&] {
        ad::Tape t;
        std::vector<ad::Var> l;
        return t.value(build(t, l))(0, 0);
      },
      params, 1e-6);
  for (std::size_t p = 0; p < params.size(); ++p) {
    const DenseMatrix analytic = tape.grad(leaves[p]);
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      CHECK(testing::relative_error(analytic.data()[i], numeric[p].data()[i],
                                    1e-6) <= 1e-5);
    }
  }
}

TEST_CASE("mean_of averages scalars") {
  ad::Tape tape;
  std::vector<ad::Var> xs = {tape.leaf(DenseMatrix::Constant(1, 1, 1.0)),
                             tape.leaf(DenseMatrix::Constant(1, 1, 4.0))};
  auto m = ad::mean_of(xs);
  CHECK(tape.value(m)(0, 0) == 2.5);
  tape.backward(m);
  CHECK(tape.grad(xs[0])(0, 0) == 0.5);
}

TEST_CASE("contrastive_nll rejects bad inputs") {
  ad::Tape tape;
  auto pos = tape.leaf(DenseMatrix::Zero(2, 1));
  auto neg = tape.leaf(DenseMatrix::Zero(2, 3));
  auto none = tape.leaf(DenseMatrix::Zero(2, 0));
  CHECK_THROWS_AS(ad::contrastive_nll(pos, neg, 0.0, 0.5), std::exception);
  CHECK_THROWS_AS(ad::contrastive_nll(pos, none, 0.5, 0.5), std::exception);
  auto nan = tape.leaf(DenseMatrix::Constant(2, 1, std::nan("")));
  CHECK_THROWS_AS(ad::contrastive_nll(nan, neg, 0.5, 0.5), NumericError);
}

TEST_CASE("finite_diff_gradient restores parameters") {
  DenseMatrix w = DenseMatrix::Constant(2, 2, 0.3);
  const DenseMatrix before = w;
  std::vector<DenseMatrix*> params = {&w};
  const auto g = ad::finite_diff_gradient([&] { return w.squaredNorm(); },
                                          params, 1e-5);
  CHECK(w == before);
  CHECK(g[0](0, 0) == doctest::Approx(0.6).epsilon(1e-8));
}

TEST_CASE("finite differences on closed-form functions") {
  DenseMatrix x = DenseMatrix::Constant(1, 1, 3.0);
  std::vector<DenseMatrix*> params = {&x};
  CHECK(std::abs(ad::finite_diff_gradient([&] { return x(0, 0) * x(0, 0); },
                                          params, 1e-5)[0](0, 0) -
                 6.0) <= 1e-6);
  CHECK(std::abs(ad::finite_diff_gradient([] { return 2.5; }, params, 1e-5)[0](0, 0)) <=
        1e-9);
  x(0, 0) = 0.7;
  CHECK(std::abs(ad::finite_diff_gradient([&] { return std::sin(x(0, 0)); }, params,
                                          1e-5)[0](0, 0) -
                 std::cos(0.7)) <= 1e-8);
}

TEST_CASE("adam with zero gradient leaves parameters and counts the step") {
  DenseMatrix w = DenseMatrix::Constant(2, 2, 0.25);
  std::vector<DenseMatrix*> params = {&w};
  std::vector<DenseMatrix> g = {DenseMatrix::Zero(2, 2)};
  AdamState state;
  adam_step(params, g, state, 0.1);
  CHECK(w == DenseMatrix::Constant(2, 2, 0.25));
  CHECK(state.step == 1);
}

TEST_CASE("adam trajectories are bitwise reproducible") {
  auto run = [] {
    Rng rng(8);
    DenseMatrix w = testing::random_matrix(rng, 3, 3);
    std::vector<DenseMatrix*> params = {&w};
    AdamState state;
    for (int i = 0; i < 50; ++i) {
      std::vector<DenseMatrix> g = {w.array().sin().matrix()};
      adam_step(params, g, state, 0.01);
    }
    return w;
  };
  CHECK(run() == run());
}

TEST_CASE("adam first step moves each weight by lr against the gradient sign") {
  DenseMatrix w = DenseMatrix::Zero(1, 2);
  DenseMatrix g(1, 2);
  g << 1.0, -3.0;
  std::vector<DenseMatrix*> params = {&w};
  std::vector<DenseMatrix> grads = {g};
  AdamState state;
  adam_step(params, grads, state, 0.1);
  // m_hat = g, v_hat = g^2 so the step is lr * g / (|g| + eps).
  CHECK(w(0, 0) == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(w(0, 1) == doctest::Approx(0.1 * 3.0 / (3.0 + 1e-8)).epsilon(1e-15));
  CHECK(state.step == 1);
}

TEST_CASE("adam second step matches hand-computed bias correction") {
  DenseMatrix w = DenseMatrix::Zero(1, 1);
  std::vector<DenseMatrix*> params = {&w};
  AdamState state;
  std::vector<DenseMatrix> g1 = {DenseMatrix::Constant(1, 1, 1.0)};
  std::vector<DenseMatrix> g2 = {DenseMatrix::Constant(1, 1, 2.0)};
  adam_step(params, g1, state, 0.1);
  adam_step(params, g2, state, 0.1);
  const double m = 0.9 * 0.1 + 0.1 * 2.0;
  const double v = 0.999 * 0.001 + 0.001 * 4.0;
  const double m_hat = m / (1 - 0.81);
  const double v_hat = v / (1 - 0.999 * 0.999);
  const double expected = -0.1 / (1 + 1e-8) - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8);
  CHECK(w(0, 0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("adam minimizes a quadratic") {
  DenseMatrix w = DenseMatrix::Constant(3, 1, 5.0);
  std::vector<DenseMatrix*> params = {&w};
  AdamState state;
  for (int i = 0; i < 2000; ++i) {
    std::vector<DenseMatrix> g = {2.0 * (w.array() - 1.0).matrix()};
    adam_step(params, g, state, 0.05);
  }
  CHECK((w.array() - 1.0).abs().maxCoeff() < 1e-3);
}

TEST_CASE("adam rejects non-finite gradients and shape mismatches") {
  DenseMatrix w = DenseMatrix::Zero(1, 1);
  std::vector<DenseMatrix*> params = {&w};
  AdamState state;
  std::vector<DenseMatrix> bad = {DenseMatrix::Constant(1, 1, INFINITY)};
  CHECK_THROWS_AS(adam_step(params, bad, state, 0.1), NumericError);
  std::vector<DenseMatrix> wrong = {DenseMatrix::Zero(2, 1)};
  CHECK_THROWS_AS(adam_step(params, wrong, state, 0.1), NumericError);
}
