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

#ifndef TAGCL_MATRIX_HPP_
#define TAGCL_MATRIX_HPP_

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "tagcl/errors.hpp"

namespace tagcl {

template <typename Scalar>
using DenseMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using SparseMatrixT = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

using DenseMatrix = DenseMatrixT<double>;
using SparseMatrix = SparseMatrixT<double>;  // compressed row storage
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Node embeddings, one row per node.
using FeatureMatrix = DenseMatrix;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

// Rows scaled to unit Euclidean norm; zero rows stay zero.
template <typename Derived>
DenseMatrixT<typename Derived::Scalar> l2_normalize_rows(
    const Eigen::MatrixBase<Derived>& x) {
  DenseMatrixT<typename Derived::Scalar> out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto norm = out.row(i).norm();
    if (norm > 0) out.row(i) /= norm;
  }
  return out;
}

template <typename Derived>
DenseMatrixT<typename Derived::Scalar> relu(
    const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

// X with row vector `bias` added to every row.
template <typename Derived, typename BiasDerived>
DenseMatrixT<typename Derived::Scalar> add_bias(
    const Eigen::MatrixBase<Derived>& x,
    const Eigen::MatrixBase<BiasDerived>& bias) {
  if (bias.size() != x.cols()) throw NumericError("add_bias: width mismatch");
  const Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> row =
      bias.derived().reshaped(1, x.cols());
  return x.rowwise() + row;
}

template <typename Scalar>
DenseMatrixT<Scalar> matmul(const DenseMatrixT<Scalar>& a,
                            const DenseMatrixT<Scalar>& b) {
  if (a.cols() != b.rows()) throw NumericError("matmul: shape mismatch");
  return a * b;
}

template <typename Scalar>
DenseMatrixT<Scalar> sparse_dense_matmul(const SparseMatrixT<Scalar>& s,
                                         const DenseMatrixT<Scalar>& b) {
  if (s.cols() != b.rows()) {
    throw NumericError("sparse_dense_matmul: shape mismatch");
  }
  return s * b;
}

// Checks the CSR invariants: nondecreasing offsets ending at nnz and strictly
// increasing in-range column indices per row.
bool is_valid_csr(const SparseMatrix& s);

// Binary matrix file: "LGX1", u64 rows, u64 cols, row-major little-endian
// float64 values.
void write_matrix(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix read_matrix(const std::filesystem::path& path);

// Stream-level helpers shared with the checkpoint format.
void write_matrix_record(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_matrix_record(std::istream& in);

}  // namespace tagcl

#endif  // TAGCL_MATRIX_HPP_
