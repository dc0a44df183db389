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

#include "tagcl/optim.hpp"

#include <cmath>
#include <string>

namespace tagcl {

void adam_step(std::span<DenseMatrix* const> params,
               std::span<const DenseMatrix> grads, AdamState& state,
               double learning_rate) {
  if (params.size() != grads.size()) {
    throw NumericError("adam_step: parameter/gradient count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->rows() != grads[k].rows() ||
        params[k]->cols() != grads[k].cols()) {
      throw NumericError("adam_step: shape mismatch for tensor " +
                         std::to_string(k));
    }
    if (!grads[k].allFinite()) {
      throw NumericError("adam_step: non-finite gradient in tensor " +
                         std::to_string(k) + " at step " +
                         std::to_string(state.step + 1));
    }
  }
  if (state.first_moment.empty()) {
    for (const DenseMatrix* p : params) {
      state.first_moment.push_back(DenseMatrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(DenseMatrix::Zero(p->rows(), p->cols()));
    }
  } else if (state.first_moment.size() != params.size()) {
    throw NumericError("adam_step: state does not match parameters");
  }

  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    DenseMatrix& m = state.first_moment[k];
    DenseMatrix& v = state.second_moment[k];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[k];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[k].cwiseProduct(grads[k]);
    params[k]->array() -= learning_rate * (m.array() / c1) /
                          ((v.array() / c2).sqrt() + state.epsilon);
  }
}

}  // namespace tagcl
