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

#ifndef TAGCL_OPTIM_HPP_
#define TAGCL_OPTIM_HPP_

#include <span>
#include <vector>

#include "tagcl/matrix.hpp"

namespace tagcl {

struct AdamState {
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<DenseMatrix> first_moment;
  std::vector<DenseMatrix> second_moment;
};

// One Adam update with bias correction, in place. Moments are created on the
// first call. Throws NumericError on shape mismatch or non-finite gradients.
void adam_step(std::span<DenseMatrix* const> params,
               std::span<const DenseMatrix> grads, AdamState& state,
               double learning_rate);

}  // namespace tagcl

#endif  // TAGCL_OPTIM_HPP_
