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

#ifndef TAGCL_CONTRASTIVE_HPP_
#define TAGCL_CONTRASTIVE_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "tagcl/autodiff.hpp"
#include "tagcl/graph.hpp"
#include "tagcl/graph_encoder.hpp"
#include "tagcl/rng.hpp"

namespace tagcl {

struct LossConfig {
  double temperature = 0.5;
  // Negatives sampled per target from its batch; nullopt means every other
  // node of the batch.
  std::optional<int> negatives_per_target;
  // When off, negative logits are not divided by the temperature.
  bool tau_on_negatives = true;
  // Average with the loss anchored on the augmented view.
  bool symmetric_views = false;
};

struct TrainConfig {
  int batch_size = 512;
  int epochs = 10;
  double learning_rate = 2e-5;
  std::uint64_t seed = 0;
  LossConfig loss;
  AdaptorConfig adaptor;
  EncoderKind encoder = EncoderKind::kGcn;
  std::vector<int> hidden = {256};
  int output_dim = 256;
};

void validate(const LossConfig& config);
void validate(const TrainConfig& config);

struct TrainResult {
  EncoderStack stack;
  FeatureMatrix embeddings;  // original view through the trained encoder
  std::vector<double> loss_trace;     // mean loss per epoch
  std::vector<double> epoch_seconds;  // wall clock per epoch
  nlohmann::json metadata;
};

// u.v / (|u| |v|); 0 when either vector is zero.
template <typename DerivedU, typename DerivedV>
double cosine_sim(const Eigen::MatrixBase<DerivedU>& u,
                  const Eigen::MatrixBase<DerivedV>& v) {
  if (u.size() != v.size()) throw NumericError("cosine_sim: length mismatch");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return u.reshaped().dot(v.reshaped()) / (nu * nv);
}

// InfoNCE loss of one target. anchor and positive are 1 x d; the negative
// sets are M x d rows taken from the original and augmented views.
ad::Var info_nce(ad::Var anchor, ad::Var positive, ad::Var negatives_orig,
                 ad::Var negatives_aug, const LossConfig& config);

// Value-only convenience wrapper.
double info_nce_value(const RowVector& anchor, const RowVector& positive,
                      const DenseMatrix& negatives_orig,
                      const DenseMatrix& negatives_aug,
                      const LossConfig& config);

// Seeded shuffle of 0..n-1 cut into batches; a trailing batch of one node is
// merged into its predecessor.
std::vector<std::vector<int>> plan_batches(int n, int batch_size, int epoch,
                                           std::uint64_t seed);

// Negatives for `target` drawn from batch \ {target}, in batch order. With
// count == nullopt every other member is returned.
std::vector<int> sample_negatives(std::span<const int> batch, int target,
                                  std::optional<int> count, Rng& rng);

// Mean InfoNCE loss over a batch. `orig` and `aug` are the encoder outputs
// for all nodes; negatives[p] lists batch positions (not node ids) used as
// negatives for the target at position p.
ad::Var batch_loss(ad::Var orig, ad::Var aug, std::span<const int> batch,
                   const std::vector<std::vector<int>>& negatives,
                   const LossConfig& config);

// Deterministic negatives for every position of a batch.
std::vector<std::vector<int>> plan_negatives(std::span<const int> batch,
                                             std::optional<int> count,
                                             Rng& rng);

// Loss of one training step for the given stack; used by train() and by
// gradient checks. When `grads` is non-null it receives d loss / d params in
// parameters() order.
double step_loss(const SparseMatrix& propagation, const FeatureMatrix& features,
                 const FeatureMatrix& augmented, const EncoderStack& stack,
                 std::span<const int> batch,
                 const std::vector<std::vector<int>>& negatives,
                 const LossConfig& config,
                 std::vector<DenseMatrix>* grads = nullptr);

// Called after every epoch with (epoch, mean loss).
using EpochCallback = std::function<void(int, double)>;

// Contrastive training of a fresh encoder stack on the two views, then an
// evaluation pass over the original view.
TrainResult train(const TextAttributedGraph& graph, const FeatureMatrix& features,
                  const FeatureMatrix& augmented, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// The stack train() starts from for this config and input width.
EncoderStack initial_stack(const TrainConfig& config, int input_dim);

}  // namespace tagcl

#endif  // TAGCL_CONTRASTIVE_HPP_
