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

#include "tagcl/contrastive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "tagcl/optim.hpp"

namespace tagcl {
namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;     // "init"
constexpr std::uint64_t kBatchStream = 0x6261746368;  // "batch"
constexpr std::uint64_t kNegStream = 0x6e6567;        // "neg"

double negative_temperature(const LossConfig& config) {
  return config.tau_on_negatives ? config.temperature : 1.0;
}

// Loss anchored on `anchor` rows with positives from `other`: sims against
// the anchor's own view and the other view.
ad::Var anchored_loss(ad::Var anchor, ad::Var other,
                      const std::vector<std::vector<int>>& negatives,
                      const LossConfig& config) {
  const ad::Var same_view = ad::matmul_nt(anchor, anchor);
  const ad::Var cross_view = ad::matmul_nt(anchor, other);
  const ad::Var pos = ad::diagonal(cross_view);
  // Columns [other-view-of-anchor-side negatives | cross-view negatives].
  const ad::Var neg = ad::hconcat(ad::pick(same_view, negatives),
                                  ad::pick(cross_view, negatives));
  return ad::contrastive_nll(pos, neg, config.temperature,
                             negative_temperature(config));
}

}  // namespace

void validate(const LossConfig& config) {
  if (!(config.temperature > 0) || !std::isfinite(config.temperature)) {
    throw ConfigError("loss.temperature must be a positive finite number");
  }
  if (config.negatives_per_target && *config.negatives_per_target < 1) {
    throw ConfigError("loss.negatives_per_target must be >= 1 or \"all\"");
  }
}

void validate(const TrainConfig& config) {
  validate(config.loss);
  if (config.batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
  if (config.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(config.learning_rate >= 0) || !std::isfinite(config.learning_rate)) {
    throw ConfigError("train.learning_rate must be a finite nonnegative number");
  }
  if (config.output_dim < 1) throw ConfigError("train.output_dim must be >= 1");
  for (int h : config.hidden) {
    if (h < 1) throw ConfigError("train.hidden widths must be >= 1");
  }
  if (config.adaptor.enabled && config.adaptor.out_dim < 1) {
    throw ConfigError("adaptor.out_dim must be >= 1");
  }
}

ad::Var info_nce(ad::Var anchor, ad::Var positive, ad::Var negatives_orig,
                 ad::Var negatives_aug, const LossConfig& config) {
  validate(config);
  const auto d = anchor.cols();
  if (anchor.rows() != 1 || positive.rows() != 1 || positive.cols() != d ||
      negatives_orig.cols() != d || negatives_aug.cols() != d ||
      negatives_orig.rows() != negatives_aug.rows()) {
    throw NumericError("info_nce: shape mismatch");
  }
  if (negatives_orig.rows() < 1) throw NumericError("info_nce: M must be >= 1");
  const ad::Var a = ad::l2_normalize_rows(anchor);
  const ad::Var p = ad::l2_normalize_rows(positive);
  const ad::Var no = ad::l2_normalize_rows(negatives_orig);
  const ad::Var na = ad::l2_normalize_rows(negatives_aug);
  const double tau_neg = negative_temperature(config);

  const ad::Var forward = ad::contrastive_nll(
      ad::matmul_nt(a, p),
      ad::hconcat(ad::matmul_nt(a, no), ad::matmul_nt(a, na)),
      config.temperature, tau_neg);
  if (!config.symmetric_views) return forward;
  const ad::Var backward_view = ad::contrastive_nll(
      ad::matmul_nt(p, a),
      ad::hconcat(ad::matmul_nt(p, na), ad::matmul_nt(p, no)),
      config.temperature, tau_neg);
  return ad::scale(ad::add(forward, backward_view), 0.5);
}

double info_nce_value(const RowVector& anchor, const RowVector& positive,
                      const DenseMatrix& negatives_orig,
                      const DenseMatrix& negatives_aug,
                      const LossConfig& config) {
  ad::Tape tape;
  return info_nce(tape.constant(anchor), tape.constant(positive),
                  tape.constant(negatives_orig), tape.constant(negatives_aug),
                  config)
      .value()(0, 0);
}

std::vector<std::vector<int>> plan_batches(int n, int batch_size, int epoch,
                                           std::uint64_t seed) {
  if (n < 2) throw ConfigError("plan_batches: need at least 2 nodes");
  if (batch_size < 2) throw ConfigError("plan_batches: batch_size must be >= 2");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(derive_seed(seed, kBatchStream),
                      static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order);
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  if (batches.size() > 1 && batches.back().size() < 2) {
    auto tail = std::move(batches.back());
    batches.pop_back();
    batches.back().insert(batches.back().end(), tail.begin(), tail.end());
  }
  return batches;
}

std::vector<int> sample_negatives(std::span<const int> batch, int target,
                                  std::optional<int> count, Rng& rng) {
  std::vector<int> candidates;
  bool found = false;
  for (int v : batch) {
    if (v == target) {
      found = true;
    } else {
      candidates.push_back(v);
    }
  }
  if (!found) throw ConfigError("sample_negatives: target not in batch");
  if (!count) return candidates;
  if (*count < 0 || *count > static_cast<int>(candidates.size())) {
    throw ConfigError("sample_negatives: requested " + std::to_string(*count) +
                      " negatives from " + std::to_string(candidates.size()) +
                      " candidates");
  }
  const auto picks = sample_without_replacement(
      rng, static_cast<int>(candidates.size()), *count);
  std::vector<int> out;
  out.reserve(picks.size());
  for (int k : picks) out.push_back(candidates[k]);
  return out;
}

std::vector<std::vector<int>> plan_negatives(std::span<const int> batch,
                                             std::optional<int> count,
                                             Rng& rng) {
  std::vector<int> positions(batch.size());
  std::iota(positions.begin(), positions.end(), 0);
  std::optional<int> effective = count;
  if (effective && *effective > static_cast<int>(batch.size()) - 1) {
    // A short final batch cannot supply M negatives; use all it has.
    effective = static_cast<int>(batch.size()) - 1;
  }
  std::vector<std::vector<int>> out;
  out.reserve(batch.size());
  for (int p = 0; p < static_cast<int>(batch.size()); ++p) {
    out.push_back(sample_negatives(positions, p, effective, rng));
  }
  return out;
}

ad::Var batch_loss(ad::Var orig, ad::Var aug, std::span<const int> batch,
                   const std::vector<std::vector<int>>& negatives,
                   const LossConfig& config) {
  if (negatives.size() != batch.size()) {
    throw NumericError("batch_loss: one negative list per target required");
  }
  const ad::Var z = ad::l2_normalize_rows(ad::gather_rows(orig, batch));
  const ad::Var zs = ad::l2_normalize_rows(ad::gather_rows(aug, batch));
  const ad::Var forward = anchored_loss(z, zs, negatives, config);
  if (!config.symmetric_views) return forward;
  return ad::scale(ad::add(forward, anchored_loss(zs, z, negatives, config)),
                   0.5);
}

double step_loss(const SparseMatrix& propagation, const FeatureMatrix& features,
                 const FeatureMatrix& augmented, const EncoderStack& stack,
                 std::span<const int> batch,
                 const std::vector<std::vector<int>>& negatives,
                 const LossConfig& config, std::vector<DenseMatrix>* grads) {
  ad::Tape tape;
  const auto taped = record_parameters(tape, stack);
  const ad::Var orig = encode(propagation, tape.constant(features), stack, taped);
  const ad::Var aug = encode(propagation, tape.constant(augmented), stack, taped);
  const ad::Var loss = batch_loss(orig, aug, batch, negatives, config);
  const double value = loss.value()(0, 0);
  if (grads) {
    tape.backward(loss);
    grads->clear();
    for (const auto& p : taped.params) grads->push_back(tape.grad(p));
  }
  return value;
}

EncoderStack initial_stack(const TrainConfig& config, int input_dim) {
  Rng rng(derive_seed(config.seed, kInitStream));
  EncoderDims dims;
  dims.input_dim = input_dim;
  dims.hidden = config.hidden;
  dims.output_dim = config.output_dim;
  return init_params(rng, dims, config.encoder, config.adaptor);
}

TrainResult train(const TextAttributedGraph& graph, const FeatureMatrix& features,
                  const FeatureMatrix& augmented, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate(config);
  const int n = graph.node_count();
  if (features.rows() != n || augmented.rows() != n) {
    throw NumericError("train: feature rows must equal the node count");
  }
  if (features.cols() != augmented.cols()) {
    throw NumericError("train: original and augmented widths differ");
  }
  if (!features.allFinite() || !augmented.allFinite()) {
    throw NumericError("train: non-finite input features");
  }

  const SparseMatrix propagation =
      propagation_matrix(graph.adjacency(), config.encoder);
  TrainResult result;
  result.stack = initial_stack(config, static_cast<int>(features.cols()));
  AdamState adam;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto batches = plan_batches(n, config.batch_size, epoch, config.seed);
    double total = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      Rng neg_rng(derive_seed(derive_seed(config.seed, kNegStream),
                              (static_cast<std::uint64_t>(epoch) << 32) | b));
      const auto negatives = plan_negatives(
          batches[b], config.loss.negatives_per_target, neg_rng);
      std::vector<DenseMatrix> grads;
      const double loss = step_loss(propagation, features, augmented,
                                    result.stack, batches[b], negatives,
                                    config.loss, &grads);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b));
      }
      const auto params = result.stack.parameters();
      adam_step(params, grads, adam, config.learning_rate);
      total += loss;
    }
    const double mean = total / static_cast<double>(batches.size());
    result.loss_trace.push_back(mean);
    result.epoch_seconds.push_back(std::chrono::duration<double>(
                                       std::chrono::steady_clock::now() - started)
                                       .count());
    if (on_epoch) on_epoch(epoch, mean);
  }

  result.embeddings = encode(propagation, features, result.stack);
  result.metadata = {
      {"batch_size", config.batch_size},
      {"epochs", config.epochs},
      {"learning_rate", config.learning_rate},
      {"seed", config.seed},
      {"temperature", config.loss.temperature},
      {"negatives_per_target",
       config.loss.negatives_per_target
           ? nlohmann::json(*config.loss.negatives_per_target)
           : nlohmann::json("all")},
      {"tau_on_negatives", config.loss.tau_on_negatives},
      {"symmetric_views", config.loss.symmetric_views},
      {"encoder", to_string(config.encoder)},
      {"layers", result.stack.layers.size()},
      {"hidden", config.hidden},
      {"output_dim", config.output_dim},
      {"adaptor", config.adaptor.enabled
                      ? nlohmann::json(config.adaptor.out_dim)
                      : nlohmann::json(nullptr)},
      {"similarity", "cosine"},
      {"optimizer", "adam(0.9, 0.999, 1e-8)"},
      {"activation", "relu between layers, identity after last"},
      {"normalization", to_string(config.encoder) == std::string_view("gcn")
                            ? "D^-1/2 (A+I) D^-1/2"
                            : "row mean over neighbors"},
      {"unspecified_defaults_flagged",
       {"layers", "hidden", "activation", "normalization", "temperature",
        "similarity", "optimizer"}}};
  return result;
}

}  // namespace tagcl
