// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "jscope/model.hpp"

namespace jscope {

using Dataset = std::vector<std::vector<TokenId>>;

/// Adam with bias correction and global-norm gradient clipping.
struct TrainParams {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;  // <= 0 disables clipping
  std::size_t warmup_steps = 0;
  std::size_t steps = 1000;
  std::size_t batch_size = 8;
  /// Fraction of sequences held out for evaluation. A dataset with a single
  /// sequence is evaluated on that sequence.
  double heldout_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> loss_curve;  // training batch loss per step
  double initial_heldout_loss = 0.0;
  double heldout_loss = 0.0;
  std::size_t train_sequences = 0;
  std::size_t heldout_sequences = 0;
};

struct TrainResult {
  Weights weights;
  TrainReport report;
};

/// Called after every step with (step, batch loss).
using TrainCallback = std::function<void(std::size_t, double)>;

/// Train from init_weights(config). Deterministic given config.seed and
/// params.seed. Throws ValidationError on an empty dataset or a sequence
/// shorter than two tokens.
TrainResult train(const ModelConfig& config, const Dataset& dataset, const TrainParams& params,
                  const TrainCallback& on_step = {});
TrainResult train(const ModelConfig& config, Weights initial, const Dataset& dataset, const TrainParams& params,
                  const TrainCallback& on_step = {});

/// Mean next-token cross-entropy (nats) over all positions of all sequences.
double mean_cross_entropy(const ModelConfig& config, const Weights& weights, const Dataset& sequences);

/// Deterministic train/held-out split used by train().
struct DatasetSplit {
  Dataset train;
  Dataset heldout;
};
DatasetSplit split_dataset(const Dataset& dataset, double heldout_fraction, std::uint64_t seed);

}  // namespace jscope
