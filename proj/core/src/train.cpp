// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jscope/error.hpp"
#include "jscope/ops.hpp"
#include "jscope/random.hpp"

namespace jscope {
namespace {

constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kBatchStream = 12;

void check_dataset(const ModelConfig& config, const Dataset& dataset) {
  if (dataset.empty()) throw ValidationError("train: empty dataset");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& seq = dataset[i];
    if (seq.size() < 2) throw ValidationError("train: sequence " + std::to_string(i) + " has fewer than 2 tokens");
    if (seq.size() > config.max_seq_len) {
      throw ValidationError("train: sequence " + std::to_string(i) + " length " + std::to_string(seq.size()) +
                            " exceeds max_seq_len " + std::to_string(config.max_seq_len));
    }
    for (TokenId t : seq) {
      if (t >= config.vocab_size) {
        throw ValidationError("train: sequence " + std::to_string(i) + " contains token " + std::to_string(t) +
                              " >= vocab_size " + std::to_string(config.vocab_size));
      }
    }
  }
}

Tensor sequence_loss(const ModelConfig& config, const Weights& weights, const std::vector<TokenId>& seq) {
  const std::span<const TokenId> inputs(seq.data(), seq.size() - 1);
  std::vector<long> targets(seq.begin() + 1, seq.end());
  const Tensor x = ops::gather_rows(weights.embedding, inputs);
  return ops::cross_entropy(sequence_logits(config, weights, x), targets);
}

}  // namespace

DatasetSplit split_dataset(const Dataset& dataset, double heldout_fraction, std::uint64_t seed) {
  DatasetSplit split;
  if (dataset.size() < 2 || heldout_fraction <= 0.0) {
    split.train = dataset;
    split.heldout = dataset;
    return split;
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(derive_seed(seed, kSplitStream));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.next_below(i)]);
  auto n_held = static_cast<std::size_t>(std::ceil(heldout_fraction * static_cast<double>(dataset.size())));
  n_held = std::clamp<std::size_t>(n_held, 1, dataset.size() - 1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_held ? split.heldout : split.train).push_back(dataset[order[i]]);
  }
  return split;
}

double mean_cross_entropy(const ModelConfig& config, const Weights& weights, const Dataset& sequences) {
  check_dataset(config, sequences);
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    const std::size_t n = seq.size() - 1;
    total += sequence_loss(config, weights, seq).item() * static_cast<double>(n);
    count += n;
  }
  return total / static_cast<double>(count);
}

TrainResult train(const ModelConfig& config, const Dataset& dataset, const TrainParams& params,
                  const TrainCallback& on_step) {
  return train(config, init_weights(config), dataset, params, on_step);
}

TrainResult train(const ModelConfig& config, Weights initial, const Dataset& dataset, const TrainParams& params,
                  const TrainCallback& on_step) {
  validate_weights(config, initial);
  check_dataset(config, dataset);
  if (params.batch_size == 0) throw ValidationError("train: batch_size must be positive");
  if (!(params.learning_rate > 0.0)) throw ValidationError("train: learning_rate must be positive");

  const DatasetSplit split = split_dataset(dataset, params.heldout_fraction, params.seed);
  TrainResult result;
  result.report.train_sequences = split.train.size();
  result.report.heldout_sequences = split.heldout.size();
  result.report.initial_heldout_loss = mean_cross_entropy(config, initial, split.heldout);

  Weights weights = std::move(initial);
  std::vector<std::vector<double>> m1, m2;
  weights.for_each([&](const std::string&, const Tensor& t) {
    m1.emplace_back(t.size(), 0.0);
    m2.emplace_back(t.size(), 0.0);
  });

  CounterRng batch_rng(derive_seed(params.seed, kBatchStream));
  for (std::size_t step = 0; step < params.steps; ++step) {
    Tape tape;
    const Weights live = attach(weights, tape);
    std::vector<Tensor> losses;
    for (std::size_t b = 0; b < params.batch_size; ++b) {
      const auto& seq = split.train[batch_rng.next_below(split.train.size())];
      losses.push_back(sequence_loss(config, live, seq));
    }
    Tensor loss = losses[0];
    for (std::size_t b = 1; b < losses.size(); ++b) loss = ops::add(loss, losses[b]);
    loss = ops::scale(loss, 1.0 / static_cast<double>(losses.size()));
    const double loss_value = loss.item();
    if (!std::isfinite(loss_value)) throw NumericalError("train: non-finite loss at step " + std::to_string(step));

    const Gradients grads = tape.backward(loss);
    std::vector<Tensor> g;
    double sq = 0.0;
    live.for_each([&](const std::string&, const Tensor& t) {
      g.push_back(grads.of(t));
      for (double v : g.back().data()) sq += v * v;
    });
    const double norm = std::sqrt(sq);
    const double clip = (params.grad_clip > 0.0 && norm > params.grad_clip) ? params.grad_clip / norm : 1.0;

    const double t = static_cast<double>(step + 1);
    const double warm = params.warmup_steps == 0 ? 1.0 : std::min(1.0, t / static_cast<double>(params.warmup_steps));
    const double lr = params.learning_rate * warm;
    const double c1 = 1.0 - std::pow(params.beta1, t);
    const double c2 = 1.0 - std::pow(params.beta2, t);
    std::size_t k = 0;
    weights.for_each([&](const std::string&, Tensor& w) {
      std::vector<double> next(w.values());
      const auto gk = g[k].data();
      auto& a = m1[k];
      auto& b = m2[k];
      for (std::size_t i = 0; i < next.size(); ++i) {
        const double gi = gk[i] * clip;
        a[i] = params.beta1 * a[i] + (1.0 - params.beta1) * gi;
        b[i] = params.beta2 * b[i] + (1.0 - params.beta2) * gi * gi;
        next[i] -= lr * (a[i] / c1) / (std::sqrt(b[i] / c2) + params.adam_eps);
      }
      w = Tensor(w.shape(), std::move(next));
      ++k;
    });

    result.report.loss_curve.push_back(loss_value);
    if (on_step) on_step(step, loss_value);
  }

  result.report.heldout_loss = mean_cross_entropy(config, weights, split.heldout);
  result.weights = std::move(weights);
  return result;
}

}  // namespace jscope
