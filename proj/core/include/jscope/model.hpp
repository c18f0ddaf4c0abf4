// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jscope/tensor.hpp"
#include "jscope/vocab.hpp"

namespace jscope {

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  std::size_t vocab_size = vocab::kSize;
  std::size_t max_seq_len = 512;
  std::uint64_t seed = 0;
  double rope_base = 10000.0;
  double norm_eps = 1e-6;

  /// Throws ValidationError on zero extents, n_heads not dividing d_model,
  /// or odd head width (rotary pairs columns).
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LayerWeights {
  Tensor attn_norm;  // [d]
  Tensor wq, wk, wv, wo;  // [d, d], row = output unit
  Tensor mlp_norm;  // [d]
  Tensor w_gate, w_up;  // [d_ff, d]
  Tensor w_down;  // [d, d_ff]
};

/// All learnable parameters. The unembedding W is untied from the embedding E.
struct Weights {
  Tensor embedding;  // E [V, d]
  std::vector<LayerWeights> layers;
  Tensor final_norm;  // [d]
  Tensor unembedding;  // W [V, d]

  /// Visit every tensor under a stable name ("embedding", "layers.0.wq", ...),
  /// always in the same order.
  void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;
  void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
};

/// Deterministic initialization from config.seed.
Weights init_weights(const ModelConfig& config);
/// Throws ValidationError naming the tensor and both shapes on mismatch.
void validate_weights(const ModelConfig& config, const Weights& weights);
/// Copy of `weights` with every tensor registered as a leaf on `tape`.
Weights attach(const Weights& weights, Tape& tape);

struct ForwardOutput {
  Tensor embeddings;  // X [T, d]: the differentiation leaves when taped
  Tensor y;           // [d] final post-norm hidden state at the leading position
  Tensor logits;      // z = W y, [V]
  Tensor probs;       // softmax(z), [V]
  std::size_t leading = 0;
};

/// Token embeddings E[tokens] as a plain (untaped) [T, d] tensor.
Tensor embed(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens);

/// y = f(x_1..x_T) at `leading` (default: last position). With a tape, the
/// token embeddings become leaves so dL/dx_t is available for every t.
ForwardOutput forward(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                      Tape* tape = nullptr, std::optional<std::size_t> leading = std::nullopt);

/// Same, starting from an explicit embedding matrix. If `embeddings` already
/// lives on `tape` it is used as is; otherwise it is registered as a leaf.
ForwardOutput forward_embeddings(const ModelConfig& config, const Weights& weights, const Tensor& embeddings,
                                 Tape* tape = nullptr, std::optional<std::size_t> leading = std::nullopt);

/// Residual stream after the last block, before the final norm: [T, d].
Tensor residual_stream(const ModelConfig& config, const Weights& weights, const Tensor& embeddings);
/// Next-token logits at every position: [T, V].
Tensor sequence_logits(const ModelConfig& config, const Weights& weights, const Tensor& embeddings);

/// Append the argmax token `n_steps` times; ties go to the lower id.
std::vector<TokenId> greedy_continue(const ModelConfig& config, const Weights& weights,
                                     std::span<const TokenId> tokens, std::size_t n_steps);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> values);

}  // namespace jscope
