// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jscope/model.hpp"

namespace jscope {

enum class ScopeKind { directional, semantic, temperature, fisher, integrated_semantic };

/// "directional", "semantic", "temperature", "fisher", "integrated-semantic".
std::string scope_name(ScopeKind kind);
ScopeKind parse_scope(const std::string& name);

enum class DirectionSource { raw, unembedding_row, normalized_hidden_state };

/// Direction v in hidden space; the influence of x_t is ||v^T J_t||_2.
struct Direction {
  std::vector<double> v;
  DirectionSource source = DirectionSource::raw;
  std::optional<TokenId> target;  // set for unembedding rows

  static Direction raw(std::vector<double> v);
  /// Row `target` of the unembedding matrix W.
  static Direction unembedding_row(const Weights& weights, TokenId target);
  /// y / ||y||_2. Throws NumericalError when ||y|| = 0.
  static Direction normalized_hidden_state(std::span<const double> y);
};

struct ScopeOptions {
  /// Position whose prediction is explained; defaults to the last token.
  /// Scores at later positions come out exactly zero by causal masking.
  std::optional<std::size_t> leading;
};

struct AttributionResult {
  ScopeKind scope = ScopeKind::directional;
  std::vector<TokenId> tokens;
  std::vector<double> scores;       // one non-negative score per position
  std::vector<bool> delimiter_mask; // true at comma positions
  std::optional<double> beta_eff;   // ||y||_2
  std::optional<TokenId> target;
  std::optional<double> z_target;
  std::vector<double> probs;        // predictive distribution at the leading position
  std::size_t backward_passes = 0;
  std::size_t leading = 0;
  // Path-integrated runs only.
  std::optional<std::size_t> steps;
  std::optional<std::string> baseline_fingerprint;

  /// Highest-probability tokens, ties broken toward the lower id.
  std::vector<std::pair<TokenId, double>> top_k(std::size_t k) const;
  /// Argmax position among non-delimiter positions (lowest index on ties).
  std::size_t argmax_position() const;
};

/// Rows index output hidden units, columns input embedding units.
struct JacobianBlock {
  std::size_t position = 0;
  Tensor matrix;  // [d_model, d_model]
};

std::vector<bool> delimiter_mask(std::span<const TokenId> tokens);

/// One taped forward, one backward on L = v^T y; score_t = ||dL/dx_t||_2.
AttributionResult directional_influence(const ModelConfig& config, const Weights& weights,
                                        std::span<const TokenId> tokens, const Direction& v,
                                        const ScopeOptions& options = {});

/// Directional influence along the unembedding row of `target`: explains the
/// target logit z_target = w_target^T y.
AttributionResult semantic_scope(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                                 TokenId target, const ScopeOptions& options = {});

/// Directional influence along y / ||y||: explains beta_eff = ||y||_2, the
/// sharpness of p = softmax(beta_eff * W y_hat). W-independent by construction.
AttributionResult temperature_scope(const ModelConfig& config, const Weights& weights,
                                    std::span<const TokenId> tokens, const ScopeOptions& options = {});

/// J_t = dy/dx_t, one VJP per basis vector e_i sharing a single taped forward.
/// Costs exactly d_model backward passes (reported through `backward_passes`).
JacobianBlock full_jacobian(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                            std::size_t position, const ScopeOptions& options = {},
                            std::size_t* backward_passes = nullptr);

/// J_t for every position from the same d_model VJPs.
std::vector<JacobianBlock> all_jacobians(const ModelConfig& config, const Weights& weights,
                                         std::span<const TokenId> tokens, const ScopeOptions& options = {},
                                         std::size_t* backward_passes = nullptr);

/// F_u = W^T (diag(p) - p p^T) W, symmetrized. Throws ValidationError when p
/// is not a probability vector (sum off by more than 1e-9, or negative entries).
Tensor fisher_output_metric(std::span<const double> p, const Tensor& unembedding);

/// J^T F J by explicit products.
Tensor pullback_metric(const Tensor& jacobian, const Tensor& metric);

/// tr(J^T W^T (diag(p) - p p^T) W J) via the rows a_i of A = W J:
///   sum_i p_i ||a_i||^2 - ||sum_i p_i a_i||^2.
double fisher_trace(const Tensor& jacobian, std::span<const double> p, const Tensor& unembedding);

/// score_t = tr(F_t), F_t = J_t^T F_u J_t. Costs d_model backward passes.
AttributionResult fisher_scope(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                               const ScopeOptions& options = {});

}  // namespace jscope
