// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "jscope/model.hpp"
#include "jscope/scopes.hpp"

namespace jscope {

/// Straight-line path X~(alpha) = X' + alpha (X - X') in embedding space,
/// integrated with the midpoint rule: alpha_k = (k + 1/2) / steps.
struct PathSpec {
  std::size_t steps = 100;
  /// Baseline X' with the same shape as the input embeddings; zeros if empty.
  std::optional<Tensor> baseline;
};

std::vector<double> midpoint_alphas(std::size_t steps);

/// Gradient of a scalar explanandum with respect to an [T, d] input.
using InputGradientFn = std::function<Tensor(const Tensor& input)>;

struct IntegratedGradients {
  Tensor attributions;  // (X - X') ⊙ mean_k grad(X~(alpha_k)), [T, d]
  std::size_t backward_passes = 0;
};

/// Generic midpoint-rule Integrated Gradients; `gradient` is evaluated once
/// per step.
IntegratedGradients integrated_gradients(const InputGradientFn& gradient, const Tensor& input, const Tensor& baseline,
                                         std::size_t steps);

/// d z_target / dX at the given embeddings (one taped forward + backward).
Tensor target_logit_gradient(const ModelConfig& config, const Weights& weights, const Tensor& embeddings,
                             TokenId target, const ScopeOptions& options = {});

/// z_target at the given embeddings (forward only).
double target_logit(const ModelConfig& config, const Weights& weights, const Tensor& embeddings, TokenId target,
                    const ScopeOptions& options = {});

/// Path-integrated Semantic Scope: score_t = ||IG(X)_t||_2 with IG along the
/// path from `path.baseline` to the token embeddings. Costs `steps` backward
/// passes. Throws ValidationError for steps = 0 or an out-of-range target.
AttributionResult integrated_semantic_scope(const ModelConfig& config, const Weights& weights,
                                            std::span<const TokenId> tokens, TokenId target,
                                            const PathSpec& path = {}, const ScopeOptions& options = {});

/// Same computation, returning the raw attribution matrix together with the
/// endpoint logits for completeness diagnostics.
struct IntegratedSemanticDetail {
  AttributionResult result;
  Tensor attributions;
  double z_input = 0.0;
  double z_baseline = 0.0;
  /// |sum IG - (z(X) - z(X'))| / |z(X) - z(X')|
  double completeness_residual() const;
};
IntegratedSemanticDetail integrated_semantic_detail(const ModelConfig& config, const Weights& weights,
                                                    std::span<const TokenId> tokens, TokenId target,
                                                    const PathSpec& path = {}, const ScopeOptions& options = {});

/// Integrand norms ||grad_{x_t} z(X~(alpha))||_2, one score vector per alpha.
struct IntegrandProfile {
  std::vector<double> alphas;
  std::vector<std::vector<double>> scores;
};
IntegrandProfile ig_integrand_profile(const ModelConfig& config, const Weights& weights,
                                      std::span<const TokenId> tokens, TokenId target, std::span<const double> alphas,
                                      const std::optional<Tensor>& baseline = std::nullopt,
                                      const ScopeOptions& options = {});

}  // namespace jscope
