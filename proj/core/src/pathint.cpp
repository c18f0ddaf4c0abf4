// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/pathint.hpp"

#include <cmath>
#include <cstring>

#include "jscope/error.hpp"
#include "jscope/ops.hpp"
#include "jscope/weights_io.hpp"

namespace jscope {
namespace {

Tensor interpolate(const Tensor& baseline, const Tensor& input, double alpha) {
  std::vector<double> out(input.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = baseline[i] + alpha * (input[i] - baseline[i]);
  return Tensor(input.shape(), std::move(out));
}

void check_target(const ModelConfig& config, TokenId target) {
  if (target >= config.vocab_size) {
    throw ValidationError("target token " + std::to_string(target) + " out of range for vocab_size " +
                          std::to_string(config.vocab_size));
  }
}

Tensor resolve_baseline(const std::optional<Tensor>& baseline, const Tensor& input) {
  if (!baseline) return Tensor::zeros(input.shape());
  if (baseline->shape() != input.shape()) {
    throw ValidationError("baseline shape " + shape_string(baseline->shape()) + " does not match input " +
                          shape_string(input.shape()));
  }
  return baseline->detached();
}

std::string tensor_fingerprint(const Tensor& t) {
  std::string bytes(t.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), t.data().data(), bytes.size());
  return fnv1a_hex(bytes);
}

std::vector<double> row_norms(const Tensor& m) {
  const std::size_t rows = m.rows(), cols = m.cols();
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += m[r * cols + c] * m[r * cols + c];
    out[r] = std::sqrt(s);
  }
  return out;
}

}  // namespace

std::vector<double> midpoint_alphas(std::size_t steps) {
  if (steps == 0) throw ValidationError("path integration: steps must be at least 1");
  std::vector<double> alphas(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    alphas[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
  }
  return alphas;
}

IntegratedGradients integrated_gradients(const InputGradientFn& gradient, const Tensor& input, const Tensor& baseline,
                                         std::size_t steps) {
  if (baseline.shape() != input.shape()) {
    throw ValidationError("integrated_gradients: baseline " + shape_string(baseline.shape()) + " vs input " +
                          shape_string(input.shape()));
  }
  const auto alphas = midpoint_alphas(steps);
  std::vector<double> acc(input.size(), 0.0);
  for (double alpha : alphas) {
    const Tensor g = gradient(interpolate(baseline, input, alpha));
    if (g.shape() != input.shape()) {
      throw ValidationError("integrated_gradients: gradient " + shape_string(g.shape()) + " vs input " +
                            shape_string(input.shape()));
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
  }
  const double inv = 1.0 / static_cast<double>(steps);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = (input[i] - baseline[i]) * (acc[i] * inv);
  return {Tensor(input.shape(), std::move(acc)), steps};
}

Tensor target_logit_gradient(const ModelConfig& config, const Weights& weights, const Tensor& embeddings,
                             TokenId target, const ScopeOptions& options) {
  check_target(config, target);
  const Direction dir = Direction::unembedding_row(weights, target);
  Tape tape;
  const ForwardOutput out = forward_embeddings(config, weights, embeddings.detached(), &tape, options.leading);
  const Tensor z = ops::dot(Tensor::vector(dir.v), out.y);
  return tape.backward(z).of(out.embeddings);
}

double target_logit(const ModelConfig& config, const Weights& weights, const Tensor& embeddings, TokenId target,
                    const ScopeOptions& options) {
  check_target(config, target);
  return forward_embeddings(config, weights, embeddings.detached(), nullptr, options.leading).logits[target];
}

double IntegratedSemanticDetail::completeness_residual() const {
  double total = 0.0;
  for (double v : attributions.data()) total += v;
  const double delta = z_input - z_baseline;
  return std::abs(total - delta) / std::abs(delta);
}

IntegratedSemanticDetail integrated_semantic_detail(const ModelConfig& config, const Weights& weights,
                                                    std::span<const TokenId> tokens, TokenId target,
                                                    const PathSpec& path, const ScopeOptions& options) {
  check_target(config, target);
  if (path.steps == 0) throw ValidationError("path integration: steps must be at least 1");
  const Tensor input = embed(config, weights, tokens);
  const Tensor baseline = resolve_baseline(path.baseline, input);

  auto grad = [&](const Tensor& x) { return target_logit_gradient(config, weights, x, target, options); };
  IntegratedGradients ig = integrated_gradients(grad, input, baseline, path.steps);

  const ForwardOutput out = forward_embeddings(config, weights, input, nullptr, options.leading);
  IntegratedSemanticDetail detail;
  auto& r = detail.result;
  r.scope = ScopeKind::integrated_semantic;
  r.tokens.assign(tokens.begin(), tokens.end());
  r.delimiter_mask = delimiter_mask(tokens);
  r.probs = out.probs.values();
  r.leading = out.leading;
  r.target = target;
  r.z_target = out.logits[target];
  r.scores = row_norms(ig.attributions);
  r.backward_passes = ig.backward_passes;
  r.steps = path.steps;
  r.baseline_fingerprint = tensor_fingerprint(baseline);

  detail.attributions = std::move(ig.attributions);
  detail.z_input = out.logits[target];
  detail.z_baseline = target_logit(config, weights, baseline, target, options);
  return detail;
}

AttributionResult integrated_semantic_scope(const ModelConfig& config, const Weights& weights,
                                            std::span<const TokenId> tokens, TokenId target, const PathSpec& path,
                                            const ScopeOptions& options) {
  return integrated_semantic_detail(config, weights, tokens, target, path, options).result;
}

IntegrandProfile ig_integrand_profile(const ModelConfig& config, const Weights& weights,
                                      std::span<const TokenId> tokens, TokenId target, std::span<const double> alphas,
                                      const std::optional<Tensor>& baseline, const ScopeOptions& options) {
  check_target(config, target);
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("integrand profile: alpha " + std::to_string(a) + " outside [0, 1]");
  }
  const Tensor input = embed(config, weights, tokens);
  const Tensor base = resolve_baseline(baseline, input);
  IntegrandProfile profile;
  for (double a : alphas) {
    profile.alphas.push_back(a);
    profile.scores.push_back(row_norms(target_logit_gradient(config, weights, interpolate(base, input, a), target, options)));
  }
  return profile;
}

}  // namespace jscope
