// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/scopes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jscope/error.hpp"
#include "jscope/ops.hpp"

namespace jscope {
namespace {

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

AttributionResult base_result(ScopeKind kind, std::span<const TokenId> tokens, const ForwardOutput& out) {
  AttributionResult r;
  r.scope = kind;
  r.tokens.assign(tokens.begin(), tokens.end());
  r.delimiter_mask = delimiter_mask(tokens);
  r.probs = out.probs.values();
  r.leading = out.leading;
  return r;
}

void check_direction(const ModelConfig& config, const Direction& d) {
  if (d.v.size() != config.d_model) {
    throw ValidationError("direction: length " + std::to_string(d.v.size()) + " does not match d_model " +
                          std::to_string(config.d_model));
  }
  for (double x : d.v) {
    if (!std::isfinite(x)) throw ValidationError("direction: non-finite entry");
  }
}

/// Forward with tape, pick v from the forward output, one backward on v^T y.
template <typename MakeDirection>
AttributionResult run_directional(ScopeKind kind, const ModelConfig& config, const Weights& weights,
                                  std::span<const TokenId> tokens, const ScopeOptions& options,
                                  MakeDirection&& make_direction) {
  Tape tape;
  const ForwardOutput out = forward(config, weights, tokens, &tape, options.leading);
  const Direction dir = make_direction(out);
  check_direction(config, dir);

  const Tensor loss = ops::dot(Tensor::vector(dir.v), out.y);
  const Gradients grads = tape.backward(loss);

  AttributionResult r = base_result(kind, tokens, out);
  r.scores = row_norms(grads.of(out.embeddings));
  r.backward_passes = tape.backward_passes();
  if (dir.target) {
    r.target = dir.target;
    r.z_target = out.logits[*dir.target];
  }
  return r;
}

}  // namespace

std::string scope_name(ScopeKind kind) {
  switch (kind) {
    case ScopeKind::directional: return "directional";
    case ScopeKind::semantic: return "semantic";
    case ScopeKind::temperature: return "temperature";
    case ScopeKind::fisher: return "fisher";
    case ScopeKind::integrated_semantic: return "integrated-semantic";
  }
  return "unknown";
}

ScopeKind parse_scope(const std::string& name) {
  for (auto k : {ScopeKind::directional, ScopeKind::semantic, ScopeKind::temperature, ScopeKind::fisher,
                 ScopeKind::integrated_semantic}) {
    if (scope_name(k) == name) return k;
  }
  if (name == "integrated") return ScopeKind::integrated_semantic;
  throw ValidationError("unknown scope '" + name + "'");
}

Direction Direction::raw(std::vector<double> v) { return Direction{std::move(v), DirectionSource::raw, std::nullopt}; }

Direction Direction::unembedding_row(const Weights& weights, TokenId target) {
  const Tensor& w = weights.unembedding;
  if (target >= w.rows()) {
    throw ValidationError("target token " + std::to_string(target) + " out of range for vocabulary of " +
                          std::to_string(w.rows()));
  }
  const auto row = w.data().subspan(target * w.cols(), w.cols());
  return Direction{std::vector<double>(row.begin(), row.end()), DirectionSource::unembedding_row, target};
}

Direction Direction::normalized_hidden_state(std::span<const double> y) {
  double ss = 0.0;
  for (double x : y) ss += x * x;
  const double norm = std::sqrt(ss);
  if (norm == 0.0) throw NumericalError("temperature scope: ||y|| = 0, cannot normalize the hidden state");
  std::vector<double> v(y.begin(), y.end());
  for (auto& x : v) x /= norm;
  return Direction{std::move(v), DirectionSource::normalized_hidden_state, std::nullopt};
}

std::vector<std::pair<TokenId, double>> AttributionResult::top_k(std::size_t k) const {
  std::vector<TokenId> ids(probs.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  std::stable_sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) { return probs[a] > probs[b]; });
  std::vector<std::pair<TokenId, double>> out;
  for (std::size_t i = 0; i < std::min(k, ids.size()); ++i) out.emplace_back(ids[i], probs[ids[i]]);
  return out;
}

std::size_t AttributionResult::argmax_position() const {
  std::size_t best = scores.size();
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (t < delimiter_mask.size() && delimiter_mask[t]) continue;
    if (best == scores.size() || scores[t] > scores[best]) best = t;
  }
  if (best == scores.size()) throw ValidationError("argmax_position: every position is a delimiter");
  return best;
}

std::vector<bool> delimiter_mask(std::span<const TokenId> tokens) {
  std::vector<bool> mask(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) mask[i] = tokens[i] == vocab::kComma;
  return mask;
}

AttributionResult directional_influence(const ModelConfig& config, const Weights& weights,
                                        std::span<const TokenId> tokens, const Direction& v,
                                        const ScopeOptions& options) {
  return run_directional(ScopeKind::directional, config, weights, tokens, options,
                         [&](const ForwardOutput&) { return v; });
}

AttributionResult semantic_scope(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                                 TokenId target, const ScopeOptions& options) {
  const Direction dir = Direction::unembedding_row(weights, target);
  return run_directional(ScopeKind::semantic, config, weights, tokens, options,
                         [&](const ForwardOutput&) { return dir; });
}

AttributionResult temperature_scope(const ModelConfig& config, const Weights& weights,
                                    std::span<const TokenId> tokens, const ScopeOptions& options) {
  double beta = 0.0;
  AttributionResult r =
      run_directional(ScopeKind::temperature, config, weights, tokens, options, [&](const ForwardOutput& out) {
        beta = ops::l2_norm(out.y.detached()).item();
        return Direction::normalized_hidden_state(out.y.data());
      });
  r.beta_eff = beta;
  return r;
}

std::vector<JacobianBlock> all_jacobians(const ModelConfig& config, const Weights& weights,
                                         std::span<const TokenId> tokens, const ScopeOptions& options,
                                         std::size_t* backward_passes) {
  Tape tape;
  const ForwardOutput out = forward(config, weights, tokens, &tape, options.leading);
  const std::size_t d = config.d_model, n = tokens.size();
  std::vector<std::vector<double>> blocks(n, std::vector<double>(d * d, 0.0));
  std::vector<double> basis(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    basis.assign(d, 0.0);
    basis[i] = 1.0;
    const Tensor gx = tape.vjp(out.y, basis).of(out.embeddings);
    for (std::size_t t = 0; t < n; ++t) {
      std::copy_n(gx.data().data() + t * d, d, blocks[t].data() + i * d);
    }
  }
  if (backward_passes != nullptr) *backward_passes = tape.backward_passes();
  std::vector<JacobianBlock> result;
  result.reserve(n);
  for (std::size_t t = 0; t < n; ++t) result.push_back({t, Tensor::matrix(d, d, std::move(blocks[t]))});
  return result;
}

JacobianBlock full_jacobian(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                            std::size_t position, const ScopeOptions& options, std::size_t* backward_passes) {
  if (position >= tokens.size()) {
    throw ValidationError("full_jacobian: position " + std::to_string(position) + " out of range for length " +
                          std::to_string(tokens.size()));
  }
  auto blocks = all_jacobians(config, weights, tokens, options, backward_passes);
  return std::move(blocks[position]);
}

Tensor fisher_output_metric(std::span<const double> p, const Tensor& unembedding) {
  if (unembedding.rank() != 2 || p.size() != unembedding.rows()) {
    throw ValidationError("fisher_output_metric: p has " + std::to_string(p.size()) + " entries, W is " +
                          shape_string(unembedding.shape()));
  }
  double total = 0.0;
  for (double pi : p) {
    if (!(pi >= 0.0)) throw ValidationError("fisher_output_metric: p has a negative or NaN entry");
    total += pi;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("fisher_output_metric: p sums to " + std::to_string(total) + ", not 1");
  }
  const std::size_t v = unembedding.rows(), d = unembedding.cols();
  const auto w = unembedding.data();
  std::vector<double> mean(d, 0.0);
  std::vector<double> f(d * d, 0.0);
  for (std::size_t i = 0; i < v; ++i) {
    const double pi = p[i];
    if (pi == 0.0) continue;
    const double* wi = w.data() + i * d;
    for (std::size_t a = 0; a < d; ++a) {
      mean[a] += pi * wi[a];
      const double pwa = pi * wi[a];
      for (std::size_t b = 0; b < d; ++b) f[a * d + b] += pwa * wi[b];
    }
  }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) f[a * d + b] -= mean[a] * mean[b];
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      const double s = 0.5 * (f[a * d + b] + f[b * d + a]);
      f[a * d + b] = s;
      f[b * d + a] = s;
    }
  }
  return Tensor::matrix(d, d, std::move(f));
}

Tensor pullback_metric(const Tensor& jacobian, const Tensor& metric) {
  return ops::matmul(ops::transpose(jacobian), ops::matmul(metric, jacobian));
}

double fisher_trace(const Tensor& jacobian, std::span<const double> p, const Tensor& unembedding) {
  const Tensor a = ops::matmul(unembedding.detached(), jacobian.detached());  // [V, d], row i = a_i
  if (p.size() != a.rows()) {
    throw ValidationError("fisher_trace: p has " + std::to_string(p.size()) + " entries, W J is " +
                          shape_string(a.shape()));
  }
  const std::size_t v = a.rows(), d = a.cols();
  std::vector<double> mean(d, 0.0);
  double second = 0.0;
  for (std::size_t i = 0; i < v; ++i) {
    const double* ai = a.data().data() + i * d;
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      sq += ai[k] * ai[k];
      mean[k] += p[i] * ai[k];
    }
    second += p[i] * sq;
  }
  double mean_sq = 0.0;
  for (double m : mean) mean_sq += m * m;
  // A variance: rounding can only push an exact zero slightly negative.
  return std::max(0.0, second - mean_sq);
}

AttributionResult fisher_scope(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                               const ScopeOptions& options) {
  std::size_t passes = 0;
  const auto blocks = all_jacobians(config, weights, tokens, options, &passes);
  const ForwardOutput out = forward(config, weights, tokens, nullptr, options.leading);
  AttributionResult r = base_result(ScopeKind::fisher, tokens, out);
  r.scores.resize(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    r.scores[t] = fisher_trace(blocks[t].matrix, out.probs.data(), weights.unembedding);
  }
  r.backward_passes = passes;
  return r;
}

}  // namespace jscope
