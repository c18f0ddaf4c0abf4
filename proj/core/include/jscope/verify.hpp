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
#include <utility>
#include <vector>

#include "jscope/model.hpp"
#include "jscope/scopes.hpp"

/// Independent numerical oracles for the scope engine. The oracles evaluate
/// the model forward only (finite differences, Monte Carlo, direct sums);
/// the autodiff path appears only as the quantity under test.
namespace jscope::verify {

struct OracleReport {
  std::string check;
  std::vector<double> measured;
  std::vector<double> reference;
  double tolerance = 0.0;
  bool pass = false;
  std::optional<std::size_t> samples;
  std::optional<double> step;
  std::optional<double> standard_error;
  std::uint64_t seed = 0;
  std::string detail;
  /// Per-check diagnostics (per-scale residuals, eigenvalues, ...).
  std::vector<std::pair<std::string, double>> extras;
};

/// Default central-difference step for float64.
inline constexpr double kFiniteDifferenceStep = 1e-5;

/// Central differences of a vector map: column j = (f(x + h e_j) - f(x - h e_j)) / 2h.
/// Result is [f(x).size(), x.size()].
Tensor central_difference_jacobian(const std::function<std::vector<double>(const std::vector<double>&)>& f,
                                   const std::vector<double>& x, double h = kFiniteDifferenceStep);

/// dy/dx_t by central differences on the model (forward passes only).
Tensor finite_diff_jacobian(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                            std::size_t position, double h = kFiniteDifferenceStep, const ScopeOptions& options = {});

/// KL(p || q) in nats with 0 ln 0 = 0. Throws ValidationError when q_i = 0
/// where p_i > 0, or the lengths differ.
double kl(std::span<const double> p, std::span<const double> q);

/// Predictive distribution after adding `delta` to the embedding at `position`.
std::vector<double> perturbed_probs(const ModelConfig& config, const Weights& weights, const Tensor& embeddings,
                                    std::size_t position, std::span<const double> delta,
                                    const ScopeOptions& options = {});

/// `count` directions uniform on the unit sphere in R^d (normalized normals).
std::vector<std::vector<double>> unit_sphere_samples(std::size_t d, std::size_t count, std::uint64_t seed);

/// Least-squares slope of log(residual) against log(scale).
double loglog_slope(std::span<const double> scales, std::span<const double> residuals);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Tensor& symmetric);

/// Relative error |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor);

/// Residual |KL(p(x_t) || p(x_t + delta)) - 1/2 delta^T F_t delta| averaged over
/// `directions` random unit directions per scale; passes when the fitted
/// log-log slope lies in [2.5, 3.5].
OracleReport check_kl_quadratic(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                                std::size_t position, std::span<const double> scales, std::uint64_t seed,
                                std::size_t directions = 8, const ScopeOptions& options = {});

/// (2d / eps^2) * mean KL(p(x_t) || p(x_t + eps u)) over uniform unit u against
/// tr(F_t); passes within max(2%, 3 standard errors).
OracleReport check_trace_expected_kl(const ModelConfig& config, const Weights& weights,
                                     std::span<const TokenId> tokens, std::size_t position, double eps,
                                     std::size_t n_samples, std::uint64_t seed, const ScopeOptions& options = {});

/// With g = v^T J_t (J_t by finite differences): the aligned perturbation
/// eps g / ||g|| reaches eps ||g|| to 1e-10, and `n_random` random eps-norm
/// perturbations stay below it. ||g|| = 0 is a degenerate pass.
OracleReport check_perturbation_geometry(const ModelConfig& config, const Weights& weights,
                                         std::span<const TokenId> tokens, std::size_t position,
                                         std::span<const double> v, double eps, std::size_t n_random,
                                         std::uint64_t seed, const ScopeOptions& options = {});

/// Autodiff J_t against central differences, entrywise relative error.
OracleReport check_jacobian(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                            std::size_t position, double tolerance = 1e-5, const ScopeOptions& options = {});

/// Single-backward influence against ||v^T J_t|| from the assembled Jacobian,
/// for `n_directions` random v and every position.
OracleReport check_directional_consistency(const ModelConfig& config, const Weights& weights,
                                           std::span<const TokenId> tokens, std::size_t n_directions,
                                           std::uint64_t seed, double tolerance = 1e-10,
                                           const ScopeOptions& options = {});

/// Shortcut trace vs tr(J^T F_u J) for every position, PSD of F_u, and
/// q^T F_u q = Var_{i~p}[(W q)_i] for random q.
OracleReport check_fisher_identities(const ModelConfig& config, const Weights& weights,
                                     std::span<const TokenId> tokens, std::uint64_t seed,
                                     double tolerance = 1e-10, const ScopeOptions& options = {});

/// Integrand at alpha = 1 against Semantic Scope, and completeness of the
/// midpoint sum with `steps` steps (< 5%).
OracleReport check_path_integration(const ModelConfig& config, const Weights& weights,
                                    std::span<const TokenId> tokens, TokenId target, std::size_t steps = 100,
                                    const ScopeOptions& options = {});

/// Backward-pass counts: 1 semantic, 1 temperature, d_model fisher, steps integrated.
OracleReport check_backward_accounting(const ModelConfig& config, const Weights& weights,
                                       std::span<const TokenId> tokens, TokenId target, std::size_t steps = 8,
                                       const ScopeOptions& options = {});

struct SuiteOptions {
  std::uint64_t seed = 7;
  std::optional<std::size_t> position;  // default: leading position
  std::optional<TokenId> target;        // default: argmax of p
  std::size_t mc_samples = 10000;
  double mc_eps = 1e-3;
  std::size_t geometry_samples = 200;
};

std::vector<OracleReport> run_suite(const ModelConfig& config, const Weights& weights,
                                    std::span<const TokenId> tokens, const SuiteOptions& options = {});

bool all_passed(const std::vector<OracleReport>& reports);

}  // namespace jscope::verify
