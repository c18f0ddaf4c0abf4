// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/verify.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jscope/error.hpp"
#include "jscope/ops.hpp"
#include "jscope/pathint.hpp"
#include "jscope/random.hpp"

namespace jscope::verify {
namespace {

// Oracle streams, disjoint from model initialization and training streams.
constexpr std::uint64_t kKlDirections = 101;
constexpr std::uint64_t kTraceSamples = 102;
constexpr std::uint64_t kGeometrySamples = 103;
constexpr std::uint64_t kDirectionalSamples = 104;
constexpr std::uint64_t kFisherSamples = 105;

// Entries of a Jacobian block far below its largest entry are compared on the
// block's own scale instead of their own magnitude.
constexpr double kJacobianRelativeFloor = 1e-3;

std::size_t resolve_position(std::span<const TokenId> tokens, std::size_t position) {
  if (position >= tokens.size()) {
    throw ValidationError("position " + std::to_string(position) + " out of range for length " +
                          std::to_string(tokens.size()));
  }
  return position;
}

Tensor replace_row(const Tensor& x, std::size_t row, std::span<const double> values) {
  std::vector<double> data = x.values();
  std::copy(values.begin(), values.end(), data.begin() + static_cast<std::ptrdiff_t>(row * x.cols()));
  return Tensor(x.shape(), std::move(data));
}

std::vector<double> row_of(const Tensor& x, std::size_t row) {
  const auto d = x.cols();
  return {x.data().begin() + static_cast<std::ptrdiff_t>(row * d),
          x.data().begin() + static_cast<std::ptrdiff_t>((row + 1) * d)};
}

/// v^T J (J stored [out, in]).
std::vector<double> left_multiply(std::span<const double> v, const Tensor& j) {
  const std::size_t rows = j.rows(), cols = j.cols();
  std::vector<double> out(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c] += v[r] * j[r * cols + c];
  return out;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double quadratic_form(const Tensor& m, std::span<const double> x) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < n; ++b) row += m[a * n + b] * x[b];
    s += x[a] * row;
  }
  return s;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

}  // namespace

Tensor central_difference_jacobian(const std::function<std::vector<double>(const std::vector<double>&)>& f,
                                   const std::vector<double>& x, double h) {
  if (!(h > 0.0)) throw ValidationError("finite differences: step h must be positive");
  const std::size_t n = x.size();
  const std::size_t m = f(x).size();
  std::vector<double> jac(m * n);
  std::vector<double> xp = x, xm = x;
  for (std::size_t j = 0; j < n; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    const auto fp = f(xp);
    const auto fm = f(xm);
    for (std::size_t i = 0; i < m; ++i) jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return Tensor::matrix(m, n, std::move(jac));
}

Tensor finite_diff_jacobian(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                            std::size_t position, double h, const ScopeOptions& options) {
  resolve_position(tokens, position);
  const Tensor x = embed(config, weights, tokens);
  auto f = [&](const std::vector<double>& row) {
    return forward_embeddings(config, weights, replace_row(x, position, row), nullptr, options.leading).y.values();
  };
  return central_difference_jacobian(f, row_of(x, position), h);
}

double kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ValidationError("kl: length mismatch " + std::to_string(p.size()) + " vs " + std::to_string(q.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw ValidationError("kl: q[" + std::to_string(i) + "] = 0 where p > 0 (support violation)");
    s += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return s;
}

std::vector<double> perturbed_probs(const ModelConfig& config, const Weights& weights, const Tensor& embeddings,
                                    std::size_t position, std::span<const double> delta,
                                    const ScopeOptions& options) {
  auto row = row_of(embeddings, position);
  for (std::size_t j = 0; j < row.size(); ++j) row[j] += delta[j];
  return forward_embeddings(config, weights, replace_row(embeddings, position, row), nullptr, options.leading)
      .probs.values();
}

std::vector<std::vector<double>> unit_sphere_samples(std::size_t d, std::size_t count, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<std::vector<double>> out(count, std::vector<double>(d));
  for (auto& u : out) {
    double n = 0.0;
    do {
      for (auto& x : u) x = rng.next_normal();
      n = norm2(u);
    } while (n == 0.0);
    for (auto& x : u) x /= n;
  }
  return out;
}

double loglog_slope(std::span<const double> scales, std::span<const double> residuals) {
  const std::size_t n = scales.size();
  if (n < 2 || residuals.size() != n) throw ValidationError("loglog_slope: need at least two matching points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(scales[i]);
    my += std::log(residuals[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(scales[i]) - mx;
    sxy += dx * (std::log(residuals[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double min_eigenvalue(const Tensor& symmetric) {
  if (symmetric.rank() != 2 || symmetric.rows() != symmetric.cols()) {
    throw ValidationError("min_eigenvalue: expected a square matrix, got " + shape_string(symmetric.shape()));
  }
  const auto n = static_cast<Eigen::Index>(symmetric.rows());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = symmetric.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

OracleReport check_kl_quadratic(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                                std::size_t position, std::span<const double> scales, std::uint64_t seed,
                                std::size_t directions, const ScopeOptions& options) {
  resolve_position(tokens, position);
  if (scales.size() < 2) throw ValidationError("check_kl_quadratic: need at least two scales");
  const Tensor x = embed(config, weights, tokens);
  const auto p = forward_embeddings(config, weights, x, nullptr, options.leading).probs.values();
  const Tensor jac = full_jacobian(config, weights, tokens, position, options).matrix;
  const Tensor f_t = pullback_metric(jac, fisher_output_metric(p, weights.unembedding));
  const auto dirs = unit_sphere_samples(config.d_model, directions, derive_seed(seed, kKlDirections));

  OracleReport r;
  r.check = "kl_quadratic_form";
  r.seed = seed;
  r.samples = directions;
  r.tolerance = 0.5;
  std::vector<double> residuals;
  for (double s : scales) {
    double acc = 0.0;
    double kl_mean = 0.0;
    for (const auto& u : dirs) {
      std::vector<double> delta(u.size());
      for (std::size_t j = 0; j < u.size(); ++j) delta[j] = s * u[j];
      const double k = kl(p, perturbed_probs(config, weights, x, position, delta, options));
      acc += std::abs(k - 0.5 * quadratic_form(f_t, delta));
      kl_mean += k;
    }
    residuals.push_back(acc / static_cast<double>(dirs.size()));
    r.extras.emplace_back("residual@" + fmt(s), residuals.back());
    r.extras.emplace_back("kl@" + fmt(s), kl_mean / static_cast<double>(dirs.size()));
  }
  const bool degenerate = std::all_of(residuals.begin(), residuals.end(), [](double v) { return v == 0.0; });
  if (degenerate) {
    // F_t = 0 and KL = 0 exactly (e.g. a position after the leading one).
    r.measured = {0.0};
    r.reference = {0.0};
    r.pass = true;
    r.detail = "degenerate: zero residual at every scale";
    return r;
  }
  const double slope = loglog_slope(scales, residuals);
  r.measured = {slope};
  r.reference = {3.0};
  r.pass = std::abs(slope - 3.0) <= r.tolerance;
  r.detail = "log-log slope of |KL - 0.5 d^T F_t d| over " + std::to_string(scales.size()) + " scales";
  return r;
}

OracleReport check_trace_expected_kl(const ModelConfig& config, const Weights& weights,
                                     std::span<const TokenId> tokens, std::size_t position, double eps,
                                     std::size_t n_samples, std::uint64_t seed, const ScopeOptions& options) {
  resolve_position(tokens, position);
  if (n_samples < 2) throw ValidationError("check_trace_expected_kl: need at least two samples");
  if (!(eps > 0.0)) throw ValidationError("check_trace_expected_kl: eps must be positive");
  const Tensor x = embed(config, weights, tokens);
  const auto p = forward_embeddings(config, weights, x, nullptr, options.leading).probs.values();
  const Tensor jac = full_jacobian(config, weights, tokens, position, options).matrix;
  const double trace = fisher_trace(jac, p, weights.unembedding);

  const std::size_t d = config.d_model;
  const double factor = 2.0 * static_cast<double>(d) / (eps * eps);
  const auto dirs = unit_sphere_samples(d, n_samples, derive_seed(seed, kTraceSamples));
  double sum = 0.0, sum_sq = 0.0;
  std::vector<double> delta(d);
  for (const auto& u : dirs) {
    for (std::size_t j = 0; j < d; ++j) delta[j] = eps * u[j];
    const double k = factor * kl(p, perturbed_probs(config, weights, x, position, delta, options));
    sum += k;
    sum_sq += k * k;
  }
  const double n = static_cast<double>(n_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  const double se = std::sqrt(var / n);

  OracleReport r;
  r.check = "trace_expected_kl";
  r.seed = seed;
  r.samples = n_samples;
  r.step = eps;
  r.standard_error = se;
  r.measured = {mean};
  r.reference = {trace};
  r.tolerance = std::max(0.02 * std::abs(trace), 3.0 * se);
  r.pass = std::abs(mean - trace) <= r.tolerance;
  r.detail = "(2d/eps^2) mean KL vs tr(F_t); tolerance max(2%, 3 SE)";
  return r;
}

OracleReport check_perturbation_geometry(const ModelConfig& config, const Weights& weights,
                                         std::span<const TokenId> tokens, std::size_t position,
                                         std::span<const double> v, double eps, std::size_t n_random,
                                         std::uint64_t seed, const ScopeOptions& options) {
  resolve_position(tokens, position);
  if (v.size() != config.d_model) {
    throw ValidationError("check_perturbation_geometry: direction length " + std::to_string(v.size()) +
                          " does not match d_model " + std::to_string(config.d_model));
  }
  OracleReport r;
  r.check = "perturbation_geometry";
  r.seed = seed;
  r.samples = n_random;
  r.step = eps;
  r.tolerance = 1e-10;

  const Tensor jac = finite_diff_jacobian(config, weights, tokens, position, kFiniteDifferenceStep, options);
  const auto g = left_multiply(v, jac);
  const double gnorm = norm2(g);
  const double bound = eps * gnorm;
  if (gnorm == 0.0) {
    r.measured = {0.0};
    r.reference = {0.0};
    r.pass = true;
    r.detail = "degenerate: v^T J_t = 0, every first-order response is 0";
    return r;
  }
  std::vector<double> aligned(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) aligned[j] = eps * g[j] / gnorm;
  const double aligned_response = dot(g, aligned);

  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& u : unit_sphere_samples(g.size(), n_random, derive_seed(seed, kGeometrySamples))) {
    worst = std::max(worst, eps * dot(g, u));
  }
  r.measured = {aligned_response, worst};
  r.reference = {bound, bound};
  const bool equality = std::abs(aligned_response - bound) <= r.tolerance;
  const bool bounded = worst <= bound + r.tolerance;
  r.pass = equality && bounded;
  r.extras.emplace_back("influence", gnorm);
  r.detail = "aligned response vs eps*||v^T J_t||; max random response below the bound";
  return r;
}

OracleReport check_jacobian(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                            std::size_t position, double tolerance, const ScopeOptions& options) {
  resolve_position(tokens, position);
  const Tensor ad = full_jacobian(config, weights, tokens, position, options).matrix;
  const Tensor fd = finite_diff_jacobian(config, weights, tokens, position, kFiniteDifferenceStep, options);
  double scale = 0.0;
  for (double x : fd.data()) scale = std::max(scale, std::abs(x));
  const double floor = std::max(kJacobianRelativeFloor * scale, std::numeric_limits<double>::min());
  double worst = 0.0, worst_abs = 0.0;
  for (std::size_t i = 0; i < ad.size(); ++i) {
    worst = std::max(worst, relative_error(ad[i], fd[i], floor));
    worst_abs = std::max(worst_abs, std::abs(ad[i] - fd[i]));
  }
  OracleReport r;
  r.check = "jacobian_vs_finite_differences";
  r.step = kFiniteDifferenceStep;
  r.measured = {worst};
  r.reference = {0.0};
  r.tolerance = tolerance;
  r.pass = worst < tolerance;
  r.extras.emplace_back("max_abs_error", worst_abs);
  r.extras.emplace_back("max_abs_entry", scale);
  r.extras.emplace_back("position", static_cast<double>(position));
  r.detail = "entrywise |ad - fd| / max(|ad|, |fd|, 1e-3 max|J|)";
  return r;
}

OracleReport check_directional_consistency(const ModelConfig& config, const Weights& weights,
                                           std::span<const TokenId> tokens, std::size_t n_directions,
                                           std::uint64_t seed, double tolerance, const ScopeOptions& options) {
  const auto blocks = all_jacobians(config, weights, tokens, options);
  double worst = 0.0;
  std::size_t max_passes = 0;
  for (const auto& v : unit_sphere_samples(config.d_model, n_directions, derive_seed(seed, kDirectionalSamples))) {
    const auto res = directional_influence(config, weights, tokens, Direction::raw(v), options);
    max_passes = std::max(max_passes, res.backward_passes);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const double assembled = norm2(left_multiply(v, blocks[t].matrix));
      worst = std::max(worst, relative_error(res.scores[t], assembled, 1.0));
    }
  }
  OracleReport r;
  r.check = "single_backward_influence";
  r.seed = seed;
  r.samples = n_directions;
  r.measured = {worst};
  r.reference = {0.0};
  r.tolerance = tolerance;
  r.pass = worst <= tolerance && max_passes == 1;
  r.extras.emplace_back("backward_passes", static_cast<double>(max_passes));
  r.detail = "||dL/dx_t|| (one backward) vs ||v^T J_t|| from the assembled Jacobian";
  return r;
}

OracleReport check_fisher_identities(const ModelConfig& config, const Weights& weights,
                                     std::span<const TokenId> tokens, std::uint64_t seed, double tolerance,
                                     const ScopeOptions& options) {
  const auto blocks = all_jacobians(config, weights, tokens, options);
  const auto p = forward(config, weights, tokens, nullptr, options.leading).probs.values();
  const Tensor& w = weights.unembedding;
  const Tensor f_u = fisher_output_metric(p, w);

  double trace_err = 0.0;
  for (const auto& b : blocks) {
    const double shortcut = fisher_trace(b.matrix, p, w);
    const Tensor f_t = pullback_metric(b.matrix, f_u);
    double direct = 0.0;
    for (std::size_t i = 0; i < f_t.rows(); ++i) direct += f_t.at(i, i);
    trace_err = std::max(trace_err, relative_error(shortcut, direct, 1.0));
  }
  const double lambda_min = min_eigenvalue(f_u);

  double variance_err = 0.0;
  const std::size_t v = w.rows(), d = w.cols();
  for (const auto& q : unit_sphere_samples(d, 16, derive_seed(seed, kFisherSamples))) {
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      double wq = 0.0;
      for (std::size_t k = 0; k < d; ++k) wq += w.at(i, k) * q[k];
      mean += p[i] * wq;
      second += p[i] * wq * wq;
    }
    variance_err = std::max(variance_err, relative_error(quadratic_form(f_u, q), second - mean * mean, 1.0));
  }

  OracleReport r;
  r.check = "fisher_identities";
  r.seed = seed;
  r.measured = {trace_err, lambda_min, variance_err};
  r.reference = {0.0, 0.0, 0.0};
  r.tolerance = tolerance;
  r.pass = trace_err <= tolerance && lambda_min >= -tolerance && variance_err <= tolerance;
  r.detail = "[shortcut-vs-direct trace error, min eigenvalue of F_u, variance-identity error]";
  return r;
}

OracleReport check_path_integration(const ModelConfig& config, const Weights& weights,
                                    std::span<const TokenId> tokens, TokenId target, std::size_t steps,
                                    const ScopeOptions& options) {
  const auto semantic = semantic_scope(config, weights, tokens, target, options);
  const double one = 1.0;
  const auto profile = ig_integrand_profile(config, weights, tokens, target, std::span<const double>(&one, 1),
                                            std::nullopt, options);
  double endpoint_err = 0.0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    endpoint_err = std::max(endpoint_err, std::abs(profile.scores[0][t] - semantic.scores[t]));
  }
  const auto detail = integrated_semantic_detail(config, weights, tokens, target, PathSpec{steps, std::nullopt}, options);
  const double completeness = detail.completeness_residual();

  OracleReport r;
  r.check = "path_integration";
  r.samples = steps;
  r.measured = {endpoint_err, completeness};
  r.reference = {0.0, 0.0};
  r.tolerance = 1e-10;
  r.pass = endpoint_err <= 1e-10 && completeness < 0.05;
  r.extras.emplace_back("z_input", detail.z_input);
  r.extras.emplace_back("z_baseline", detail.z_baseline);
  r.detail = "[alpha=1 integrand vs Semantic Scope (1e-10), completeness residual (< 0.05)]";
  return r;
}

OracleReport check_backward_accounting(const ModelConfig& config, const Weights& weights,
                                       std::span<const TokenId> tokens, TokenId target, std::size_t steps,
                                       const ScopeOptions& options) {
  const auto sem = semantic_scope(config, weights, tokens, target, options);
  const auto tmp = temperature_scope(config, weights, tokens, options);
  const auto fis = fisher_scope(config, weights, tokens, options);
  const auto ig = integrated_semantic_scope(config, weights, tokens, target, PathSpec{steps, std::nullopt}, options);
  OracleReport r;
  r.check = "backward_pass_accounting";
  r.measured = {static_cast<double>(sem.backward_passes), static_cast<double>(tmp.backward_passes),
                static_cast<double>(fis.backward_passes), static_cast<double>(ig.backward_passes)};
  r.reference = {1.0, 1.0, static_cast<double>(config.d_model), static_cast<double>(steps)};
  r.tolerance = 0.0;
  r.pass = r.measured == r.reference;
  r.detail = "[semantic, temperature, fisher, integrated]";
  return r;
}

std::vector<OracleReport> run_suite(const ModelConfig& config, const Weights& weights,
                                    std::span<const TokenId> tokens, const SuiteOptions& options) {
  const ScopeOptions scope_opts{};
  const auto out = forward(config, weights, tokens);
  const std::size_t position = options.position.value_or(out.leading);
  const TokenId target = options.target.value_or(argmax(out.logits.data()));
  const std::vector<double> scales = {1e-2, 1e-3, 1e-4};

  std::vector<OracleReport> reports;
  reports.push_back(check_jacobian(config, weights, tokens, position, 1e-5, scope_opts));
  reports.push_back(check_directional_consistency(config, weights, tokens, 20, options.seed, 1e-10, scope_opts));
  reports.push_back(check_fisher_identities(config, weights, tokens, options.seed, 1e-10, scope_opts));
  reports.push_back(check_kl_quadratic(config, weights, tokens, position, scales, options.seed, 8, scope_opts));
  reports.push_back(check_trace_expected_kl(config, weights, tokens, position, options.mc_eps, options.mc_samples,
                                            options.seed, scope_opts));
  const auto w_target = Direction::unembedding_row(weights, target);
  reports.push_back(check_perturbation_geometry(config, weights, tokens, position, w_target.v, 1e-3,
                                                options.geometry_samples, options.seed, scope_opts));
  reports.push_back(check_backward_accounting(config, weights, tokens, target, 8, scope_opts));
  return reports;
}

bool all_passed(const std::vector<OracleReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const OracleReport& r) { return r.pass; });
}

}  // namespace jscope::verify
