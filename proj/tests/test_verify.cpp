// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "jscope/error.hpp"
#include "jscope/random.hpp"
#include "jscope/verify.hpp"
#include "support.hpp"

namespace jscope::verify {
namespace {

using testing::tiny_config;

TEST(FiniteDifferences, ExactForLinearMap) {
  const Tensor a = testing::uniform_tensor({3, 4}, 1);
  auto f = [&](const std::vector<double>& x) {
    std::vector<double> y(3, 0.0);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 4; ++c) y[r] += a.at(r, c) * x[c];
    return y;
  };
  const Tensor j = central_difference_jacobian(f, testing::uniform_vector(4, 2));
  EXPECT_LT(testing::max_abs_diff(j.data(), a.data()), 1e-9);
  EXPECT_THROW(central_difference_jacobian(f, std::vector<double>(4, 0.0), 0.0), ValidationError);
}

TEST(FiniteDifferences, ZeroBeyondLeadingPosition) {
  const auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  const auto tokens = vocab::encode_series({11, 12, 13}, false);
  ScopeOptions opt;
  opt.leading = 1;
  const Tensor j = finite_diff_jacobian(cfg, w, tokens, 3, kFiniteDifferenceStep, opt);
  for (double v : j.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(finite_diff_jacobian(cfg, w, tokens, 6), ValidationError);
}

TEST(Kl, KnownValues) {
  EXPECT_NEAR(kl(std::vector<double>{0.5, 0.5}, std::vector<double>{0.75, 0.25}), 0.5 * std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(kl(std::vector<double>{0.5, 0.5}, std::vector<double>{0.75, 0.25}), 0.14384, 1e-5);
  EXPECT_EQ(kl(std::vector<double>{0.2, 0.8}, std::vector<double>{0.2, 0.8}), 0.0);
  EXPECT_EQ(kl(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 0.5}), std::log(2.0));
}

TEST(Kl, SupportAndLengthErrors) {
  EXPECT_THROW(kl(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}), ValidationError);
  EXPECT_THROW(kl(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), ValidationError);
}

TEST(Kl, GibbsInequality) {
  CounterRng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(5), q(5);
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      sp += (p[i] = rng.next_uniform() + 1e-9);
      sq += (q[i] = rng.next_uniform() + 1e-9);
    }
    for (std::size_t i = 0; i < 5; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    EXPECT_GE(kl(p, q), -1e-15);
  }
}

TEST(Perturbation, ZeroDeltaGivesZeroKl) {
  const auto cfg = tiny_config();
  const auto w = init_weights(cfg);
  const auto tokens = vocab::encode_series({40, 41}, false);
  const Tensor x = embed(cfg, w, tokens);
  const auto p = forward(cfg, w, tokens).probs.values();
  EXPECT_EQ(kl(p, perturbed_probs(cfg, w, x, 0, std::vector<double>(8, 0.0))), 0.0);
}

TEST(Perturbation, ConstantUnembeddingIsBlind) {
  // Identical rows of W make every logit equal, so F_u = 0 and no perturbation moves p.
  const auto cfg = tiny_config();
  auto w = init_weights(cfg);
  w.unembedding = Tensor::filled(w.unembedding.shape(), 0.3);
  const auto tokens = vocab::encode_series({40, 41}, false);
  const Tensor x = embed(cfg, w, tokens);
  const auto p = forward(cfg, w, tokens).probs.values();
  const auto q = perturbed_probs(cfg, w, x, 2, testing::uniform_vector(8, 5));
  EXPECT_NEAR(kl(p, q), 0.0, 1e-15);
  for (double s : fisher_scope(cfg, w, tokens).scores) EXPECT_NEAR(s, 0.0, 1e-12);
}

TEST(UnitSphere, SecondMomentIsIsotropic) {
  const std::size_t d = 8, n = 100000;
  const auto us = unit_sphere_samples(d, n, 3);
  std::vector<double> m(d * d, 0.0);
  for (const auto& u : us) {
    double norm = 0.0;
    for (double x : u) norm += x * x;
    ASSERT_NEAR(norm, 1.0, 1e-12);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) m[a * d + b] += u[a] * u[b];
  }
  double err = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      const double ref = a == b ? 1.0 / static_cast<double>(d) : 0.0;
      err += std::pow(m[a * d + b] / static_cast<double>(n) - ref, 2);
    }
  }
  const double ref_norm = 1.0 / std::sqrt(static_cast<double>(d));
  EXPECT_LT(std::sqrt(err) / ref_norm, 0.02);
}

TEST(LogLog, SlopeOfPowerLaw) {
  const std::vector<double> s = {1e-1, 1e-2, 1e-3};
  const std::vector<double> r = {2e-3, 2e-6, 2e-9};
  EXPECT_NEAR(loglog_slope(s, r), 3.0, 1e-12);
  EXPECT_THROW(loglog_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), ValidationError);
}

TEST(Eigen, MinEigenvalue) {
  EXPECT_NEAR(min_eigenvalue(Tensor::matrix(2, 2, {2.0, 1.0, 1.0, 2.0})), 1.0, 1e-14);
  EXPECT_THROW(min_eigenvalue(Tensor::zeros({2, 3})), ValidationError);
}

class Checks : public ::testing::Test {
 protected:
  ModelConfig cfg = tiny_config();
  Weights w = init_weights(cfg);
  std::vector<TokenId> tokens = vocab::encode_series({29, 30}, false);
  std::size_t lead = 2;
};

TEST_F(Checks, JacobianAgreesWithFiniteDifferences) {
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto r = check_jacobian(cfg, w, tokens, t);
    EXPECT_TRUE(r.pass) << r.detail << " measured " << r.measured[0];
  }
}

TEST_F(Checks, DirectionalConsistency) {
  const auto r = check_directional_consistency(cfg, w, tokens, 20, 1);
  EXPECT_TRUE(r.pass) << r.detail;
  EXPECT_EQ(r.samples, 20u);
}

TEST_F(Checks, FisherIdentities) {
  const auto r = check_fisher_identities(cfg, w, tokens, 2);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST_F(Checks, KlIsQuadraticInPerturbation) {
  const std::vector<double> scales = {1e-2, 1e-3, 1e-4};
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto r = check_kl_quadratic(cfg, w, tokens, t, scales, 7);
    EXPECT_TRUE(r.pass) << "position " << t << " slope " << r.measured[0];
  }
}

TEST_F(Checks, TraceMatchesExpectedKl) {
  const auto r = check_trace_expected_kl(cfg, w, tokens, lead, 1e-3, 20000, 11);
  EXPECT_TRUE(r.pass) << r.measured[0] << " vs " << r.reference[0];
  ASSERT_TRUE(r.standard_error.has_value());
  EXPECT_GT(*r.standard_error, 0.0);
}

TEST_F(Checks, PerturbationGeometry) {
  const auto v = Direction::unembedding_row(w, 30).v;
  const auto r = check_perturbation_geometry(cfg, w, tokens, 0, v, 1e-3, 200, 5);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST_F(Checks, GeometryWithZeroDirectionIsDegeneratePass) {
  const auto r = check_perturbation_geometry(cfg, w, tokens, 0, std::vector<double>(8, 0.0), 1e-3, 20, 5);
  EXPECT_TRUE(r.pass);
  EXPECT_NE(r.detail.find("degenerate"), std::string::npos);
}

TEST_F(Checks, BackwardAccounting) {
  const auto r = check_backward_accounting(cfg, w, tokens, 4, 6);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.reference, (std::vector<double>{1.0, 1.0, 8.0, 6.0}));
}

TEST_F(Checks, SuiteRunsAndPasses) {
  SuiteOptions opt;
  opt.mc_samples = 5000;
  const auto reports = run_suite(cfg, w, tokens, opt);
  EXPECT_GE(reports.size(), 7u);
  for (const auto& r : reports) EXPECT_TRUE(r.pass) << r.check << ": " << r.detail;
  EXPECT_TRUE(all_passed(reports));
}

TEST_F(Checks, ReportsAreDeterministic) {
  const auto a = check_trace_expected_kl(cfg, w, tokens, 0, 1e-3, 500, 3);
  const auto b = check_trace_expected_kl(cfg, w, tokens, 0, 1e-3, 500, 3);
  EXPECT_EQ(a.measured, b.measured);
}

}  // namespace
}  // namespace jscope::verify
