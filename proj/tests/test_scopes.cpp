// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "jscope/corpus.hpp"
#include "jscope/error.hpp"
#include "jscope/ops.hpp"
#include "jscope/scopes.hpp"
#include "jscope/train.hpp"
#include "jscope/verify.hpp"
#include "support.hpp"

namespace jscope {
namespace {

using testing::tiny_config;

class Scopes : public ::testing::Test {
 protected:
  ModelConfig cfg = tiny_config();
  Weights w = init_weights(cfg);
  std::vector<TokenId> tokens = vocab::encode_series({29, 30, 31, 45}, false);
};

TEST_F(Scopes, ZeroDirectionGivesZeros) {
  const auto r = directional_influence(cfg, w, tokens, Direction::raw(std::vector<double>(8, 0.0)));
  for (double s : r.scores) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(r.backward_passes, 1u);
}

TEST_F(Scopes, ScoresScaleWithDirection) {
  const auto v = testing::uniform_vector(8, 3);
  auto v2 = v;
  for (auto& x : v2) x *= -2.5;
  const auto a = directional_influence(cfg, w, tokens, Direction::raw(v));
  const auto b = directional_influence(cfg, w, tokens, Direction::raw(v2));
  for (std::size_t t = 0; t < a.scores.size(); ++t) EXPECT_NEAR(b.scores[t], 2.5 * a.scores[t], 1e-12 * (1 + a.scores[t]));
}

TEST_F(Scopes, DirectionalMatchesFiniteDifferenceJacobian) {
  const auto v = testing::uniform_vector(8, 4);
  const auto r = directional_influence(cfg, w, tokens, Direction::raw(v));
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const Tensor j = verify::finite_diff_jacobian(cfg, w, tokens, t);
    double ss = 0.0;
    for (std::size_t c = 0; c < 8; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 8; ++k) acc += v[k] * j.at(k, c);
      ss += acc * acc;
    }
    EXPECT_LT(std::abs(r.scores[t] - std::sqrt(ss)), 1e-5 * std::max(1.0, r.scores[t])) << t;
  }
}

TEST_F(Scopes, SemanticEqualsDirectionalOnUnembeddingRow) {
  const TokenId target = 20;
  const auto sem = semantic_scope(cfg, w, tokens, target);
  const auto dir = directional_influence(cfg, w, tokens, Direction::unembedding_row(w, target));
  EXPECT_EQ(sem.scores, dir.scores);
  EXPECT_EQ(sem.target, target);
  EXPECT_DOUBLE_EQ(*sem.z_target, forward(cfg, w, tokens).logits[target]);
  EXPECT_EQ(sem.backward_passes, 1u);
}

TEST_F(Scopes, DoublingTargetRowDoublesScores) {
  const TokenId target = 7;
  const auto a = semantic_scope(cfg, w, tokens, target);
  Weights w2 = w;
  auto u = w.unembedding.values();
  for (std::size_t c = 0; c < 8; ++c) u[target * 8 + c] *= 2.0;
  w2.unembedding = Tensor(w.unembedding.shape(), u);
  const auto b = semantic_scope(cfg, w2, tokens, target);
  for (std::size_t t = 0; t < a.scores.size(); ++t) EXPECT_NEAR(b.scores[t], 2.0 * a.scores[t], 1e-12 * (1 + a.scores[t]));
}

TEST_F(Scopes, SemanticRejectsBadTarget) {
  EXPECT_THROW(semantic_scope(cfg, w, tokens, 96), ValidationError);
  EXPECT_THROW(directional_influence(cfg, w, tokens, Direction::raw({1.0, 2.0})), ValidationError);
}

TEST(Direction, NormalizedHiddenState) {
  const auto d = Direction::normalized_hidden_state(std::vector<double>{3.0, 4.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(d.v[0], 0.6);
  EXPECT_DOUBLE_EQ(d.v[1], 0.8);
  EXPECT_THROW(Direction::normalized_hidden_state(std::vector<double>(4, 0.0)), NumericalError);
}

TEST_F(Scopes, TemperatureBetaIsHiddenNorm) {
  const auto r = temperature_scope(cfg, w, tokens);
  double ss = 0.0;
  const auto out = forward(cfg, w, tokens);
  for (double y : out.y.data()) ss += y * y;
  EXPECT_NEAR(*r.beta_eff, std::sqrt(ss), 1e-12);
  EXPECT_EQ(r.backward_passes, 1u);
  EXPECT_FALSE(r.target.has_value());
}

TEST_F(Scopes, TemperatureIgnoresUnembedding) {
  Weights w2 = w;
  w2.unembedding = testing::uniform_tensor(w.unembedding.shape(), 99);
  EXPECT_EQ(temperature_scope(cfg, w, tokens).scores, temperature_scope(cfg, w2, tokens).scores);
}

TEST_F(Scopes, TemperatureEqualsDirectionalOnUnitHiddenState) {
  const auto y = forward(cfg, w, tokens).y;
  const auto temp = temperature_scope(cfg, w, tokens);
  const auto dir = directional_influence(cfg, w, tokens, Direction::normalized_hidden_state(y.data()));
  EXPECT_EQ(temp.scores, dir.scores);
}

TEST_F(Scopes, TemperatureIsGradientOfHiddenNorm) {
  // d||y||/dX = J^T y/||y||, so the row norms match finite differences of ||y||.
  const auto r = temperature_scope(cfg, w, tokens);
  const Tensor x0 = embed(cfg, w, tokens);
  const auto grad = testing::numeric_gradient(
      [&](const std::vector<double>& x) {
        return ops::l2_norm(forward_embeddings(cfg, w, Tensor(x0.shape(), x)).y).item();
      },
      x0.values());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    double ss = 0.0;
    for (std::size_t c = 0; c < 8; ++c) ss += grad[t * 8 + c] * grad[t * 8 + c];
    EXPECT_NEAR(r.scores[t], std::sqrt(ss), 1e-6);
  }
}

TEST_F(Scopes, LeadingPositionZerosLaterScores) {
  ScopeOptions opt;
  opt.leading = 2;
  const auto r = semantic_scope(cfg, w, tokens, 4, opt);
  EXPECT_EQ(r.leading, 2u);
  for (std::size_t t = 3; t < tokens.size(); ++t) EXPECT_EQ(r.scores[t], 0.0);
  EXPECT_GT(r.scores[2], 0.0);
  const std::vector<TokenId> prefix(tokens.begin(), tokens.begin() + 3);
  const auto p = semantic_scope(cfg, w, prefix, 4);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_NEAR(r.scores[t], p.scores[t], 1e-12);

  const auto j = full_jacobian(cfg, w, tokens, 5, opt);
  for (double x : j.matrix.data()) EXPECT_EQ(x, 0.0);
}

TEST(FisherMetric, TwoTokenClosedForm) {
  const Tensor wu = Tensor::matrix(2, 3, {1.0, -2.0, 0.5, 0.0, 1.0, 3.0});
  const std::vector<double> p = {0.3, 0.7};
  const Tensor f = fisher_output_metric(p, wu);
  const double diff[3] = {1.0, -3.0, -2.5};
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) EXPECT_NEAR(f.at(a, b), 0.21 * diff[a] * diff[b], 1e-14);
}

TEST(FisherMetric, RejectsBadDistribution) {
  const Tensor wu = Tensor::zeros({2, 3});
  EXPECT_THROW(fisher_output_metric(std::vector<double>{0.5, 0.6}, wu), ValidationError);
  EXPECT_THROW(fisher_output_metric(std::vector<double>{-0.1, 1.1}, wu), ValidationError);
  EXPECT_THROW(fisher_output_metric(std::vector<double>{1.0}, wu), ValidationError);
}

TEST_F(Scopes, OutputMetricIsSymmetricPsd) {
  const auto p = forward(cfg, w, tokens).probs.values();
  const Tensor f = fisher_output_metric(p, w.unembedding);
  EXPECT_GE(verify::min_eigenvalue(f), -1e-12);
  for (std::size_t a = 0; a < 8; ++a)
    for (std::size_t b = 0; b < 8; ++b) EXPECT_NEAR(f.at(a, b), f.at(b, a), 0.0);
}

TEST_F(Scopes, FisherTraceMatchesPullback) {
  const auto p = forward(cfg, w, tokens).probs.values();
  const auto blocks = all_jacobians(cfg, w, tokens);
  const Tensor f = fisher_output_metric(p, w.unembedding);
  for (const auto& b : blocks) {
    const Tensor g = pullback_metric(b.matrix, f);
    double tr = 0.0;
    for (std::size_t i = 0; i < 8; ++i) tr += g.at(i, i);
    EXPECT_NEAR(fisher_trace(b.matrix, p, w.unembedding), tr, 1e-10 * std::max(1.0, tr));
    EXPECT_GE(verify::min_eigenvalue(g), -1e-10);
  }
}

TEST_F(Scopes, FisherScoresNonNegativeWithDPasses) {
  const auto r = fisher_scope(cfg, w, tokens);
  for (double s : r.scores) EXPECT_GE(s, 0.0);
  EXPECT_EQ(r.backward_passes, cfg.d_model);
  EXPECT_EQ(r.scope, ScopeKind::fisher);
}

TEST_F(Scopes, DelimiterMaskAndArgmax) {
  const auto r = temperature_scope(cfg, w, tokens);
  ASSERT_EQ(r.delimiter_mask.size(), tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) EXPECT_EQ(r.delimiter_mask[t], t % 2 == 1);
  EXPECT_EQ(r.argmax_position() % 2, 0u);
}

TEST(Result, TopKBreaksTiesByLowerId) {
  AttributionResult r;
  r.probs = {0.1, 0.3, 0.3, 0.2, 0.1};
  const auto top = r.top_k(3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].first, 1u);
  EXPECT_EQ(top[1].first, 2u);
  EXPECT_EQ(top[2].first, 3u);
  EXPECT_EQ(r.top_k(10).size(), 5u);
}

TEST(ScopeNames, RoundTrip) {
  for (auto k : {ScopeKind::directional, ScopeKind::semantic, ScopeKind::temperature, ScopeKind::fisher,
                 ScopeKind::integrated_semantic}) {
    EXPECT_EQ(parse_scope(scope_name(k)), k);
  }
  EXPECT_THROW(parse_scope("gradient"), ValidationError);
}

TEST(MotifModel, ScopesPointAtFirstOccurrence) {
  const corpus::MotifTask task;
  ModelConfig cfg = tiny_config(32, 2, 2, 0);
  TrainParams p;
  p.steps = 500;
  p.learning_rate = 3e-3;
  p.warmup_steps = 100;
  p.batch_size = 8;
  const auto w = train(cfg, corpus::motif_corpus(task, 2000, 5), p).weights;

  std::size_t semantic_hits = 0, n = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto probe = corpus::motif_probe(task, derive_seed(31337, s), 2);
    const auto r = semantic_scope(cfg, w, probe.prompt, probe.target);
    const auto at = r.argmax_position();
    semantic_hits += (at >= probe.window_begin && at < probe.window_end) ? 1 : 0;
    ++n;
  }
  EXPECT_GE(static_cast<double>(semantic_hits) / static_cast<double>(n), 0.7) << semantic_hits << "/" << n;
}

}  // namespace
}  // namespace jscope
