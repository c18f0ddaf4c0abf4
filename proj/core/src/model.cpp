// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/model.hpp"

#include <cmath>

#include "jscope/error.hpp"
#include "jscope/ops.hpp"
#include "jscope/random.hpp"

namespace jscope {
namespace {

Tensor normal_tensor(Shape shape, double stddev, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> data(shape_size(shape));
  for (auto& x : data) x = stddev * rng.next_normal();
  return Tensor(std::move(shape), std::move(data));
}

Tensor gain_tensor(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> data(n);
  for (auto& x : data) x = 1.0 + 0.1 * rng.next_normal();
  return Tensor({n}, std::move(data));
}

void check_shape(const std::string& name, const Tensor& t, const Shape& expected) {
  if (t.shape() != expected) {
    throw ValidationError("weights: " + name + " has shape " + shape_string(t.shape()) + ", config expects " +
                          shape_string(expected));
  }
}

void check_tokens(const ModelConfig& config, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw ValidationError("forward: empty token sequence");
  if (tokens.size() > config.max_seq_len) {
    throw ValidationError("forward: sequence length " + std::to_string(tokens.size()) + " exceeds max_seq_len " +
                          std::to_string(config.max_seq_len));
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= config.vocab_size) {
      throw ValidationError("forward: token " + std::to_string(tokens[i]) + " at position " + std::to_string(i) +
                            " out of range for vocab_size " + std::to_string(config.vocab_size));
    }
  }
}

Tensor attention(const ModelConfig& config, const LayerWeights& lw, const Tensor& a) {
  const std::size_t hd = config.d_model / config.n_heads;
  const Tensor q = ops::rotary(ops::matmul_nt(a, lw.wq), config.n_heads, config.rope_base);
  const Tensor k = ops::rotary(ops::matmul_nt(a, lw.wk), config.n_heads, config.rope_base);
  const Tensor v = ops::matmul_nt(a, lw.wv);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  std::vector<Tensor> heads;
  heads.reserve(config.n_heads);
  for (std::size_t h = 0; h < config.n_heads; ++h) {
    const Tensor qh = ops::slice_cols(q, h * hd, hd);
    const Tensor kh = ops::slice_cols(k, h * hd, hd);
    const Tensor vh = ops::slice_cols(v, h * hd, hd);
    const Tensor scores = ops::scale(ops::matmul_nt(qh, kh), inv_sqrt);
    heads.push_back(ops::matmul(ops::softmax(scores, /*causal=*/true), vh));
  }
  const Tensor merged = config.n_heads == 1 ? heads[0] : ops::concat_cols(heads);
  return ops::matmul_nt(merged, lw.wo);
}

Tensor mlp(const LayerWeights& lw, const Tensor& m) {
  const Tensor gate = ops::silu(ops::matmul_nt(m, lw.w_gate));
  const Tensor up = ops::matmul_nt(m, lw.w_up);
  return ops::matmul_nt(ops::mul(gate, up), lw.w_down);
}

template <typename W, typename F>
void visit_weights(W& w, const F& fn) {
  fn("embedding", w.embedding);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    auto& lw = w.layers[l];
    fn(p + "attn_norm", lw.attn_norm);
    fn(p + "wq", lw.wq);
    fn(p + "wk", lw.wk);
    fn(p + "wv", lw.wv);
    fn(p + "wo", lw.wo);
    fn(p + "mlp_norm", lw.mlp_norm);
    fn(p + "w_gate", lw.w_gate);
    fn(p + "w_up", lw.w_up);
    fn(p + "w_down", lw.w_down);
  }
  fn("final_norm", w.final_norm);
  fn("unembedding", w.unembedding);
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ValidationError(std::string("config: ") + name + " must be positive");
  };
  positive(d_model, "d_model");
  positive(n_layers, "n_layers");
  positive(n_heads, "n_heads");
  positive(d_ff, "d_ff");
  positive(vocab_size, "vocab_size");
  positive(max_seq_len, "max_seq_len");
  if (d_model % n_heads != 0) {
    throw ValidationError("config: n_heads " + std::to_string(n_heads) + " does not divide d_model " +
                          std::to_string(d_model));
  }
  if ((d_model / n_heads) % 2 != 0) {
    throw ValidationError("config: head width " + std::to_string(d_model / n_heads) + " must be even for rotary");
  }
  if (!(rope_base > 0.0) || !(norm_eps > 0.0)) throw ValidationError("config: rope_base and norm_eps must be positive");
}

void Weights::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const {
  visit_weights(*this, fn);
}

void Weights::for_each(const std::function<void(const std::string&, Tensor&)>& fn) { visit_weights(*this, fn); }

Weights init_weights(const ModelConfig& config) {
  config.validate();
  const std::size_t d = config.d_model, f = config.d_ff, v = config.vocab_size;
  std::uint64_t stream = 0;
  auto next_seed = [&] { return derive_seed(config.seed, stream++); };
  const double in_d = 1.0 / std::sqrt(static_cast<double>(d));
  const double in_f = 1.0 / std::sqrt(static_cast<double>(f));
  const double depth = 1.0 / std::sqrt(2.0 * static_cast<double>(config.n_layers));

  Weights w;
  w.embedding = normal_tensor({v, d}, 1.0, next_seed());
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    LayerWeights lw;
    lw.attn_norm = gain_tensor(d, next_seed());
    lw.wq = normal_tensor({d, d}, in_d, next_seed());
    lw.wk = normal_tensor({d, d}, in_d, next_seed());
    lw.wv = normal_tensor({d, d}, in_d, next_seed());
    lw.wo = normal_tensor({d, d}, in_d * depth, next_seed());
    lw.mlp_norm = gain_tensor(d, next_seed());
    lw.w_gate = normal_tensor({f, d}, in_d, next_seed());
    lw.w_up = normal_tensor({f, d}, in_d, next_seed());
    lw.w_down = normal_tensor({d, f}, in_f * depth, next_seed());
    w.layers.push_back(std::move(lw));
  }
  w.final_norm = gain_tensor(d, next_seed());
  w.unembedding = normal_tensor({v, d}, in_d, next_seed());
  return w;
}

void validate_weights(const ModelConfig& config, const Weights& weights) {
  config.validate();
  const std::size_t d = config.d_model, f = config.d_ff, v = config.vocab_size;
  if (weights.layers.size() != config.n_layers) {
    throw ValidationError("weights: " + std::to_string(weights.layers.size()) + " layers, config expects " +
                          std::to_string(config.n_layers));
  }
  weights.for_each([&](const std::string& name, const Tensor& t) {
    const auto leaf = name.substr(name.rfind('.') + 1);
    Shape expected;
    if (name == "embedding" || name == "unembedding") expected = {v, d};
    else if (leaf == "attn_norm" || leaf == "mlp_norm" || name == "final_norm") expected = {d};
    else if (leaf == "w_gate" || leaf == "w_up") expected = {f, d};
    else if (leaf == "w_down") expected = {d, f};
    else expected = {d, d};
    check_shape(name, t, expected);
  });
}

Weights attach(const Weights& weights, Tape& tape) {
  Weights out = weights;
  out.for_each([&](const std::string&, Tensor& t) { t = tape.leaf(t); });
  return out;
}

Tensor embed(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens) {
  check_tokens(config, tokens);
  return ops::gather_rows(weights.embedding.detached(), tokens);
}

Tensor residual_stream(const ModelConfig& config, const Weights& weights, const Tensor& embeddings) {
  if (embeddings.rank() != 2 || embeddings.cols() != config.d_model) {
    throw ValidationError("forward: embeddings " + shape_string(embeddings.shape()) + " do not match d_model " +
                          std::to_string(config.d_model));
  }
  if (embeddings.rows() > config.max_seq_len) {
    throw ValidationError("forward: sequence length " + std::to_string(embeddings.rows()) +
                          " exceeds max_seq_len " + std::to_string(config.max_seq_len));
  }
  Tensor h = embeddings;
  for (const auto& lw : weights.layers) {
    h = ops::add(h, attention(config, lw, ops::rms_norm(h, lw.attn_norm, config.norm_eps)));
    h = ops::add(h, mlp(lw, ops::rms_norm(h, lw.mlp_norm, config.norm_eps)));
  }
  return h;
}

Tensor sequence_logits(const ModelConfig& config, const Weights& weights, const Tensor& embeddings) {
  const Tensor h = residual_stream(config, weights, embeddings);
  return ops::matmul_nt(ops::rms_norm(h, weights.final_norm, config.norm_eps), weights.unembedding);
}

ForwardOutput forward_embeddings(const ModelConfig& config, const Weights& weights, const Tensor& embeddings,
                                 Tape* tape, std::optional<std::size_t> leading) {
  ForwardOutput out;
  out.embeddings = (tape != nullptr && embeddings.tape() != tape) ? tape->leaf(embeddings.detached()) : embeddings;
  const std::size_t t = out.embeddings.rows();
  out.leading = leading.value_or(t - 1);
  if (out.leading >= t) {
    throw ValidationError("forward: leading position " + std::to_string(out.leading) + " out of range for length " +
                          std::to_string(t));
  }
  const Tensor h = residual_stream(config, weights, out.embeddings);
  out.y = ops::rms_norm(ops::select_row(h, out.leading), weights.final_norm, config.norm_eps);
  out.logits = ops::matvec(weights.unembedding, out.y);
  out.probs = ops::softmax(out.logits);
  return out;
}

ForwardOutput forward(const ModelConfig& config, const Weights& weights, std::span<const TokenId> tokens,
                      Tape* tape, std::optional<std::size_t> leading) {
  return forward_embeddings(config, weights, embed(config, weights, tokens), tape, leading);
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ValidationError("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<TokenId> greedy_continue(const ModelConfig& config, const Weights& weights,
                                     std::span<const TokenId> tokens, std::size_t n_steps) {
  std::vector<TokenId> seq(tokens.begin(), tokens.end());
  check_tokens(config, seq);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const auto out = forward(config, weights, seq);
    seq.push_back(argmax(out.logits.data()));
  }
  return seq;
}

}  // namespace jscope
