// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "jscope/model.hpp"
#include "jscope/random.hpp"

namespace jscope::testing {

inline ModelConfig tiny_config(std::size_t d = 8, std::size_t layers = 2, std::size_t heads = 2,
                               std::uint64_t seed = 3) {
  ModelConfig c;
  c.d_model = d;
  c.n_layers = layers;
  c.n_heads = heads;
  c.d_ff = 2 * d;
  c.max_seq_len = 64;
  c.seed = seed;
  return c;
}

inline std::vector<double> uniform_vector(std::size_t n, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
  CounterRng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.next_uniform();
  return v;
}

inline Tensor uniform_tensor(Shape shape, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
  const auto n = shape_size(shape);
  return Tensor(std::move(shape), uniform_vector(n, seed, lo, hi));
}

/// Central-difference gradient of a scalar function.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, 1e-3 * max_j |b_j|)
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0.0;
  for (double x : b) scale = std::max(scale, std::abs(x));
  const double floor = std::max(1e-3 * scale, 1e-300);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max({std::abs(a[i]), std::abs(b[i]), floor}));
  }
  return worst;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace jscope::testing
