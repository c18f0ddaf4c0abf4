// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jscope/vocab.hpp"

namespace jscope::dynamics {

/// x_{k+1} = r x_k (1 - x_k); returns x_0..x_{n-1}.
/// Requires x0 in (0, 1) and r in [1, 4).
std::vector<double> logistic_map(double r, double x0, std::size_t n);

/// Explicit Euler integration of the Lorenz system, observing x only:
///   x' = sigma (y - x),  y' = x (rho - z) - y,  z' = x y - beta z.
/// Returns x_0..x_{n-1}. Throws NumericalError naming the step at which the
/// state stops being finite.
std::vector<double> lorenz_x(double sigma, double rho, double beta, std::array<double, 3> init, double dt,
                             std::size_t n);

/// lorenz_x plus an observation-level ramp: x_k + drift_rate * k.
std::vector<double> lorenz_with_drift(double sigma, double rho, double beta, std::array<double, 3> init, double dt,
                                      std::size_t n, double drift_rate);

/// Euler-Maruyama for dX = mu dt + sigma dW:
///   x_{k+1} = x_k + mu dt + sigma sqrt(dt) g_k,  g_k = CounterRng::normal(seed, k).
std::vector<double> brownian(double mu, double sigma, double dt, std::uint64_t seed, std::size_t n, double x0 = 0.0);

enum class SystemKind { logistic, lorenz, lorenz_drift, brownian };

std::string system_name(SystemKind kind);  // "logistic", "lorenz", "lorenz-drift", "brownian"
SystemKind parse_system(const std::string& name);

struct TrajectorySpec {
  SystemKind kind = SystemKind::logistic;
  std::size_t n = 256;
  // logistic
  double r = 3.8;
  // logistic and brownian initial value; defaults 0.5 and 0.0 respectively
  std::optional<double> x0;
  // lorenz / lorenz-drift
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  std::array<double, 3> init{1.0, 1.0, 1.0};
  double drift_rate = 0.0;
  // brownian
  double mu = 0.0;
  double diffusion = 1.0;
  std::uint64_t seed = 0;
  /// Integration step; defaults 0.01 (Lorenz) and 1.0 (Brownian).
  std::optional<double> dt;

  double resolved_x0() const;
  double resolved_dt() const;
  /// Throws ValidationError for out-of-range parameters.
  void validate() const;
};

/// Pure function of the spec.
std::vector<double> generate(const TrajectorySpec& spec);

/// Series mapped affinely (min-max) onto integers [lo, hi], comma-interleaved.
struct QuantizedPrompt {
  std::vector<double> raw;
  std::vector<int> values;        // integers in [lo, hi]
  std::vector<TokenId> tokens;    // number, comma, number, comma, ...
  int lo = 10;
  int hi = 99;
  double scale = 0.0;   // (hi - lo) / (max - min); 0 for a constant series
  double offset = 0.0;  // min of the series
  bool bos = false;
};

/// v = round_half_away(lo + (x - offset) * scale). A constant series maps to
/// floor((lo + hi) / 2).
QuantizedPrompt quantize(const std::vector<double>& series, int lo = vocab::kMinNumber, int hi = vocab::kMaxNumber,
                         bool bos = false);
/// offset + (v - lo) / scale; the constant value for a degenerate prompt.
std::vector<double> dequantize(const QuantizedPrompt& prompt);

}  // namespace jscope::dynamics
