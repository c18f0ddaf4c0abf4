// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "jscope/error.hpp"
#include "jscope/random.hpp"

namespace jscope::dynamics {
namespace {

void require_length(std::size_t n) {
  if (n < 2) throw ValidationError("trajectory: n must be at least 2, got " + std::to_string(n));
}

void require_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("trajectory: dt must be positive, got " + std::to_string(dt));
}

}  // namespace

std::vector<double> logistic_map(double r, double x0, std::size_t n) {
  require_length(n);
  if (!(r >= 1.0 && r < 4.0)) throw ValidationError("logistic map: r = " + std::to_string(r) + " outside [1, 4)");
  if (!(x0 > 0.0 && x0 < 1.0)) throw ValidationError("logistic map: x0 = " + std::to_string(x0) + " outside (0, 1)");
  std::vector<double> x(n);
  x[0] = x0;
  for (std::size_t k = 1; k < n; ++k) x[k] = r * x[k - 1] * (1.0 - x[k - 1]);
  return x;
}

std::vector<double> lorenz_x(double sigma, double rho, double beta, std::array<double, 3> init, double dt,
                             std::size_t n) {
  require_length(n);
  require_dt(dt);
  auto [x, y, z] = init;
  std::vector<double> out(n);
  out[0] = x;
  for (std::size_t k = 1; k < n; ++k) {
    const double dx = sigma * (y - x);
    const double dy = x * (rho - z) - y;
    const double dz = x * y - beta * z;
    x += dt * dx;
    y += dt * dy;
    z += dt * dz;
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw NumericalError("lorenz: state became non-finite at step " + std::to_string(k) + " (dt = " +
                           std::to_string(dt) + " too large?)");
    }
    out[k] = x;
  }
  return out;
}

std::vector<double> lorenz_with_drift(double sigma, double rho, double beta, std::array<double, 3> init, double dt,
                                      std::size_t n, double drift_rate) {
  auto out = lorenz_x(sigma, rho, beta, init, dt, n);
  for (std::size_t k = 0; k < n; ++k) out[k] += drift_rate * static_cast<double>(k);
  return out;
}

std::vector<double> brownian(double mu, double sigma, double dt, std::uint64_t seed, std::size_t n, double x0) {
  require_length(n);
  require_dt(dt);
  if (!(sigma >= 0.0)) throw ValidationError("brownian: diffusion must be non-negative, got " + std::to_string(sigma));
  std::vector<double> out(n);
  out[0] = x0;
  const double step_sd = sigma * std::sqrt(dt);
  for (std::size_t k = 1; k < n; ++k) {
    out[k] = out[k - 1] + mu * dt + step_sd * CounterRng::normal(seed, k - 1);
  }
  return out;
}

std::string system_name(SystemKind kind) {
  switch (kind) {
    case SystemKind::logistic: return "logistic";
    case SystemKind::lorenz: return "lorenz";
    case SystemKind::lorenz_drift: return "lorenz-drift";
    case SystemKind::brownian: return "brownian";
  }
  return "unknown";
}

SystemKind parse_system(const std::string& name) {
  for (auto k : {SystemKind::logistic, SystemKind::lorenz, SystemKind::lorenz_drift, SystemKind::brownian}) {
    if (system_name(k) == name) return k;
  }
  throw ValidationError("unknown system '" + name + "' (expected logistic, lorenz, lorenz-drift or brownian)");
}

double TrajectorySpec::resolved_x0() const {
  if (x0) return *x0;
  return kind == SystemKind::brownian ? 0.0 : 0.5;
}

double TrajectorySpec::resolved_dt() const {
  if (dt) return *dt;
  return kind == SystemKind::brownian ? 1.0 : 0.01;
}

void TrajectorySpec::validate() const {
  require_length(n);
  switch (kind) {
    case SystemKind::logistic:
      if (!(r >= 1.0 && r < 4.0)) throw ValidationError("logistic map: r = " + std::to_string(r) + " outside [1, 4)");
      if (!(resolved_x0() > 0.0 && resolved_x0() < 1.0)) {
        throw ValidationError("logistic map: x0 = " + std::to_string(resolved_x0()) + " outside (0, 1)");
      }
      break;
    case SystemKind::lorenz:
    case SystemKind::lorenz_drift:
      require_dt(resolved_dt());
      for (double v : init) {
        if (!std::isfinite(v)) throw ValidationError("lorenz: non-finite initial condition");
      }
      break;
    case SystemKind::brownian:
      require_dt(resolved_dt());
      if (!(diffusion >= 0.0)) throw ValidationError("brownian: diffusion must be non-negative");
      break;
  }
}

std::vector<double> generate(const TrajectorySpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case SystemKind::logistic: return logistic_map(spec.r, spec.resolved_x0(), spec.n);
    case SystemKind::lorenz: return lorenz_x(spec.sigma, spec.rho, spec.beta, spec.init, spec.resolved_dt(), spec.n);
    case SystemKind::lorenz_drift:
      return lorenz_with_drift(spec.sigma, spec.rho, spec.beta, spec.init, spec.resolved_dt(), spec.n, spec.drift_rate);
    case SystemKind::brownian:
      return brownian(spec.mu, spec.diffusion, spec.resolved_dt(), spec.seed, spec.n, spec.resolved_x0());
  }
  throw ValidationError("unknown system kind");
}

QuantizedPrompt quantize(const std::vector<double>& series, int lo, int hi, bool bos) {
  if (series.empty()) throw ValidationError("quantize: empty series");
  if (lo < vocab::kMinNumber || hi > vocab::kMaxNumber || lo >= hi) {
    throw ValidationError("quantize: bounds [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] must satisfy 10 <= lo < hi <= 99");
  }
  for (double x : series) {
    if (!std::isfinite(x)) throw ValidationError("quantize: non-finite value in series");
  }
  QuantizedPrompt q;
  q.raw = series;
  q.lo = lo;
  q.hi = hi;
  q.bos = bos;
  const auto [mn, mx] = std::minmax_element(series.begin(), series.end());
  q.offset = *mn;
  q.values.resize(series.size());
  if (*mx == *mn) {
    q.scale = 0.0;
    std::fill(q.values.begin(), q.values.end(), (lo + hi) / 2);
  } else {
    q.scale = static_cast<double>(hi - lo) / (*mx - *mn);
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double v = std::round(static_cast<double>(lo) + (series[i] - q.offset) * q.scale);
      q.values[i] = std::clamp(static_cast<int>(v), lo, hi);
    }
  }
  q.tokens = vocab::encode_series(q.values, bos);
  return q;
}

std::vector<double> dequantize(const QuantizedPrompt& prompt) {
  std::vector<double> out(prompt.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = prompt.scale == 0.0 ? prompt.offset
                                 : prompt.offset + static_cast<double>(prompt.values[i] - prompt.lo) / prompt.scale;
  }
  return out;
}

}  // namespace jscope::dynamics
