// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace jscope {

/// Counter-based generator: every draw is a pure function of (seed, counter),
/// so streams are reproducible across platforms and standard libraries.
///
///   bits(seed, k)    = splitmix64(seed + (k + 1) * 0x9E3779B97F4A7C15)
///   uniform(seed, k) = (bits >> 11) * 2^-53                 in [0, 1)
///   normal(seed, k)  = sqrt(-2 ln(1 - u0)) * cos(2 pi u1)
///                      with u0 = uniform(seed, 2k), u1 = uniform(seed, 2k + 1)
///
/// splitmix64 is the finalizer from Steele, Lea and Flood (2014).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  static std::uint64_t bits(std::uint64_t seed, std::uint64_t k);
  static double uniform(std::uint64_t seed, std::uint64_t k);
  static double normal(std::uint64_t seed, std::uint64_t k);

  std::uint64_t next_bits() { return bits(seed_, counter_++); }
  double next_uniform() { return uniform(seed_, counter_++); }
  double next_normal() { return normal(seed_, counter_++); }
  /// Uniform integer in [0, n) by rejection.
  std::uint64_t next_below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

/// Derive an independent stream seed for a named purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace jscope
