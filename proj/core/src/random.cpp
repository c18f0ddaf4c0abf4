// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/random.hpp"

#include <cmath>
#include <numbers>

#include "jscope/error.hpp"

namespace jscope {
namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t CounterRng::bits(std::uint64_t seed, std::uint64_t k) {
  return splitmix64(seed + (k + 1) * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform(std::uint64_t seed, std::uint64_t k) {
  return static_cast<double>(bits(seed, k) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t seed, std::uint64_t k) {
  const double u0 = uniform(seed, 2 * k);
  const double u1 = uniform(seed, 2 * k + 1);
  return std::sqrt(-2.0 * std::log(1.0 - u0)) * std::cos(2.0 * std::numbers::pi * u1);
}

std::uint64_t CounterRng::next_below(std::uint64_t n) {
  if (n == 0) throw ValidationError("next_below: empty range");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const std::uint64_t b = next_bits();
    if (b < limit) return b % n;
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

}  // namespace jscope
