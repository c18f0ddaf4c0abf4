// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "jscope/train.hpp"

/// Synthetic training corpora over the numeric vocabulary.
namespace jscope::corpus {

/// Motif repetition: prefix filler, motif, gap filler, the same motif again.
/// Motif numbers are distinct and never appear in the filler, so the second
/// occurrence is predictable only by copying from the first.
struct MotifTask {
  std::size_t prefix_len = 4;
  std::size_t motif_len = 5;
  std::size_t gap_len = 4;
  bool bos = false;

  std::size_t series_len() const { return prefix_len + 2 * motif_len + gap_len; }
  void validate() const;
};

struct MotifSample {
  std::vector<int> values;
  std::vector<TokenId> tokens;
  /// Token index range [first_begin, first_end) of the first motif, commas included.
  std::size_t first_begin = 0;
  std::size_t first_end = 0;
  /// Token index of the first number of the repeated motif.
  std::size_t second_begin = 0;
};

MotifSample motif_sample(const MotifTask& task, std::uint64_t seed);
Dataset motif_corpus(const MotifTask& task, std::size_t count, std::uint64_t seed);

/// A motif sample cut after `shown` numbers of the repeat (and their commas),
/// so the next token is motif element `shown`.
struct MotifProbe {
  MotifSample sample;
  std::vector<TokenId> prompt;
  TokenId target = 0;
  std::size_t window_begin = 0;
  std::size_t window_end = 0;
};
MotifProbe motif_probe(const MotifTask& task, std::uint64_t seed, std::size_t shown);

/// Quantized logistic-map series with r uniform in [r_lo, r_hi] and x0
/// uniform in (0, 1), `n` numbers each.
Dataset logistic_corpus(std::size_t count, std::size_t n, std::uint64_t seed, double r_lo = 3.6, double r_hi = 4.0,
                        bool bos = false);

}  // namespace jscope::corpus
