// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/corpus.hpp"

#include <algorithm>
#include <numeric>

#include "jscope/dynamics.hpp"
#include "jscope/error.hpp"
#include "jscope/random.hpp"

namespace jscope::corpus {
namespace {

constexpr int kNumbers = vocab::kMaxNumber - vocab::kMinNumber + 1;

}  // namespace

void MotifTask::validate() const {
  if (motif_len == 0) throw ValidationError("motif task: motif_len must be positive");
  if (motif_len >= static_cast<std::size_t>(kNumbers)) {
    throw ValidationError("motif task: motif_len " + std::to_string(motif_len) + " leaves no filler numbers");
  }
}

MotifSample motif_sample(const MotifTask& task, std::uint64_t seed) {
  task.validate();
  CounterRng rng(seed);
  std::vector<int> pool(kNumbers);
  std::iota(pool.begin(), pool.end(), vocab::kMinNumber);
  for (std::size_t i = 0; i < task.motif_len; ++i) {
    std::swap(pool[i], pool[i + rng.next_below(pool.size() - i)]);
  }
  const std::vector<int> motif(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(task.motif_len));
  const std::vector<int> filler(pool.begin() + static_cast<std::ptrdiff_t>(task.motif_len), pool.end());
  auto fill = [&](std::vector<int>& out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(filler[rng.next_below(filler.size())]);
  };

  MotifSample s;
  fill(s.values, task.prefix_len);
  s.values.insert(s.values.end(), motif.begin(), motif.end());
  fill(s.values, task.gap_len);
  s.values.insert(s.values.end(), motif.begin(), motif.end());
  s.tokens = vocab::encode_series(s.values, task.bos);
  const std::size_t off = task.bos ? 1 : 0;
  s.first_begin = off + 2 * task.prefix_len;
  s.first_end = s.first_begin + 2 * task.motif_len;
  s.second_begin = s.first_end + 2 * task.gap_len;
  return s;
}

Dataset motif_corpus(const MotifTask& task, std::size_t count, std::uint64_t seed) {
  Dataset out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(motif_sample(task, derive_seed(seed, i)).tokens);
  return out;
}

MotifProbe motif_probe(const MotifTask& task, std::uint64_t seed, std::size_t shown) {
  if (shown == 0 || shown >= task.motif_len) {
    throw ValidationError("motif probe: shown must be in [1, " + std::to_string(task.motif_len - 1) + "], got " +
                          std::to_string(shown));
  }
  MotifProbe p;
  p.sample = motif_sample(task, seed);
  const std::size_t cut = p.sample.second_begin + 2 * shown;
  p.prompt.assign(p.sample.tokens.begin(), p.sample.tokens.begin() + static_cast<std::ptrdiff_t>(cut));
  p.target = p.sample.tokens[cut];
  p.window_begin = p.sample.first_begin;
  p.window_end = p.sample.first_end;
  return p;
}

Dataset logistic_corpus(std::size_t count, std::size_t n, std::uint64_t seed, double r_lo, double r_hi, bool bos) {
  if (!(r_lo <= r_hi)) throw ValidationError("logistic corpus: r_lo must not exceed r_hi");
  Dataset out;
  out.reserve(count);
  CounterRng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    dynamics::TrajectorySpec spec;
    spec.kind = dynamics::SystemKind::logistic;
    spec.n = n;
    spec.r = r_lo + (r_hi - r_lo) * rng.next_uniform();
    spec.x0 = 0.01 + 0.98 * rng.next_uniform();
    spec.validate();
    out.push_back(dynamics::quantize(dynamics::generate(spec), vocab::kMinNumber, vocab::kMaxNumber, bos).tokens);
  }
  return out;
}

}  // namespace jscope::corpus
