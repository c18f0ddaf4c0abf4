// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "jscope/ops.hpp"
#include "jscope/pathint.hpp"
#include "jscope/random.hpp"
#include "jscope/scopes.hpp"

namespace {

using namespace jscope;

ModelConfig bench_config(std::size_t d) {
  ModelConfig c;
  c.d_model = d;
  c.n_layers = 2;
  c.n_heads = 4;
  c.d_ff = 2 * d;
  c.max_seq_len = 128;
  return c;
}

std::vector<TokenId> bench_prompt(std::size_t numbers) {
  std::vector<int> v;
  for (std::size_t i = 0; i < numbers; ++i) v.push_back(10 + static_cast<int>((7 * i) % 90));
  return vocab::encode_series(v, false);
}

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> data(r * c);
  for (auto& x : data) x = rng.next_normal();
  return Tensor::matrix(r, c, std::move(data));
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 128)->Complexity(benchmark::oNCubed);

void BM_Forward(benchmark::State& state) {
  const auto cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  const auto w = init_weights(cfg);
  const auto tokens = bench_prompt(16);
  for (auto _ : state) benchmark::DoNotOptimize(forward(cfg, w, tokens));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64);

void BM_Semantic(benchmark::State& state) {
  const auto cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  const auto w = init_weights(cfg);
  const auto tokens = bench_prompt(16);
  for (auto _ : state) benchmark::DoNotOptimize(semantic_scope(cfg, w, tokens, 5));
}
BENCHMARK(BM_Semantic)->Arg(32)->Arg(64);

void BM_Temperature(benchmark::State& state) {
  const auto cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  const auto w = init_weights(cfg);
  const auto tokens = bench_prompt(16);
  for (auto _ : state) benchmark::DoNotOptimize(temperature_scope(cfg, w, tokens));
}
BENCHMARK(BM_Temperature)->Arg(32)->Arg(64);

void BM_Fisher(benchmark::State& state) {
  const auto cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  const auto w = init_weights(cfg);
  const auto tokens = bench_prompt(16);
  for (auto _ : state) benchmark::DoNotOptimize(fisher_scope(cfg, w, tokens));
}
BENCHMARK(BM_Fisher)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Integrated(benchmark::State& state) {
  const auto cfg = bench_config(32);
  const auto w = init_weights(cfg);
  const auto tokens = bench_prompt(16);
  PathSpec spec;
  spec.steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrated_semantic_scope(cfg, w, tokens, 5, spec));
}
BENCHMARK(BM_Integrated)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
