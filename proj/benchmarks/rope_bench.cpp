// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <vector>

#include "ropeext/rescale.hpp"
#include "ropeext/rope.hpp"

namespace {

using namespace ropeext;

void BM_CriticalDimension(benchmark::State& state) {
  const RopeConfig c = presets::phi3_mini();
  for (auto _ : state) benchmark::DoNotOptimize(theoretical_critical_dimension(c));
}
BENCHMARK(BM_CriticalDimension);

void BM_ApplyRope(benchmark::State& state) {
  RopeConfig c = presets::phi3_mini();
  c.head_dim = static_cast<int>(state.range(0));
  const AngleVector angles = rotation_angles(c);
  std::vector<double> x(static_cast<std::size_t>(c.head_dim), 0.5);
  std::int64_t pos = 0;
  for (auto _ : state) benchmark::DoNotOptimize(apply_rope(x, ++pos, angles));
}
BENCHMARK(BM_ApplyRope)->Arg(64)->Arg(96)->Arg(128);

void BM_YarnFactors(benchmark::State& state) {
  const RopeConfig c = presets::llama3_8b();
  for (auto _ : state) benchmark::DoNotOptimize(yarn_factors(c));
}
BENCHMARK(BM_YarnFactors);

void BM_DecayProfile(benchmark::State& state) {
  const AngleVector angles = rotation_angles(presets::phi3_mini());
  for (auto _ : state) benchmark::DoNotOptimize(decay_profile(angles, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DecayProfile)->Arg(1024)->Arg(16384);

}  // namespace
