// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ropeext/packing.hpp"
#include "ropeext/rng.hpp"

namespace {

using namespace ropeext;

std::vector<DocSpec> mix(int n) {
  Rng rng(7);
  std::vector<DocSpec> docs;
  for (int i = 0; i < n; ++i) {
    const bool is_long = rng.bernoulli(0.2);
    const auto len = is_long ? 4097 + static_cast<std::int64_t>(rng.below(120000))
                             : 1 + static_cast<std::int64_t>(rng.below(4096));
    docs.push_back(DocSpec{"d" + std::to_string(i), len});
  }
  return docs;
}

void BM_PlanPacking(benchmark::State& state) {
  const auto docs = mix(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(plan_packing(docs, 131072, 4096));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PlanPacking)->Arg(1000)->Arg(10000);

void BM_DocumentMask(benchmark::State& state) {
  const auto plan = plan_packing(mix(2000), 131072, 4096);
  const Segment* shortest = nullptr;
  for (const Segment& s : plan.segments) {
    if (s.mode == SegmentMode::kShortOriginalRope) {
      shortest = &s;
      break;
    }
  }
  if (shortest == nullptr) {
    state.SkipWithError("no short segment");
    return;
  }
  for (auto _ : state) benchmark::DoNotOptimize(document_mask(*shortest));
}
BENCHMARK(BM_DocumentMask);

}  // namespace
