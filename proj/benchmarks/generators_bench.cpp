// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "abslab/kinship.hpp"
#include "abslab/random.hpp"
#include "abslab/rules.hpp"

namespace {

using namespace abslab;

void BM_KinshipSample(benchmark::State& state) {
  const int level = static_cast<int>(state.range(0));
  std::mt19937_64 rng = MakeRng({7});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kinship::SampleExample(level, kinship::NamePool::Default(), rng));
  }
}
BENCHMARK(BM_KinshipSample)->Arg(2)->Arg(6)->Arg(10);

void BM_ForwardChain(benchmark::State& state) {
  std::mt19937_64 rng = MakeRng({8});
  std::vector<rules::Theory> theories;
  for (int i = 0; i < 32; ++i) {
    theories.push_back(
        rules::SampleTheory(static_cast<int>(state.range(0)), std::nullopt, rng));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rules::ForwardChain(theories[i++ % theories.size()]));
  }
}
BENCHMARK(BM_ForwardChain)->Arg(0)->Arg(3)->Arg(5);

void BM_RulesSample(benchmark::State& state) {
  std::mt19937_64 rng = MakeRng({9});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rules::SampleTheory(static_cast<int>(state.range(0)), std::nullopt, rng));
  }
}
BENCHMARK(BM_RulesSample)->Arg(0)->Arg(3)->Arg(5);

}  // namespace

BENCHMARK_MAIN();
