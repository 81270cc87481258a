// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "abslab/numkit/ops.hpp"
#include "abslab/numkit/tape.hpp"

namespace {

using namespace abslab::nk;

std::vector<double> Random(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = Random(n * n, rng), b = Random(n * n, rng);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    kernel::gemm_acc(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Gemm)->Arg(16)->Arg(64)->Arg(256);

void BM_GemmNT(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto a = Random(n * n, rng), b = Random(n * n, rng);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    kernel::gemm_nt_acc(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_GemmNT)->Arg(64)->Arg(256);

// Forward and backward of multi-head attention over a length-L sequence.
void BM_Attention(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64;
  std::mt19937_64 rng(3);
  Tensor q({len, d}, Random(len * d, rng)), k({len, d}, Random(len * d, rng)),
      v({len, d}, Random(len * d, rng));
  for (auto _ : state) {
    Tape tape;
    Var out = attention(tape.param(q), tape.param(k), tape.param(v), 4,
                        state.range(1) != 0);
    Var loss = matmul(matmul(tape.constant(Tensor({1, len}, 1.0)), out),
                      tape.constant(Tensor({d, 1}, 1.0)));
    tape.backward(loss);
    q.zero_grad();
    k.zero_grad();
    v.zero_grad();
  }
}
BENCHMARK(BM_Attention)->Args({32, 0})->Args({128, 0})->Args({128, 1});

}  // namespace

BENCHMARK_MAIN();
