// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "abslab/numkit/tape.hpp"
#include "abslab/numkit/tensor.hpp"

namespace abslab::nk {

// [m x k] . [k x n] -> [m x n]
Var matmul(Var a, Var b);

// Elementwise, identical shapes.
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

// Bias-add: adds a length-n vector to every row of an [m x n] input. This is
// the only broadcasting op.
Var add_row(Var a, Var bias);

Var relu(Var a);

// Softmax over the last axis with max-subtraction.
Var softmax(Var a);

// Per-row normalisation followed by an elementwise gain and bias of length
// cols().
Var layernorm(Var x, Var gain, Var bias, double eps = 1e-5);

// [m x p] ++ [m x q] -> [m x (p + q)]
Var concat_last_axis(Var a, Var b);

// Rows of `table` selected by ids -> [ids.size() x table.cols()].
Var embedding_lookup(Var table, std::span<const int> ids);

// Mean of -log probs[t, targets[t]] over positions whose target != pad_id.
// Throws std::invalid_argument if every position is padding.
Var cross_entropy(Var probs, std::span<const int> targets, int pad_id);

// Multi-head scaled dot-product attention. q is [Tq x d], k and v are
// [Tk x d]; heads must divide d. With causal=true position i attends to
// positions j <= i only (requires Tq == Tk).
Var attention(Var q, Var k, Var v, int heads, bool causal);

// Inverted dropout. Identity when rate == 0.
Var dropout(Var x, double rate, std::mt19937_64& rng);

// Reference kernels shared by ops and benchmarks.
namespace kernel {
// c[m x n] += a[m x k] . b[k x n]
void gemm_acc(const double* a, const double* b, double* c, std::size_t m,
              std::size_t k, std::size_t n);
// c[m x n] += a[m x k] . b[n x k]^T
void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n);
// c[k x n] += a[m x k]^T . b[m x n]
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n);
}  // namespace kernel

}  // namespace abslab::nk
