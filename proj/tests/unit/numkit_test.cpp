// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "abslab/checks/gradcheck.hpp"
#include "abslab/checks/suites.hpp"
#include "abslab/numkit/ops.hpp"
#include "abslab/numkit/tape.hpp"
#include "abslab/numkit/tensor.hpp"

namespace abslab::nk {
namespace {

Tensor Random(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> normal;
  for (double& v : t.data()) v = normal(rng);
  return t;
}

std::vector<double> Values(Var v) {
  const auto d = v.value().data();
  return {d.begin(), d.end()};
}

TEST(MatmulTest, IdentityLeavesOperandUnchanged) {
  Tape tape(false);
  Var i = tape.constant(Tensor::Matrix(2, 2, {1, 0, 0, 1}));
  Var b = tape.constant(Tensor::Matrix(2, 2, {1, 2, 3, 4}));
  EXPECT_EQ(Values(matmul(i, b)), (std::vector<double>{1, 2, 3, 4}));
}

TEST(MatmulTest, HandComputed) {
  Tape tape(false);
  Var a = tape.constant(Tensor::Matrix(2, 2, {1, 0, 0, 0}));
  Var b = tape.constant(Tensor::Matrix(2, 2, {0, 1, 1, 0}));
  EXPECT_EQ(Values(matmul(a, b)), (std::vector<double>{0, 1, 0, 0}));
}

TEST(MatmulTest, MatchesTripleLoop) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor a = Random({3, 4}, rng), b = Random({4, 2}, rng);
    Tape tape(false);
    const std::vector<double> got =
        Values(matmul(tape.constant(a), tape.constant(b)));
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        double want = 0.0;
        for (std::size_t k = 0; k < 4; ++k) want += a.at(i, k) * b.at(k, j);
        EXPECT_NEAR(got[i * 2 + j], want, 1e-12);
      }
    }
  }
}

TEST(MatmulTest, ShapeMismatchThrows) {
  Tape tape(false);
  Var a = tape.constant(Tensor({2, 3}));
  Var b = tape.constant(Tensor({2, 3}));
  EXPECT_THROW(matmul(a, b), DimensionError);
}

TEST(GemmKernelTest, TransposedVariantsAgreeWithPlain) {
  std::mt19937_64 rng(2);
  const std::size_t m = 5, k = 7, n = 3;
  const Tensor a = Random({m, k}, rng), b = Random({k, n}, rng);
  Tensor bt({n, k}), at({k, m});
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < n; ++j) bt.at(j, i) = b.at(i, j);
    for (std::size_t j = 0; j < m; ++j) at.at(i, j) = a.at(j, i);
  }
  std::vector<double> plain(m * n), nt(m * n), tn(m * n);
  kernel::gemm_acc(a.raw(), b.raw(), plain.data(), m, k, n);
  kernel::gemm_nt_acc(a.raw(), bt.raw(), nt.data(), m, k, n);
  kernel::gemm_tn_acc(at.raw(), b.raw(), tn.data(), k, m, n);
  for (std::size_t i = 0; i < m * n; ++i) {
    EXPECT_NEAR(nt[i], plain[i], 1e-12);
    EXPECT_NEAR(tn[i], plain[i], 1e-12);
  }
}

TEST(SoftmaxTest, UniformOnEqualLogits) {
  Tape tape(false);
  for (double p : Values(softmax(tape.constant(Tensor({1, 3}, 0.0))))) {
    EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  }
}

TEST(SoftmaxTest, ShiftInvariantAndRowsSumToOne) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = Random({4, 6}, rng);
    Tensor shifted = x;
    for (double& v : shifted.data()) v += 17.5;
    Tape tape(false);
    const auto a = Values(softmax(tape.constant(x)));
    const auto b = Values(softmax(tape.constant(shifted)));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
    for (std::size_t r = 0; r < 4; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < 6; ++c) sum += a[r * 6 + c];
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(CrossEntropyTest, OneHotCorrectIsZero) {
  Tape tape(false);
  Var p = tape.constant(Tensor::Matrix(2, 3, {0, 1, 0, 0, 0, 1}));
  const std::vector<int> targets{1, 2};
  EXPECT_DOUBLE_EQ(cross_entropy(p, targets, -1).value()[0], 0.0);
}

TEST(CrossEntropyTest, UniformIsLogV) {
  Tape tape(false);
  Var p = tape.constant(Tensor({3, 4}, 0.25));
  const std::vector<int> targets{0, 3, 2};
  EXPECT_NEAR(cross_entropy(p, targets, -1).value()[0], std::log(4.0), 1e-15);
}

TEST(CrossEntropyTest, MatchesDirectSummationIgnoringPad) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape(false);
    Var probs = softmax(tape.constant(Random({5, 7}, rng)));
    std::vector<int> targets(5);
    for (int& t : targets) t = static_cast<int>(rng() % 7);
    const int pad = 0;
    double sum = 0.0;
    int count = 0;
    for (std::size_t r = 0; r < 5; ++r) {
      if (targets[r] == pad) continue;
      sum -= std::log(probs.value().at(r, targets[r]));
      ++count;
    }
    if (count == 0) continue;
    EXPECT_NEAR(cross_entropy(probs, targets, pad).value()[0], sum / count,
                1e-12);
  }
}

TEST(CrossEntropyTest, AllPaddingThrows) {
  Tape tape(false);
  Var p = tape.constant(Tensor({2, 3}, 1.0 / 3));
  const std::vector<int> targets{0, 0};
  EXPECT_ANY_THROW(cross_entropy(p, targets, 0));
}

TEST(LayerNormTest, RowsHaveZeroMeanUnitVariance) {
  std::mt19937_64 rng(5);
  Tape tape(false);
  Var x = tape.constant(Random({6, 9}, rng));
  Var y = layernorm(x, tape.constant(Tensor({9}, 1.0)),
                    tape.constant(Tensor({9}, 0.0)), 0.0);
  for (std::size_t r = 0; r < 6; ++r) {
    double mean = 0.0, var = 0.0;
    for (double v : y.value().row(r)) mean += v / 9;
    for (double v : y.value().row(r)) var += (v - mean) * (v - mean) / 9;
    EXPECT_LE(std::abs(mean), 1e-10);
    EXPECT_NEAR(var, 1.0, 1e-8);
  }
}

TEST(TapeTest, SharedInputAccumulatesGradients) {
  // y = sum(x * x + 3x) has dy/dx = 2x + 3 through two branches.
  Tensor x = Tensor::Matrix(1, 3, {1.0, -2.0, 0.5});
  std::vector<double> grad(3, 0.0);
  Tape tape;
  Var v = tape.param(x, &grad);
  Var branch = add(mul(v, v), scale(v, 3.0));
  Var ones = tape.constant(Tensor({3, 1}, 1.0));
  tape.backward(matmul(branch, ones));
  EXPECT_DOUBLE_EQ(grad[0], 5.0);
  EXPECT_DOUBLE_EQ(grad[1], -1.0);
  EXPECT_DOUBLE_EQ(grad[2], 4.0);
}

TEST(TapeTest, BackwardNeedsScalar) {
  Tensor x({2, 2}, 1.0);
  Tape tape;
  Var v = tape.param(x);
  EXPECT_ANY_THROW(tape.backward(v));
}

TEST(TapeTest, NonFiniteValuesAreReported) {
  Tape tape(false);
  Var p = tape.constant(Tensor::Matrix(1, 2, {0.0, 1.0}));
  const std::vector<int> targets{0};
  EXPECT_THROW(cross_entropy(p, targets, -1), NonFiniteError);
  Var big = tape.constant(Tensor::Matrix(1, 1, {1e300}));
  EXPECT_THROW(mul(big, big), NonFiniteError);
}

TEST(DropoutTest, ZeroesAndRescales) {
  std::mt19937_64 rng(6);
  Tape tape(false);
  Var y = dropout(tape.constant(Tensor({1, 2000}, 1.0)), 0.25, rng);
  int kept = 0;
  for (double v : Values(y)) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-12);
    kept += v != 0.0;
  }
  EXPECT_NEAR(kept / 2000.0, 0.75, 0.05);
}

TEST(AttentionTest, CausalOutputIgnoresLaterPositions) {
  std::mt19937_64 rng(7);
  Tensor q = Random({4, 4}, rng), k = Random({4, 4}, rng),
         v = Random({4, 4}, rng);
  Tape t1(false);
  const auto a = Values(attention(t1.constant(q), t1.constant(k),
                                  t1.constant(v), 2, true));
  for (std::size_t c = 0; c < 4; ++c) {
    k.at(3, c) += 5.0;
    v.at(3, c) -= 3.0;
  }
  Tape t2(false);
  const auto b = Values(attention(t2.constant(q), t2.constant(k),
                                  t2.constant(v), 2, true));
  for (std::size_t i = 0; i < 12; ++i) EXPECT_DOUBLE_EQ(a[i], b[i]);
  EXPECT_NE(a[12], b[12]);
}

TEST(GradientTest, RandomizedOpsMatchFiniteDifferences) {
  checks::GradientOptions options;
  options.op_cases = 140;
  const checks::CheckResult r = checks::GradientSuite(options);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(GradCheckTest, RelativeErrorUsesFloor) {
  EXPECT_DOUBLE_EQ(checks::RelativeError(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(checks::RelativeError(0.0, 1e-9), 1e-3);
}

}  // namespace
}  // namespace abslab::nk
