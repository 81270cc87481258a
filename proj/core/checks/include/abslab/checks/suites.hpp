// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Self-contained property suites shared by the unit tests, the acceptance
// binary and `abslab check`.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace abslab::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct GradientOptions {
  int op_cases = 120;
  double op_tolerance = 1e-5;
  double op_step = 1e-6;
  double model_tolerance = 1e-4;
  std::uint64_t seed = 0;
};

// Finite-difference agreement for numkit ops and for every strategy of the
// micro model.
CheckResult GradientSuite(const GradientOptions& options = {});

// Exact parameter-count differences over baseline.
CheckResult ParamAuditSuite();

// emb-sum with an empty mask equals baseline; both dec-loss heads agree at
// initialization.
CheckResult DegeneracySuite(std::uint64_t seed = 0);

// ForwardChain against NaiveClosure on random theories.
CheckResult ProverOracleSuite(int theories = 500, std::uint64_t seed = 0);

// Chain gold relations and rendered edges against GenealogyRelations, plus
// answer-template inversion.
CheckResult KinshipOracleSuite(int examples = 1000, std::uint64_t seed = 0);

// ScoreKinship against InverseOracle over the whole relation schema.
CheckResult ScoringSuite();

// Level/depth layout and measured triple overlap of default splits.
CheckResult SplitFidelitySuite(std::uint64_t seed = 0);

// JSONL records, vocabulary files and checkpoints survive a write/read
// cycle unchanged.
CheckResult RoundTripSuite(std::uint64_t seed = 0);

std::vector<CheckResult> RunAllSuites(std::uint64_t seed = 0);

}  // namespace abslab::checks
