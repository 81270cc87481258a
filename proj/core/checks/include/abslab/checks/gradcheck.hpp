// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference gradient checks.

#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "abslab/abstraction.hpp"
#include "abslab/model.hpp"
#include "abslab/numkit/tape.hpp"
#include "abslab/numkit/tensor.hpp"

namespace abslab::checks {

// |analytic - numeric| / max(|analytic|, |numeric|, floor)
double RelativeError(double analytic, double numeric, double floor = 1e-6);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<input>[<index>]"
  std::size_t checked = 0;
};

// Builds a scalar from leaves bound to `inputs` (one Var per input, same
// order). Must be deterministic.
using LossBuilder =
    std::function<nk::Var(nk::Tape&, std::span<const nk::Var> inputs)>;

GradCheckResult CheckGradients(std::vector<nk::Tensor>& inputs,
                               const LossBuilder& build, double h = 1e-5);

// Every parameter of `model` against the total loss on `ex` (no dropout).
GradCheckResult CheckModelGradients(model::Model& model,
                                    const AbstractedExample& ex,
                                    double h = 1e-5);

// Micro configuration: 1 layer, d = 8, v = 16, 2 heads, ff 16, max_len 8.
model::ModelDims MicroDims();

// Random example for the micro model: |X| = 6 with a tagged entity block
// (ids 12..15 are treated as the tag block of a 16-token vocabulary).
struct MicroSetup {
  Vocabulary vocab;
  AbstractedExample example;
};
MicroSetup MakeMicroSetup(std::mt19937_64& rng);

// Reduces an [m x n] Var to a scalar as sum(x * weights) with fixed random
// weights; used to test non-scalar ops.
nk::Var WeightedSum(nk::Var x, std::mt19937_64& rng);

}  // namespace abslab::checks
