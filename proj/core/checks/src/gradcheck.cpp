// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/checks/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "abslab/numkit/ops.hpp"

namespace abslab::checks {

namespace {

void Track(GradCheckResult& r, double analytic, double numeric,
           const std::string& label) {
  const double err = RelativeError(analytic, numeric);
  ++r.checked;
  if (err > r.max_rel_error || r.worst.empty()) {
    r.max_rel_error = err;
    r.worst = label;
  }
}

double ModelLoss(const model::Model& m, const AbstractedExample& ex) {
  nk::Tape tape(/*record_grads=*/false);
  model::Pass pass(m, tape, nullptr);
  return pass.loss(ex).total.value()[0];
}

}  // namespace

double RelativeError(double analytic, double numeric, double floor) {
  const double scale =
      std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult CheckGradients(std::vector<nk::Tensor>& inputs,
                               const LossBuilder& build, double h) {
  std::vector<std::vector<double>> sinks;
  for (const nk::Tensor& t : inputs) sinks.emplace_back(t.size(), 0.0);
  {
    nk::Tape tape;
    std::vector<nk::Var> vars;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      vars.push_back(tape.param(inputs[i], &sinks[i]));
    }
    tape.backward(build(tape, vars));
  }
  auto eval = [&] {
    nk::Tape tape(/*record_grads=*/false);
    std::vector<nk::Var> vars;
    for (const nk::Tensor& t : inputs) vars.push_back(tape.param(t, nullptr));
    return build(tape, vars).value()[0];
  };
  GradCheckResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double saved = inputs[i][j];
      inputs[i][j] = saved + h;
      const double up = eval();
      inputs[i][j] = saved - h;
      const double down = eval();
      inputs[i][j] = saved;
      Track(result, sinks[i][j], (up - down) / (2 * h),
            "input" + std::to_string(i) + "[" + std::to_string(j) + "]");
    }
  }
  return result;
}

GradCheckResult CheckModelGradients(model::Model& m,
                                    const AbstractedExample& ex, double h) {
  model::Gradients grads = m.make_gradients();
  {
    nk::Tape tape;
    model::Pass pass(m, tape, &grads);
    tape.backward(pass.loss(ex).total);
  }
  GradCheckResult result;
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    nk::Tensor& p = m.params()[i].value;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double saved = p[j];
      p[j] = saved + h;
      const double up = ModelLoss(m, ex);
      p[j] = saved - h;
      const double down = ModelLoss(m, ex);
      p[j] = saved;
      Track(result, grads.g[i][j], (up - down) / (2 * h),
            m.params()[i].name + "[" + std::to_string(j) + "]");
    }
  }
  return result;
}

model::ModelDims MicroDims() {
  model::ModelDims d;
  d.e = d.d = 8;
  d.v = 16;
  d.heads = 2;
  d.kv = 4;
  d.layers = 1;
  d.ff = 16;
  d.max_len = 8;
  return d;
}

MicroSetup MakeMicroSetup(std::mt19937_64& rng) {
  TagSchema schema{{"PERSON"}, 4};
  const std::vector<std::string> corpus{"a", "b", "c", "d", "e", "f", "g"};
  MicroSetup s{Vocabulary::Build(corpus, schema, /*with_grounded=*/true), {}};
  std::uniform_int_distribution<int> word(0, 6);
  std::vector<std::string> tokens;
  for (int i = 0; i < 6; ++i) tokens.push_back(corpus[word(rng)]);
  // Two entities, one of them repeated.
  tokens[1] = tokens[4] = "b";
  tokens[3] = "e";
  const std::vector<EntitySpan> spans{{1, 2, "PERSON", "b"},
                                      {3, 4, "PERSON", "e"},
                                      {4, 5, "PERSON", "b"}};
  s.example.x = s.vocab.encode(std::span<const std::string>(tokens));
  for (int i = 0; i < 3; ++i) {
    s.example.y.push_back(s.vocab.id(corpus[word(rng)]));
  }
  Abstract(s.example, spans, s.vocab, rng);
  return s;
}

nk::Var WeightedSum(nk::Var x, std::mt19937_64& rng) {
  const nk::Tensor& v = x.value();
  const std::size_t m = v.rows(), n = v.cols();
  std::normal_distribution<double> normal(0.0, 1.0);
  nk::Tensor w(v.shape());
  for (double& e : w.data()) e = normal(rng);
  nk::Tape& tape = *x.tape;
  nk::Var prod = nk::mul(x, tape.constant(std::move(w)));
  nk::Var left = tape.constant(nk::Tensor({1, m}, 1.0));
  nk::Var right = tape.constant(nk::Tensor({n, 1}, 1.0));
  return nk::matmul(nk::matmul(left, prod), right);
}

}  // namespace abslab::checks
