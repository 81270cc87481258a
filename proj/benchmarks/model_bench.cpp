// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <benchmark/benchmark.h>

#include "abslab/harness.hpp"
#include "abslab/kinship.hpp"
#include "abslab/model.hpp"
#include "abslab/random.hpp"

namespace {

using namespace abslab;

struct Setup {
  std::vector<Record> records;
  Vocabulary vocab;
};

Setup MakeSetup(model::Strategy s) {
  kinship::SplitConfig c;
  c.train_levels = {2};
  c.test_levels = {4};
  c.train_per_level = 20;
  c.test_per_level = 2;
  c.seed = 1;
  kinship::Splits splits = kinship::BuildSplits(c);
  std::vector<const Record*> all;
  for (const Record& r : splits.train) all.push_back(&r);
  for (const Record& r : splits.valid) all.push_back(&r);
  Vocabulary v = harness::BuildVocabulary(
      all, harness::SchemaFor(Task::kKinship, 20), s);
  return {std::move(splits.train), std::move(v)};
}

// One teacher-forced loss plus backward pass at the default toy dims.
void BM_TrainStep(benchmark::State& state) {
  const auto s = model::AllStrategies()[state.range(0)];
  const Setup setup = MakeSetup(s);
  model::ModelDims dims;
  dims.v = static_cast<int>(setup.vocab.size());
  model::Model m(dims, s, 1, setup.vocab.grounded_id());
  m.set_special_ids(setup.vocab.pad_id(), setup.vocab.bos_id(),
                    setup.vocab.eos_id());
  harness::ExampleSet set(setup.records, setup.vocab);
  std::mt19937_64 rng = MakeRng({1});
  const AbstractedExample ex = set.materialize(0, rng);
  model::Gradients grads = m.make_gradients();
  for (auto _ : state) {
    nk::Tape tape;
    std::mt19937_64 drop = MakeRng({2});
    model::Pass pass(m, tape, &grads, {true, 0.1, &drop});
    tape.backward(pass.loss(ex).total);
  }
  state.SetLabel(std::string(model::StrategyName(s)));
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

void BM_GreedyGenerate(benchmark::State& state) {
  const Setup setup = MakeSetup(model::Strategy::kBaseline);
  model::ModelDims dims;
  dims.v = static_cast<int>(setup.vocab.size());
  model::Model m(dims, model::Strategy::kBaseline, 1);
  m.set_special_ids(setup.vocab.pad_id(), setup.vocab.bos_id(),
                    setup.vocab.eos_id());
  harness::ExampleSet set(setup.records, setup.vocab);
  std::mt19937_64 rng = MakeRng({1});
  const AbstractedExample ex = set.materialize(0, rng);
  model::DecodeOptions opts;
  opts.max_new = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(m.generate(ex, opts));
}
BENCHMARK(BM_GreedyGenerate)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
