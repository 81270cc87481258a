// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "abslab/harness.hpp"
#include "abslab/kinship.hpp"
#include "abslab/rules.hpp"

namespace abslab::harness {
namespace {

using kinship::ExtractTriple;
using kinship::ScoreKinship;

model::ModelDims SmallDims(const Vocabulary& vocab) {
  model::ModelDims d;
  d.e = d.d = 16;
  d.heads = 2;
  d.kv = 8;
  d.layers = 1;
  d.ff = 32;
  d.v = static_cast<int>(vocab.size());
  d.max_len = 160;
  return d;
}

struct Fixture {
  kinship::Splits splits;
  Vocabulary vocab;
};

Fixture SmallKinship(model::Strategy s = model::Strategy::kBaseline) {
  kinship::SplitConfig c;
  c.train_levels = {2};
  c.test_levels = {2, 3};
  c.train_per_level = 56;
  c.test_per_level = 6;
  c.seed = 31;
  kinship::Splits splits = kinship::BuildSplits(c);
  std::vector<const Record*> all;
  for (const Record& r : splits.train) all.push_back(&r);
  for (const Record& r : splits.valid) all.push_back(&r);
  for (const auto& [level, rs] : splits.test) {
    for (const Record& r : rs) all.push_back(&r);
  }
  Vocabulary vocab = BuildVocabulary(all, SchemaFor(Task::kKinship, 20), s);
  return {std::move(splits), std::move(vocab)};
}

model::Model MakeModel(const Vocabulary& vocab, model::Strategy s) {
  model::Model m(SmallDims(vocab), s, 5, vocab.grounded_id());
  m.set_special_ids(vocab.pad_id(), vocab.bos_id(), vocab.eos_id());
  return m;
}

TEST(TrainTest, SmokeRunLogsEveryEpochAndCheckpoints) {
  Fixture f = SmallKinship(model::Strategy::kDecLoss);
  ASSERT_EQ(f.splits.train.size(), 50u);
  ExampleSet train(f.splits.train, f.vocab), valid(f.splits.valid, f.vocab);
  model::Model m = MakeModel(f.vocab, model::Strategy::kDecLoss);
  TrainConfig c;
  c.max_epochs = 2;
  c.seed = 3;
  int callbacks = 0;
  const TrainResult r =
      Train(m, train, valid, c, [&](const EpochLog&) { ++callbacks; });
  ASSERT_EQ(r.log.size(), 2u);
  EXPECT_EQ(callbacks, 2);
  for (const EpochLog& e : r.log) {
    EXPECT_TRUE(std::isfinite(e.train_loss));
    ASSERT_TRUE(e.abs_loss && e.lm_loss);
    EXPECT_NEAR(e.train_loss, 0.5 * *e.abs_loss + 0.5 * *e.lm_loss, 1e-9);
  }
  EXPECT_LT(r.log[1].train_loss, r.log[0].train_loss);
  EXPECT_DOUBLE_EQ(MeanLoss(m, valid, c.seed), r.best_valid_loss);

  const auto dir = std::filesystem::temp_directory_path() / "abslab_train_test";
  std::filesystem::create_directories(dir);
  WriteTrainLog(dir / "log.csv", r.log);
  model::SaveCheckpoint(dir / "m.ckpt", m, f.vocab.hash());
  EXPECT_GT(std::filesystem::file_size(dir / "m.ckpt"), m.param_count() * 8);
  std::ifstream in(dir / "log.csv");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 3);
  std::filesystem::remove_all(dir);
}

TEST(TrainTest, PatienceStopsOnFlatValidation) {
  Fixture f = SmallKinship();
  ExampleSet train(f.splits.train, f.vocab), valid(f.splits.valid, f.vocab);
  model::Model m = MakeModel(f.vocab, model::Strategy::kBaseline);
  TrainConfig c;
  c.learning_rate = 1e-300;
  c.patience = 1;
  c.max_epochs = 10;
  const TrainResult r = Train(m, train, valid, c);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_EQ(r.log.size(), 2u);
  EXPECT_EQ(r.best_epoch, 1);
}

TEST(TrainTest, RejectsBadConfig) {
  TrainConfig c;
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.patience = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ClipTest, ScalesToMaxNorm) {
  model::Gradients g;
  g.g = {{3.0}, {4.0}};
  EXPECT_DOUBLE_EQ(ClipGradients(g, 1.0), 5.0);
  EXPECT_NEAR(std::sqrt(g.squared_norm()), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(ClipGradients(g, 2.0), std::sqrt(g.squared_norm()));
}

TEST(ExtractTest, AnswerTemplates) {
  EXPECT_EQ(ExtractTriple("answer : Anne has a brother named Gary ."),
            (Triple{"Anne", Relation::kBrother, "Gary"}));
  EXPECT_EQ(ExtractTriple("Patricia is the nephew of Timothy ."),
            (Triple{"Timothy", Relation::kNephew, "Patricia"}));
  EXPECT_EQ(ExtractTriple("answer : Anne has a brother named Gary . extra"),
            (Triple{"Anne", Relation::kBrother, "Gary"}));
  EXPECT_FALSE(ExtractTriple("answer : Anne has a nephew named Gary ."));
  EXPECT_FALSE(ExtractTriple("answer : Gary is the brother of Anne ."));
  EXPECT_FALSE(ExtractTriple("answer : Anne has a cousin named Gary ."));
  EXPECT_FALSE(ExtractTriple(""));
  for (Relation r : RelationSchema::Default().all()) {
    const Triple t{"Ada", r, "Bo"};
    EXPECT_EQ(ExtractTriple(kinship::RenderAnswer(t)), t);
  }
}

TEST(ScoreKinshipTest, InversesRespectGender) {
  const Triple gold{"Anne", Relation::kBrother, "Gary"};
  EXPECT_TRUE(ScoreKinship(gold, gold, Gender::kFemale));
  EXPECT_TRUE(ScoreKinship({"Gary", Relation::kSister, "Anne"}, gold,
                           Gender::kFemale));
  EXPECT_FALSE(ScoreKinship({"Gary", Relation::kBrother, "Anne"}, gold,
                            Gender::kFemale));
  const Triple father{"Lee", Relation::kFather, "Sam"};
  EXPECT_TRUE(ScoreKinship({"Sam", Relation::kSon, "Lee"}, father,
                           std::nullopt));
  EXPECT_TRUE(ScoreKinship({"Sam", Relation::kDaughter, "Lee"}, father,
                           std::nullopt));
  EXPECT_FALSE(ScoreKinship({"Lee", Relation::kMother, "Sam"}, father,
                            std::nullopt));
  EXPECT_FALSE(ScoreKinship({"Sam", Relation::kFather, "Lee"}, father,
                            std::nullopt));
}

TEST(ScoreKinshipTest, GoldAndGenderedInverseAlwaysScore) {
  const RelationSchema& schema = RelationSchema::Default();
  for (Relation r : schema.all()) {
    const Triple gold{"A", r, "B"};
    for (Gender g : {Gender::kMale, Gender::kFemale}) {
      EXPECT_TRUE(ScoreKinship(gold, gold, g));
      const auto inv = schema.inverse(r, g);
      if (!inv) continue;  // spouse relations need the opposite gender
      EXPECT_TRUE(ScoreKinship({"B", *inv, "A"}, gold, g));
      EXPECT_TRUE(ScoreKinship({"B", *inv, "A"}, gold, std::nullopt));
      const Gender other = g == Gender::kMale ? Gender::kFemale : Gender::kMale;
      if (schema.inverse(r, other) != inv) {
        EXPECT_FALSE(ScoreKinship({"B", *inv, "A"}, gold, other));
      }
      for (Relation q : schema.all()) {
        if (q != r) EXPECT_FALSE(ScoreKinship({"A", q, "B"}, gold, g));
      }
    }
  }
}

TEST(ScoreRulesTest, FirstSentenceLabel) {
  EXPECT_TRUE(ScoreRules("answer : True .", "True"));
  EXPECT_FALSE(ScoreRules("answer : False .", "True"));
  EXPECT_FALSE(ScoreRules("True .", "True"));
  EXPECT_FALSE(ScoreRules("answer : .", "True"));
  EXPECT_EQ(ParseRulesAnswer("answer : Unknown . answer : True ."), "Unknown");
}

TEST(ScoreTest, OutcomeCategories) {
  Record k;
  k.task = Task::kKinship;
  k.gold = Triple{"Anne", Relation::kBrother, "Gary"};
  k.e1_gender = Gender::kFemale;
  EXPECT_EQ(Score(k, "answer : Gary is the"), Outcome::kExtractionFailed);
  EXPECT_EQ(Score(k, "answer : Anne has a sister named Gary ."),
            Outcome::kWrongTriple);
  EXPECT_EQ(Score(k, "answer : Gary has a sister named Anne ."),
            Outcome::kCorrect);
  Record r;
  r.task = Task::kRules;
  r.label = "False";
  EXPECT_EQ(Score(r, "answer : False ."), Outcome::kCorrect);
  EXPECT_EQ(Score(r, "answer : True ."), Outcome::kWrongLabel);
  EXPECT_EQ(Score(r, "maybe"), Outcome::kExtractionFailed);
}

TEST(EvaluateTest, DeterministicAndCountsMatchSplits) {
  Fixture f = SmallKinship(model::Strategy::kEncSum);
  const model::Model m = MakeModel(f.vocab, model::Strategy::kEncSum);
  EvalOptions o;
  o.decode.max_new = 6;
  o.seed = 2;
  const EvalReport a = Evaluate(m, f.vocab, Task::kKinship, f.splits.test, o);
  const EvalReport b = Evaluate(m, f.vocab, Task::kKinship, f.splits.test, o);
  EXPECT_EQ(a.to_json(), b.to_json());
  ASSERT_EQ(a.buckets.size(), f.splits.test.size());
  std::size_t total = 0;
  for (const BucketStats& s : a.buckets) {
    EXPECT_EQ(s.count, f.splits.test.at(s.bucket).size());
    std::size_t failed = 0;
    for (const auto& [k, n] : s.failures) failed += n;
    EXPECT_EQ(s.correct + failed, s.count);
    total += s.count;
  }
  EXPECT_EQ(a.total, total);
  EXPECT_EQ(a.generations.size(), total);
  EXPECT_EQ(a.strategy, "enc-sum");

  o.decode.mode = model::DecodeMode::kTopP;
  const EvalReport c = Evaluate(m, f.vocab, Task::kKinship, f.splits.test, o);
  const EvalReport d = Evaluate(m, f.vocab, Task::kKinship, f.splits.test, o);
  EXPECT_EQ(c.generations, d.generations);
}

TEST(EvalReportTest, JsonRoundTripAndTables) {
  EvalReport r;
  r.task = Task::kRules;
  r.strategy = "emb-sum";
  r.buckets = {{0, 4, 3, {{"wrong-label", 1}}}, {1, 6, 3, {{"wrong-label", 3}}}};
  r.total = 10;
  r.correct = 6;
  r.generations = {"answer : True ."};
  const EvalReport back = EvalReport::FromJson(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_DOUBLE_EQ(back.aggregate(), 0.6);
  EXPECT_DOUBLE_EQ(back.buckets[0].accuracy(), 0.75);

  EvalReport base = r;
  base.strategy = "baseline";
  base.correct = 10;
  const std::vector<EvalReport> rows{base, r};
  std::istringstream table(ComparisonTable(rows));
  std::string header, row1, row2;
  std::getline(table, header);
  std::getline(table, row1);
  std::getline(table, row2);
  EXPECT_EQ(header.rfind("depth", 0), 0u);
  EXPECT_NE(header.find("avg"), std::string::npos);
  EXPECT_EQ(row1.rfind("baseline", 0), 0u);
  EXPECT_EQ(row2.rfind("emb-sum", 0), 0u);
  EXPECT_NE(row2.find("75.0"), std::string::npos);
  EXPECT_NE(row2.find("60.0"), std::string::npos);
  EXPECT_EQ(ComparisonTable({}), "");
}

TEST(VocabularyTest, CoversEveryToken) {
  rules::SplitConfig c;
  c.train_per_depth = 20;
  c.test_per_depth = 5;
  c.seed = 4;
  const rules::Splits s = rules::BuildSplits(c);
  std::vector<const Record*> all;
  for (const Record& r : s.train) all.push_back(&r);
  for (const Record& r : s.valid) all.push_back(&r);
  for (const auto& [d, rs] : s.test) {
    for (const Record& r : rs) all.push_back(&r);
  }
  const Vocabulary v =
      BuildVocabulary(all, SchemaFor(Task::kRules, 10), model::Strategy::kEmbCat);
  EXPECT_TRUE(v.grounded_id().has_value());
  for (const Record* r : all) {
    for (int id : v.encode(r->input)) EXPECT_NE(id, v.unk_id());
    ExampleSet set(std::span<const Record>(r, 1), v);
    EXPECT_EQ(set.size(), 1u);
  }
}

}  // namespace
}  // namespace abslab::harness
