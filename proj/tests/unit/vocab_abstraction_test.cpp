// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "abslab/abstraction.hpp"
#include "abslab/kinship.hpp"
#include "abslab/random.hpp"
#include "abslab/rules.hpp"
#include "abslab/vocab.hpp"

namespace abslab {
namespace {

std::vector<std::string> Corpus(std::string_view text) { return Tokenize(text); }

TEST(VocabularyTest, KinshipSchemaHasTwentyPersonTags) {
  const Vocabulary v = Vocabulary::Build(Corpus("a b"), {{"PERSON"}, 20}, false);
  EXPECT_EQ(v.tag_end() - v.tag_begin(), 20);
  EXPECT_EQ(v.token(v.tag_id(0, 1)), "PERSON_1");
  EXPECT_EQ(v.token(v.tag_id(0, 20)), "PERSON_20");
}

TEST(VocabularyTest, RulesSchemaHasFortyTags) {
  const Vocabulary v = Vocabulary::Build(
      Corpus("x"), {{"PERSON", "ATTRIBUTE", "ANIMAL", "RELATION"}, 10}, false);
  EXPECT_EQ(v.tag_end() - v.tag_begin(), 40);
  EXPECT_EQ(v.token(v.tag_id(3, 10)), "RELATION_10");
}

TEST(VocabularyTest, EmptySchemaHasNoTags) {
  const Vocabulary v = Vocabulary::Build(Corpus("x y"), {{}, 5}, false);
  EXPECT_EQ(v.tag_begin(), v.tag_end());
  EXPECT_FALSE(v.grounded_id().has_value());
}

TEST(VocabularyTest, EncodeDecodeRoundTripAndUnknown) {
  const Vocabulary v =
      Vocabulary::Build(Corpus("answer : True False"), {{"PERSON"}, 2}, true);
  EXPECT_EQ(v.decode(v.encode("answer : True")), "answer : True");
  EXPECT_EQ(v.encode("zebra")[0], v.unk_id());
  ASSERT_TRUE(v.grounded_id().has_value());
  EXPECT_EQ(v.token(*v.grounded_id()), Vocabulary::kGrounded);
}

TEST(VocabularyTest, DeterministicAndRoundTripsOverGeneratedCorpus) {
  std::mt19937_64 rng = MakeRng({11});
  std::vector<std::string> corpus, sentences;
  for (int i = 0; i < 30; ++i) {
    const auto ex = kinship::SampleExample(2 + i % 5,
                                           kinship::NamePool::Default(), rng);
    const auto [input, target] = kinship::Render(ex);
    for (const std::string& s : {input, target}) {
      sentences.push_back(s);
      for (auto& t : Tokenize(s)) corpus.push_back(t);
    }
  }
  const TagSchema schema{{"PERSON"}, 20};
  const Vocabulary a = Vocabulary::Build(corpus, schema, false);
  std::vector<std::string> reversed(corpus.rbegin(), corpus.rend());
  const Vocabulary b = Vocabulary::Build(reversed, schema, false);
  EXPECT_EQ(a.hash(), b.hash());
  for (const std::string& s : sentences) EXPECT_EQ(a.decode(a.encode(s)), s);
}

TEST(VocabularyTest, SaveLoadPreservesIds) {
  const auto path = std::filesystem::temp_directory_path() / "abslab_vocab.txt";
  const Vocabulary v =
      Vocabulary::Build(Corpus("c b a"), {{"PERSON", "ANIMAL"}, 3}, true);
  v.save(path);
  const Vocabulary w = Vocabulary::Load(path);
  EXPECT_EQ(w.hash(), v.hash());
  EXPECT_EQ(w.tag_begin(), v.tag_begin());
  EXPECT_EQ(w.grounded_id(), v.grounded_id());
  EXPECT_EQ(w.schema().n, 3);
  std::filesystem::remove(path);
}

TEST(SchemaTest, RejectsDuplicatesAndBadN) {
  EXPECT_THROW((TagSchema{{"PERSON", "PERSON"}, 2}.validate()),
               std::invalid_argument);
  EXPECT_THROW((TagSchema{{"PERSON"}, 0}.validate()), std::invalid_argument);
}

// ------------------------------------------------------------ Abstraction

struct Fixture {
  Vocabulary vocab;
  std::vector<std::string> tokens;
  AbstractedExample ex;
};

Fixture Make(std::string_view text, int n = 30) {
  Fixture f;
  f.tokens = Tokenize(text);
  f.vocab = Vocabulary::Build(f.tokens, {{"PERSON", "ANIMAL"}, n}, false);
  f.ex.x = f.vocab.encode(std::span<const std::string>(f.tokens));
  return f;
}

TEST(AbstractTest, SameEntitySharesTagAcrossMentions) {
  // "Bob Smith" and the later "Bob" are one entity by the tagger's spans.
  Fixture f = Make("Bob Smith has a cat that he loves . Bob also loves Alexandra .");
  const std::vector<EntitySpan> spans{{0, 2, "PERSON", "Bob"},
                                      {9, 10, "PERSON", "Bob"},
                                      {12, 13, "PERSON", "Alexandra"}};
  std::mt19937_64 rng = MakeRng({1});
  Abstract(f.ex, spans, f.vocab, rng);
  const auto& xs = f.ex.x_s;
  EXPECT_EQ(xs[0], xs[1]);
  EXPECT_EQ(xs[0], xs[9]);
  EXPECT_NE(xs[9], xs[12]);
  EXPECT_TRUE(f.vocab.is_tag(xs[0]) && f.vocab.is_tag(xs[12]));
  for (int i : {2, 3, 4, 5, 6, 7, 8, 10, 11, 13}) EXPECT_EQ(xs[i], f.ex.x[i]);
  const std::string out = f.vocab.decode(xs);
  EXPECT_TRUE(out.starts_with("PERSON_")) << out;
}

TEST(AbstractTest, NoSpansLeavesInputUntouched) {
  Fixture f = Make("a b c");
  std::mt19937_64 rng = MakeRng({2});
  Abstract(f.ex, {}, f.vocab, rng);
  EXPECT_EQ(f.ex.x_s, f.ex.x);
  EXPECT_EQ(f.ex.mask, (std::vector<std::uint8_t>{0, 0, 0}));
}

TEST(AbstractTest, CapacityErrorUnlessCollapsing) {
  Fixture f = Make("Ann met Ben", 1);
  const std::vector<EntitySpan> spans{{0, 1, "PERSON", "Ann"},
                                      {2, 3, "PERSON", "Ben"}};
  std::mt19937_64 rng = MakeRng({3});
  EXPECT_THROW(Abstract(f.ex, spans, f.vocab, rng), CapacityError);
  Abstract(f.ex, spans, f.vocab, rng, {.collapse_ids = true});
  EXPECT_EQ(f.ex.x_s[0], f.ex.x_s[2]);
}

TEST(AbstractTest, RejectsBadSpans) {
  Fixture f = Make("a b c");
  std::mt19937_64 rng = MakeRng({4});
  const std::vector<EntitySpan> outside{{2, 4, "PERSON", "c"}};
  const std::vector<EntitySpan> overlap{{0, 2, "PERSON", "a"},
                                        {1, 3, "PERSON", "b"}};
  const std::vector<EntitySpan> unknown{{0, 1, "PLACE", "a"}};
  EXPECT_THROW(Abstract(f.ex, outside, f.vocab, rng), std::invalid_argument);
  EXPECT_THROW(Abstract(f.ex, overlap, f.vocab, rng), std::invalid_argument);
  EXPECT_THROW(Abstract(f.ex, unknown, f.vocab, rng), std::invalid_argument);
}

// Partition of positions into groups sharing a tag id.
std::set<std::set<int>> Groups(const std::vector<int>& xs,
                               const Vocabulary& vocab) {
  std::map<int, std::set<int>> by_tag;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (vocab.is_tag(xs[i])) by_tag[xs[i]].insert(static_cast<int>(i));
  }
  std::set<std::set<int>> out;
  for (auto& [tag, group] : by_tag) out.insert(group);
  return out;
}

TEST(AbstractPropertyTest, DeterministicConsistentAndSeedInvariantPartition) {
  std::mt19937_64 gen = MakeRng({5});
  for (int trial = 0; trial < 50; ++trial) {
    const auto example = kinship::SampleExample(
        2 + trial % 9, kinship::NamePool::Default(), gen);
    const std::string input = kinship::RenderInput(example);
    const std::vector<std::string> tokens = Tokenize(input);
    const std::vector<EntitySpan> spans = TagKinship(tokens);
    const Vocabulary vocab = Vocabulary::Build(tokens, {{"PERSON"}, 20}, false);
    AbstractedExample base;
    base.x = vocab.encode(std::span<const std::string>(tokens));

    AbstractedExample a = base, b = base, c = base;
    std::mt19937_64 r1 = MakeRng({9, 1}), r2 = MakeRng({9, 1}),
                    r3 = MakeRng({10, 1});
    Abstract(a, spans, vocab, r1);
    Abstract(b, spans, vocab, r2);
    Abstract(c, spans, vocab, r3);
    EXPECT_EQ(a.x_s, b.x_s);
    EXPECT_EQ(Groups(a.x_s, vocab), Groups(c.x_s, vocab));
    for (const EntitySpan& s : spans) {
      for (const EntitySpan& t : spans) {
        if (s.surface == t.surface) EXPECT_EQ(a.x_s[s.start], a.x_s[t.start]);
      }
    }
    for (std::size_t i = 0; i < a.x.size(); ++i) {
      EXPECT_EQ(a.mask[i], a.x[i] != a.x_s[i] ? 1 : 0);
    }
  }
}

TEST(TaggerTest, KinshipNames) {
  const auto tokens = Tokenize("Brett is Anne 's father .");
  const std::vector<EntitySpan> want{{0, 1, "PERSON", "Brett"},
                                     {2, 3, "PERSON", "Anne"}};
  EXPECT_EQ(TagKinship(tokens), want);
}

TEST(TaggerTest, RulesAnimalsAndRelations) {
  const auto tokens = Tokenize("The cow needs the lion .");
  const std::vector<EntitySpan> want{{1, 2, "ANIMAL", "cow"},
                                     {2, 3, "RELATION", "needs"},
                                     {4, 5, "ANIMAL", "lion"}};
  EXPECT_EQ(TagRules(tokens), want);
}

TEST(TaggerTest, RulesPeopleAndAttributes) {
  const auto tokens = Tokenize("Anne is nice .");
  const std::vector<EntitySpan> want{{0, 1, "PERSON", "Anne"},
                                     {2, 3, "ATTRIBUTE", "nice"}};
  EXPECT_EQ(TagRules(tokens), want);
}

TEST(TagFileTest, ParsesRecordsAndRejectsMalformed) {
  const auto tokens = Tokenize("Bob Smith met Ann .");
  const auto spans = ParseTagLine("0:2:PERSON\t3:4:PERSON", tokens);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].surface, "Bob Smith");
  EXPECT_TRUE(ParseTagLine("", tokens).empty());
  EXPECT_THROW(ParseTagLine("0:2", tokens), TagFileError);
  EXPECT_THROW(ParseTagLine("0:9:PERSON", tokens), TagFileError);
  EXPECT_THROW(ParseTagLine("x:1:PERSON", tokens), TagFileError);
}

TEST(TagFileTest, ReadsLinesAndReportsMissingFile) {
  const auto path = std::filesystem::temp_directory_path() / "abslab_tags.tsv";
  {
    std::ofstream out(path);
    out << "0:1:PERSON\n\n2:3:ANIMAL\n";
  }
  EXPECT_EQ(ReadTagFile(path).size(), 3u);
  std::filesystem::remove(path);
  EXPECT_THROW(ReadTagFile(path), TagFileError);
}

}  // namespace
}  // namespace abslab
