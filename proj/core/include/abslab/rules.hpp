// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small rule-reasoning theories: positive facts, one-step rules with at most
// one universally quantified variable, and a possibly negated query answered
// under the open-world assumption.

#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "abslab/dataset.hpp"

namespace abslab::rules {

class RulesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kVariable = "?x";

enum class AtomKind { kAttribute, kRelation };

struct Atom {
  AtomKind kind = AtomKind::kAttribute;
  std::string subject;
  std::string predicate;
  std::string object;  // relations only
  bool negated = false;

  bool is_ground() const { return subject != kVariable && object != kVariable; }
  Atom positive() const;
  // Replace the variable by `entity`.
  Atom bind(std::string_view entity) const;

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;
};

// How a rule is worded; the logic is the same.
enum class RuleStyle { kIfThen, kAll, kAdjectives };

struct Rule {
  std::vector<Atom> body;  // 1 or 2 positive atoms
  Atom head;
  RuleStyle style = RuleStyle::kIfThen;

  bool has_variable() const;
};

// Throws std::invalid_argument when a rule is malformed (empty or negated
// body, head variable missing from the body, relation without object, ...).
void ValidateRule(const Rule& rule);

enum class TheoryKind { kPeople, kAnimals };
enum class Label { kTrue, kFalse, kUnknown };

std::string_view LabelName(Label label);
std::optional<Label> ParseLabel(std::string_view name);

struct Theory {
  TheoryKind kind = TheoryKind::kPeople;
  std::vector<Atom> facts;
  std::vector<Rule> rules;
  Atom query;
  Label label = Label::kUnknown;
  std::optional<int> depth;  // absent for Unknown
};

// Constants mentioned anywhere in facts and rules, sorted.
std::vector<std::string> Entities(const Theory& theory);

struct Derivation {
  int depth = 0;
  int rule = -1;  // -1 for facts
  std::string binding;
  std::vector<Atom> premises;
};

using Closure = std::map<Atom, Derivation>;

// Least fixed point of the rules over the facts. Variables range over
// Entities(theory). Rules fire in rounds, so every atom keeps the depth and
// premises of its shallowest derivation.
Closure ForwardChain(const Theory& theory);

struct QueryLabel {
  Label label = Label::kUnknown;
  std::optional<int> depth;
};

QueryLabel LabelQuery(const Closure& closure, const Atom& query);

struct Grammar {
  std::vector<std::string> people;
  std::vector<std::string> animals;
  std::vector<std::string> attributes;
  std::vector<std::string> relations;  // third person singular
  std::map<std::string, std::string, std::less<>> relation_base;

  static const Grammar& Default();
  // PERSON, ANIMAL, ATTRIBUTE, RELATION or empty.
  std::string_view type_of(std::string_view token) const;
};

inline constexpr int kMaxDepth = 5;

struct SampleOptions {
  int min_entities = 3;
  int max_entities = 4;
  int min_facts = 4;
  int max_facts = 8;
  int min_distractor_rules = 2;
  int max_distractor_rules = 4;
  int budget = 200;
};

// Rejection-samples a theory whose query has the requested label at exactly
// `depth` (for Unknown, the planted chain reaches `depth` but the query is
// unprovable). A missing label is drawn uniformly.
Theory SampleTheory(int depth, std::optional<Label> label,
                    std::mt19937_64& rng, const SampleOptions& options = {});

struct RenderedTheory {
  std::string input;
  std::string target;
  std::vector<std::string> gold_tags;  // one per input token, "O" if untagged
};

std::string RenderAtom(const Atom& atom, TheoryKind kind);
std::string RenderRule(const Rule& rule, TheoryKind kind);
RenderedTheory RenderTheory(const Theory& theory);

struct SplitConfig {
  std::vector<int> train_depths{0, 1, 2};
  std::vector<int> test_depths{0, 1, 2, 3, 4, 5};
  int train_per_depth = 1000;
  int test_per_depth = 100;
  double valid_fraction = 0.1;
  SampleOptions sampling;
  std::uint64_t seed = 0;
};

struct Splits {
  std::vector<Record> train;
  std::vector<Record> valid;
  std::map<int, std::vector<Record>> test;  // by depth folder
};

Splits BuildSplits(const SplitConfig& config);

Record ToRecord(const Theory& theory, int bucket, std::string split);

}  // namespace abslab::rules
