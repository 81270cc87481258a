// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Gendered kinship relations. Throughout, "b is a's R" is written a -R-> b
// and a triple (a, R, b) has that meaning.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace abslab {

enum class Gender { kMale, kFemale };

std::string_view GenderName(Gender g);
std::optional<Gender> ParseGender(std::string_view s);

enum class Relation {
  kFather,
  kMother,
  kSon,
  kDaughter,
  kBrother,
  kSister,
  kHusband,
  kWife,
  kGrandfather,
  kGrandmother,
  kGrandson,
  kGranddaughter,
  kUncle,
  kAunt,
  kNephew,
  kNiece,
  kFatherInLaw,
  kMotherInLaw,
  kSonInLaw,
  kDaughterInLaw,
};

inline constexpr int kRelationCount = 20;

class RelationSchema {
 public:
  static const RelationSchema& Default();

  std::span<const Relation> all() const { return all_; }
  std::string_view name(Relation r) const;
  std::optional<Relation> parse(std::string_view name) const;

  // Gender of b in a -r-> b.
  Gender target_gender(Relation r) const;

  // Given a -first-> b and b -second-> c with c distinct from a and b, the
  // relation a -> c, or nullopt when it is not uniquely determined inside the
  // schema.
  std::optional<Relation> compose(Relation first, Relation second) const;

  // Given a -r-> b, the relation b -> a for a of gender `source_gender`, or
  // nullopt when no such relation exists (e.g. husband of a man).
  std::optional<Relation> inverse(Relation r, Gender source_gender) const;
  // Every relation b -> a compatible with some gender of a.
  std::vector<Relation> inverses(Relation r) const;

 private:
  RelationSchema();

  std::array<Relation, kRelationCount> all_{};
  std::array<std::array<std::optional<Relation>, kRelationCount>,
             kRelationCount>
      compose_{};
};

}  // namespace abslab
