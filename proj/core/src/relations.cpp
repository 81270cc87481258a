// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/relations.hpp"

#include <initializer_list>
#include <tuple>

namespace abslab {

namespace {

using R = Relation;

constexpr std::array<std::string_view, kRelationCount> kNames = {
    "father",      "mother",        "son",          "daughter",
    "brother",     "sister",        "husband",      "wife",
    "grandfather", "grandmother",   "grandson",     "granddaughter",
    "uncle",       "aunt",          "nephew",       "niece",
    "father-in-law", "mother-in-law", "son-in-law", "daughter-in-law",
};

int Index(Relation r) { return static_cast<int>(r); }

// Composition under the family model used by the generator: every child has
// a married father and mother, siblings are full siblings, marriages are
// monogamous and only blood uncles/aunts count. Entries not listed are
// ambiguous or fall outside the schema (cousins, great-grandparents, ...).
constexpr std::tuple<R, R, R> kComposition[] = {
    {R::kFather, R::kFather, R::kGrandfather},
    {R::kFather, R::kMother, R::kGrandmother},
    {R::kFather, R::kSon, R::kBrother},
    {R::kFather, R::kDaughter, R::kSister},
    {R::kFather, R::kBrother, R::kUncle},
    {R::kFather, R::kSister, R::kAunt},
    {R::kFather, R::kWife, R::kMother},
    {R::kFather, R::kFatherInLaw, R::kGrandfather},
    {R::kFather, R::kMotherInLaw, R::kGrandmother},

    {R::kMother, R::kFather, R::kGrandfather},
    {R::kMother, R::kMother, R::kGrandmother},
    {R::kMother, R::kSon, R::kBrother},
    {R::kMother, R::kDaughter, R::kSister},
    {R::kMother, R::kBrother, R::kUncle},
    {R::kMother, R::kSister, R::kAunt},
    {R::kMother, R::kHusband, R::kFather},
    {R::kMother, R::kFatherInLaw, R::kGrandfather},
    {R::kMother, R::kMotherInLaw, R::kGrandmother},

    {R::kSon, R::kFather, R::kHusband},
    {R::kSon, R::kMother, R::kWife},
    {R::kSon, R::kSon, R::kGrandson},
    {R::kSon, R::kDaughter, R::kGranddaughter},
    {R::kSon, R::kBrother, R::kSon},
    {R::kSon, R::kSister, R::kDaughter},
    {R::kSon, R::kWife, R::kDaughterInLaw},
    {R::kSon, R::kNephew, R::kGrandson},
    {R::kSon, R::kNiece, R::kGranddaughter},

    {R::kDaughter, R::kFather, R::kHusband},
    {R::kDaughter, R::kMother, R::kWife},
    {R::kDaughter, R::kSon, R::kGrandson},
    {R::kDaughter, R::kDaughter, R::kGranddaughter},
    {R::kDaughter, R::kBrother, R::kSon},
    {R::kDaughter, R::kSister, R::kDaughter},
    {R::kDaughter, R::kHusband, R::kSonInLaw},
    {R::kDaughter, R::kNephew, R::kGrandson},
    {R::kDaughter, R::kNiece, R::kGranddaughter},

    {R::kBrother, R::kFather, R::kFather},
    {R::kBrother, R::kMother, R::kMother},
    {R::kBrother, R::kSon, R::kNephew},
    {R::kBrother, R::kDaughter, R::kNiece},
    {R::kBrother, R::kBrother, R::kBrother},
    {R::kBrother, R::kSister, R::kSister},
    {R::kBrother, R::kGrandfather, R::kGrandfather},
    {R::kBrother, R::kGrandmother, R::kGrandmother},
    {R::kBrother, R::kUncle, R::kUncle},
    {R::kBrother, R::kAunt, R::kAunt},

    {R::kSister, R::kFather, R::kFather},
    {R::kSister, R::kMother, R::kMother},
    {R::kSister, R::kSon, R::kNephew},
    {R::kSister, R::kDaughter, R::kNiece},
    {R::kSister, R::kBrother, R::kBrother},
    {R::kSister, R::kSister, R::kSister},
    {R::kSister, R::kGrandfather, R::kGrandfather},
    {R::kSister, R::kGrandmother, R::kGrandmother},
    {R::kSister, R::kUncle, R::kUncle},
    {R::kSister, R::kAunt, R::kAunt},

    {R::kHusband, R::kFather, R::kFatherInLaw},
    {R::kHusband, R::kMother, R::kMotherInLaw},
    {R::kHusband, R::kSon, R::kSon},
    {R::kHusband, R::kDaughter, R::kDaughter},
    {R::kHusband, R::kGrandson, R::kGrandson},
    {R::kHusband, R::kGranddaughter, R::kGranddaughter},
    {R::kHusband, R::kFatherInLaw, R::kFather},
    {R::kHusband, R::kMotherInLaw, R::kMother},
    {R::kHusband, R::kSonInLaw, R::kSonInLaw},
    {R::kHusband, R::kDaughterInLaw, R::kDaughterInLaw},

    {R::kWife, R::kFather, R::kFatherInLaw},
    {R::kWife, R::kMother, R::kMotherInLaw},
    {R::kWife, R::kSon, R::kSon},
    {R::kWife, R::kDaughter, R::kDaughter},
    {R::kWife, R::kGrandson, R::kGrandson},
    {R::kWife, R::kGranddaughter, R::kGranddaughter},
    {R::kWife, R::kFatherInLaw, R::kFather},
    {R::kWife, R::kMotherInLaw, R::kMother},
    {R::kWife, R::kSonInLaw, R::kSonInLaw},
    {R::kWife, R::kDaughterInLaw, R::kDaughterInLaw},

    {R::kGrandfather, R::kWife, R::kGrandmother},
    {R::kGrandmother, R::kHusband, R::kGrandfather},

    {R::kGrandson, R::kBrother, R::kGrandson},
    {R::kGrandson, R::kSister, R::kGranddaughter},
    {R::kGranddaughter, R::kBrother, R::kGrandson},
    {R::kGranddaughter, R::kSister, R::kGranddaughter},

    {R::kUncle, R::kFather, R::kGrandfather},
    {R::kUncle, R::kMother, R::kGrandmother},
    {R::kAunt, R::kFather, R::kGrandfather},
    {R::kAunt, R::kMother, R::kGrandmother},

    {R::kNephew, R::kBrother, R::kNephew},
    {R::kNephew, R::kSister, R::kNiece},
    {R::kNiece, R::kBrother, R::kNephew},
    {R::kNiece, R::kSister, R::kNiece},

    {R::kFatherInLaw, R::kWife, R::kMotherInLaw},
    {R::kMotherInLaw, R::kHusband, R::kFatherInLaw},

    {R::kSonInLaw, R::kWife, R::kDaughter},
    {R::kSonInLaw, R::kSon, R::kGrandson},
    {R::kSonInLaw, R::kDaughter, R::kGranddaughter},
    {R::kSonInLaw, R::kFatherInLaw, R::kHusband},
    {R::kSonInLaw, R::kMotherInLaw, R::kWife},

    {R::kDaughterInLaw, R::kHusband, R::kSon},
    {R::kDaughterInLaw, R::kSon, R::kGrandson},
    {R::kDaughterInLaw, R::kDaughter, R::kGranddaughter},
    {R::kDaughterInLaw, R::kFatherInLaw, R::kHusband},
    {R::kDaughterInLaw, R::kMotherInLaw, R::kWife},
};

}  // namespace

std::string_view GenderName(Gender g) {
  return g == Gender::kMale ? "male" : "female";
}

std::optional<Gender> ParseGender(std::string_view s) {
  if (s == "male" || s == "m") return Gender::kMale;
  if (s == "female" || s == "f") return Gender::kFemale;
  return std::nullopt;
}

const RelationSchema& RelationSchema::Default() {
  static const RelationSchema schema;
  return schema;
}

RelationSchema::RelationSchema() {
  for (int i = 0; i < kRelationCount; ++i) all_[i] = static_cast<Relation>(i);
  for (const auto& [first, second, result] : kComposition) {
    compose_[Index(first)][Index(second)] = result;
  }
}

std::string_view RelationSchema::name(Relation r) const {
  return kNames[Index(r)];
}

std::optional<Relation> RelationSchema::parse(std::string_view name) const {
  for (int i = 0; i < kRelationCount; ++i) {
    if (kNames[i] == name) return static_cast<Relation>(i);
  }
  return std::nullopt;
}

Gender RelationSchema::target_gender(Relation r) const {
  switch (r) {
    case R::kFather:
    case R::kSon:
    case R::kBrother:
    case R::kHusband:
    case R::kGrandfather:
    case R::kGrandson:
    case R::kUncle:
    case R::kNephew:
    case R::kFatherInLaw:
    case R::kSonInLaw:
      return Gender::kMale;
    default:
      return Gender::kFemale;
  }
}

std::optional<Relation> RelationSchema::compose(Relation first,
                                                Relation second) const {
  return compose_[Index(first)][Index(second)];
}

std::optional<Relation> RelationSchema::inverse(Relation r,
                                                Gender source_gender) const {
  const bool male = source_gender == Gender::kMale;
  switch (r) {
    case R::kFather:
    case R::kMother:
      return male ? R::kSon : R::kDaughter;
    case R::kSon:
    case R::kDaughter:
      return male ? R::kFather : R::kMother;
    case R::kBrother:
    case R::kSister:
      return male ? R::kBrother : R::kSister;
    case R::kHusband:
      return male ? std::nullopt : std::optional(R::kWife);
    case R::kWife:
      return male ? std::optional(R::kHusband) : std::nullopt;
    case R::kGrandfather:
    case R::kGrandmother:
      return male ? R::kGrandson : R::kGranddaughter;
    case R::kGrandson:
    case R::kGranddaughter:
      return male ? R::kGrandfather : R::kGrandmother;
    case R::kUncle:
    case R::kAunt:
      return male ? R::kNephew : R::kNiece;
    case R::kNephew:
    case R::kNiece:
      return male ? R::kUncle : R::kAunt;
    case R::kFatherInLaw:
    case R::kMotherInLaw:
      return male ? R::kSonInLaw : R::kDaughterInLaw;
    case R::kSonInLaw:
    case R::kDaughterInLaw:
      return male ? R::kFatherInLaw : R::kMotherInLaw;
  }
  return std::nullopt;
}

std::vector<Relation> RelationSchema::inverses(Relation r) const {
  std::vector<Relation> out;
  for (Gender g : {Gender::kMale, Gender::kFemale}) {
    if (auto inv = inverse(r, g)) out.push_back(*inv);
  }
  return out;
}

}  // namespace abslab
