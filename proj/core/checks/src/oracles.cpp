// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/checks/oracles.hpp"

#include <algorithm>
#include <string>

namespace abslab::checks {

// ------------------------------------------------------------------ Rules

std::map<rules::Atom, int> NaiveClosure(const rules::Theory& theory) {
  std::map<rules::Atom, int> depth;
  for (const rules::Atom& f : theory.facts) depth[f.positive()] = 0;
  const std::vector<std::string> entities = rules::Entities(theory);
  for (bool changed = true; changed;) {
    changed = false;
    for (const rules::Rule& rule : theory.rules) {
      std::vector<std::string> bindings{""};
      if (rule.has_variable()) bindings = entities;
      for (const std::string& b : bindings) {
        int deepest = -1;
        bool holds = true;
        for (const rules::Atom& a : rule.body) {
          auto it = depth.find(a.bind(b));
          if (it == depth.end()) {
            holds = false;
            break;
          }
          deepest = std::max(deepest, it->second);
        }
        if (!holds) continue;
        const rules::Atom head = rule.head.bind(b);
        auto it = depth.find(head);
        if (it == depth.end() || it->second > deepest + 1) {
          depth[head] = deepest + 1;
          changed = true;
        }
      }
    }
  }
  return depth;
}

rules::QueryLabel NaiveLabel(const std::map<rules::Atom, int>& closure,
                             const rules::Atom& query) {
  rules::Atom positive = query;
  positive.negated = false;
  auto it = closure.find(positive);
  if (it == closure.end()) return {rules::Label::kUnknown, std::nullopt};
  return {query.negated ? rules::Label::kFalse : rules::Label::kTrue,
          it->second};
}

rules::Theory RandomTheory(std::mt19937_64& rng, int max_facts,
                           int max_rules) {
  const std::vector<std::string> entities{"bear", "cat", "cow"};
  const std::vector<std::string> attributes{"big", "cold", "green", "kind",
                                            "red"};
  const std::vector<std::string> relations{"chases", "likes"};
  auto pick = [&](const std::vector<std::string>& pool) {
    return pool[std::uniform_int_distribution<std::size_t>(
        0, pool.size() - 1)(rng)];
  };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  auto atom = [&](const std::string& subject) {
    rules::Atom a;
    a.subject = subject;
    if (coin(0.25)) {
      a.kind = rules::AtomKind::kRelation;
      a.predicate = pick(relations);
      a.object = pick(entities);
    } else {
      a.predicate = pick(attributes);
    }
    return a;
  };

  rules::Theory t;
  t.kind = rules::TheoryKind::kAnimals;
  const int facts = std::uniform_int_distribution<int>(1, max_facts)(rng);
  for (int i = 0; i < facts; ++i) {
    rules::Atom f = atom(pick(entities));
    if (std::find(t.facts.begin(), t.facts.end(), f) == t.facts.end()) {
      t.facts.push_back(f);
    }
  }
  const int count = std::uniform_int_distribution<int>(1, max_rules)(rng);
  for (int i = 0; i < count; ++i) {
    const bool lifted = coin(0.6);
    const std::string subject =
        lifted ? std::string(rules::kVariable) : pick(entities);
    rules::Rule r;
    r.body.push_back(atom(subject));
    if (coin(0.4)) r.body.push_back(atom(subject));
    r.head = atom(subject);
    t.rules.push_back(r);
  }
  t.query = atom(pick(entities));
  t.query.negated = coin(0.5);
  return t;
}

// ---------------------------------------------------------------- Kinship

namespace {

using kinship::Genealogy;

bool IsParent(const Genealogy& g, int child, int parent) {
  const kinship::Person& c = g.people[child];
  return parent >= 0 && (c.father == parent || c.mother == parent);
}

bool IsSibling(const Genealogy& g, int a, int b) {
  const kinship::Person& x = g.people[a];
  const kinship::Person& y = g.people[b];
  return a != b && x.father >= 0 && x.mother >= 0 && x.father == y.father &&
         x.mother == y.mother;
}

bool IsSpouse(const Genealogy& g, int a, int b) {
  return g.people[a].spouse == b && b >= 0;
}

}  // namespace

std::set<std::pair<int, Relation>> GenealogyRelations(const Genealogy& g,
                                                      int p) {
  using R = Relation;
  const int n = static_cast<int>(g.people.size());
  std::set<std::pair<int, Relation>> out;
  for (int q = 0; q < n; ++q) {
    if (q == p) continue;
    const bool male = g.people[q].gender == Gender::kMale;
    auto add = [&](R m, R f) { out.emplace(q, male ? m : f); };
    auto exists = [&](auto pred) {
      for (int z = 0; z < n; ++z) {
        if (pred(z)) return true;
      }
      return false;
    };
    if (IsParent(g, p, q)) add(R::kFather, R::kMother);
    if (IsParent(g, q, p)) add(R::kSon, R::kDaughter);
    if (IsSibling(g, p, q)) add(R::kBrother, R::kSister);
    if (IsSpouse(g, p, q)) add(R::kHusband, R::kWife);
    if (exists([&](int z) { return IsParent(g, p, z) && IsParent(g, z, q); })) {
      add(R::kGrandfather, R::kGrandmother);
    }
    if (exists([&](int z) { return IsParent(g, q, z) && IsParent(g, z, p); })) {
      add(R::kGrandson, R::kGranddaughter);
    }
    if (exists([&](int z) { return IsParent(g, p, z) && IsSibling(g, z, q); })) {
      add(R::kUncle, R::kAunt);
    }
    if (exists([&](int z) { return IsSibling(g, p, z) && IsParent(g, q, z); })) {
      add(R::kNephew, R::kNiece);
    }
    if (exists([&](int z) { return IsSpouse(g, p, z) && IsParent(g, z, q); })) {
      add(R::kFatherInLaw, R::kMotherInLaw);
    }
    if (exists([&](int z) { return IsParent(g, z, p) && IsSpouse(g, z, q); })) {
      add(R::kSonInLaw, R::kDaughterInLaw);
    }
  }
  return out;
}

namespace {

enum class Kind {
  kParent, kChild, kSibling, kSpouse, kGrandparent, kGrandchild,
  kUncle, kNephew, kParentInLaw, kChildInLaw,
};

struct Form {
  Relation relation;
  Kind kind;
  Gender gender;
};

constexpr Form kForms[] = {
    {Relation::kFather, Kind::kParent, Gender::kMale},
    {Relation::kMother, Kind::kParent, Gender::kFemale},
    {Relation::kSon, Kind::kChild, Gender::kMale},
    {Relation::kDaughter, Kind::kChild, Gender::kFemale},
    {Relation::kBrother, Kind::kSibling, Gender::kMale},
    {Relation::kSister, Kind::kSibling, Gender::kFemale},
    {Relation::kHusband, Kind::kSpouse, Gender::kMale},
    {Relation::kWife, Kind::kSpouse, Gender::kFemale},
    {Relation::kGrandfather, Kind::kGrandparent, Gender::kMale},
    {Relation::kGrandmother, Kind::kGrandparent, Gender::kFemale},
    {Relation::kGrandson, Kind::kGrandchild, Gender::kMale},
    {Relation::kGranddaughter, Kind::kGrandchild, Gender::kFemale},
    {Relation::kUncle, Kind::kUncle, Gender::kMale},
    {Relation::kAunt, Kind::kUncle, Gender::kFemale},
    {Relation::kNephew, Kind::kNephew, Gender::kMale},
    {Relation::kNiece, Kind::kNephew, Gender::kFemale},
    {Relation::kFatherInLaw, Kind::kParentInLaw, Gender::kMale},
    {Relation::kMotherInLaw, Kind::kParentInLaw, Gender::kFemale},
    {Relation::kSonInLaw, Kind::kChildInLaw, Gender::kMale},
    {Relation::kDaughterInLaw, Kind::kChildInLaw, Gender::kFemale},
};

Kind Converse(Kind k) {
  switch (k) {
    case Kind::kParent: return Kind::kChild;
    case Kind::kChild: return Kind::kParent;
    case Kind::kGrandparent: return Kind::kGrandchild;
    case Kind::kGrandchild: return Kind::kGrandparent;
    case Kind::kUncle: return Kind::kNephew;
    case Kind::kNephew: return Kind::kUncle;
    case Kind::kParentInLaw: return Kind::kChildInLaw;
    case Kind::kChildInLaw: return Kind::kParentInLaw;
    default: return k;
  }
}

}  // namespace

std::set<Relation> InverseOracle(Relation r, std::optional<Gender> a_gender) {
  const Form* form = nullptr;
  for (const Form& f : kForms) {
    if (f.relation == r) form = &f;
  }
  std::set<Relation> out;
  for (const Form& f : kForms) {
    if (f.kind != Converse(form->kind)) continue;
    if (a_gender && f.gender != *a_gender) continue;
    // Spouses have opposite genders.
    if (f.kind == Kind::kSpouse && f.gender == form->gender) continue;
    out.insert(f.relation);
  }
  return out;
}

}  // namespace abslab::checks
