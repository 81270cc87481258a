// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Slow reference implementations used to cross-check the library.

#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "abslab/kinship.hpp"
#include "abslab/relations.hpp"
#include "abslab/rules.hpp"

namespace abslab::checks {

// Minimal proof depth of every derivable atom, by relaxing all rule
// instances until nothing changes.
std::map<rules::Atom, int> NaiveClosure(const rules::Theory& theory);

// Label of `query` under the same open-world reading as LabelQuery.
rules::QueryLabel NaiveLabel(const std::map<rules::Atom, int>& closure,
                             const rules::Atom& query);

// Random theory over a small pool with at most `max_facts` facts and
// `max_rules` rules, mixing ground and variable rules and 1-2 atom bodies.
rules::Theory RandomTheory(std::mt19937_64& rng, int max_facts = 8,
                           int max_rules = 6);

// Every (q, r) such that q is p's r, evaluated straight from the parent,
// spouse and gender facts.
std::set<std::pair<int, Relation>> GenealogyRelations(
    const kinship::Genealogy& genealogy, int p);

// Relations a can hold towards b given b is a's r, for a of `a_gender`
// (either gender when absent).
std::set<Relation> InverseOracle(Relation r, std::optional<Gender> a_gender);

}  // namespace abslab::checks
