// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/rules.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "abslab/random.hpp"

namespace abslab::rules {

namespace {

constexpr std::string_view kO = "O";

template <typename T>
const T& Pick(const std::vector<T>& items, std::mt19937_64& rng) {
  return items[std::uniform_int_distribution<std::size_t>(
      0, items.size() - 1)(rng)];
}

bool Coin(std::mt19937_64& rng, double p) {
  return std::bernoulli_distribution(p)(rng);
}

int Uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::vector<std::string> SampleWithout(const std::vector<std::string>& pool,
                                       std::size_t count,
                                       std::mt19937_64& rng) {
  std::vector<std::string> out;
  std::sample(pool.begin(), pool.end(), std::back_inserter(out),
              std::min(count, pool.size()), rng);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::string Capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(s[0]));
  return s;
}

// Token stream with one abstraction type per token.
class Writer {
 public:
  void put(std::string_view token, std::string_view tag = kO) {
    tokens_.emplace_back(token);
    tags_.emplace_back(tag);
  }

  // Sentence-initial tokens are capitalised.
  void start_sentence() { capitalize_ = true; }

  void word(std::string_view token, std::string_view tag = kO) {
    if (capitalize_) {
      put(Capitalized(std::string(token)), tag);
      capitalize_ = false;
    } else {
      put(token, tag);
    }
  }

  std::string text() const {
    std::string out;
    for (const std::string& t : tokens_) {
      if (!out.empty()) out += ' ';
      out += t;
    }
    return out;
  }

  std::vector<std::string>& tags() { return tags_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::string> tags_;
  bool capitalize_ = false;
};

struct Voice {
  std::string_view intro;    // something / someone
  std::string_view pronoun;  // it / they
  std::string_view group;    // things / people
  bool plural;
};

Voice VoiceOf(TheoryKind kind) {
  return kind == TheoryKind::kPeople
             ? Voice{"someone", "they", "people", true}
             : Voice{"something", "it", "things", false};
}

// Writes a term; `first_var` tracks whether the variable was introduced.
void WriteTerm(Writer& w, std::string_view term, TheoryKind kind,
               bool& var_introduced, bool as_object) {
  const Grammar& g = Grammar::Default();
  const Voice v = VoiceOf(kind);
  if (term == kVariable) {
    if (!var_introduced && !as_object) {
      w.word(v.intro);
      var_introduced = true;
    } else if (as_object) {
      w.word(v.plural ? "them" : "it");
    } else {
      w.word(v.pronoun);
    }
    return;
  }
  const std::string_view type = g.type_of(term);
  if (type == "ANIMAL") {
    w.word("the");
    w.word(term, type);
  } else {
    w.word(term, type.empty() ? kO : type);
  }
}

// Predicate part of an atom whose subject was just written.
void WritePredicate(Writer& w, const Atom& atom, TheoryKind kind,
                    bool plural_subject, bool& var_introduced) {
  const Grammar& g = Grammar::Default();
  if (atom.kind == AtomKind::kAttribute) {
    w.word(plural_subject ? "are" : "is");
    if (atom.negated) w.word("not");
    w.word(atom.predicate, "ATTRIBUTE");
  } else {
    auto base = g.relation_base.find(atom.predicate);
    const std::string& base_form =
        base == g.relation_base.end() ? atom.predicate : base->second;
    if (atom.negated) {
      w.word(plural_subject ? "do" : "does");
      w.word("not");
      w.word(base_form, "RELATION");
    } else {
      w.word(plural_subject ? base_form : atom.predicate, "RELATION");
    }
    WriteTerm(w, atom.object, kind, var_introduced, /*as_object=*/true);
  }
}

void WriteClause(Writer& w, const Atom& atom, TheoryKind kind,
                 bool& var_introduced) {
  const bool pronoun = atom.subject == kVariable && var_introduced;
  WriteTerm(w, atom.subject, kind, var_introduced, false);
  WritePredicate(w, atom, kind, pronoun && VoiceOf(kind).plural,
                 var_introduced);
}

void WriteAtomSentence(Writer& w, const Atom& atom, TheoryKind kind) {
  bool introduced = false;
  w.start_sentence();
  WriteClause(w, atom, kind, introduced);
  w.word(".");
}

bool VariableAttributesOnly(const Rule& rule) {
  auto ok = [](const Atom& a) {
    return a.kind == AtomKind::kAttribute && a.subject == kVariable &&
           !a.negated;
  };
  return std::all_of(rule.body.begin(), rule.body.end(), ok) &&
         ok(rule.head);
}

void WriteRule(Writer& w, const Rule& rule, TheoryKind kind) {
  const Voice v = VoiceOf(kind);
  w.start_sentence();
  if (rule.style == RuleStyle::kAll && rule.body.size() == 1 &&
      VariableAttributesOnly(rule)) {
    w.word("all");
    w.word(rule.body[0].predicate, "ATTRIBUTE");
    w.word(v.group);
    w.word("are");
    w.word(rule.head.predicate, "ATTRIBUTE");
    w.word(".");
    return;
  }
  if (rule.style == RuleStyle::kAdjectives && rule.body.size() == 2 &&
      VariableAttributesOnly(rule)) {
    w.word(rule.body[0].predicate, "ATTRIBUTE");
    w.word(",");
    w.word(rule.body[1].predicate, "ATTRIBUTE");
    w.word(v.group);
    w.word("are");
    w.word(rule.head.predicate, "ATTRIBUTE");
    w.word(".");
    return;
  }
  bool introduced = false;
  w.word("if");
  const Atom& b0 = rule.body[0];
  WriteClause(w, b0, kind, introduced);
  if (rule.body.size() == 2) {
    const Atom& b1 = rule.body[1];
    w.word("and");
    if (b0.kind == AtomKind::kAttribute && b1.kind == AtomKind::kAttribute &&
        b0.subject == b1.subject) {
      w.word(b1.predicate, "ATTRIBUTE");
    } else {
      WriteClause(w, b1, kind, introduced);
    }
  }
  w.word("then");
  WriteClause(w, rule.head, kind, introduced);
  w.word(".");
}

std::string Render(void (*fn)(Writer&, const Atom&, TheoryKind),
                   const Atom& atom, TheoryKind kind) {
  Writer w;
  fn(w, atom, kind);
  return w.text();
}

}  // namespace

// -------------------------------------------------------------------- Atoms

Atom Atom::positive() const {
  Atom a = *this;
  a.negated = false;
  return a;
}

Atom Atom::bind(std::string_view entity) const {
  Atom a = *this;
  if (a.subject == kVariable) a.subject = entity;
  if (a.object == kVariable) a.object = entity;
  return a;
}

bool Rule::has_variable() const {
  return std::any_of(body.begin(), body.end(),
                     [](const Atom& a) { return !a.is_ground(); }) ||
         !head.is_ground();
}

void ValidateRule(const Rule& rule) {
  if (rule.body.empty() || rule.body.size() > 2) {
    throw std::invalid_argument("rule body must have 1 or 2 atoms");
  }
  bool body_var = false;
  auto check = [](const Atom& a) {
    if (a.subject.empty() || a.predicate.empty()) {
      throw std::invalid_argument("atom needs subject and predicate");
    }
    if ((a.kind == AtomKind::kRelation) == a.object.empty()) {
      throw std::invalid_argument(
          "relation atoms need an object, attribute atoms must not have one");
    }
  };
  for (const Atom& a : rule.body) {
    check(a);
    if (a.negated) throw std::invalid_argument("rule bodies are positive");
    body_var = body_var || !a.is_ground();
  }
  check(rule.head);
  if (rule.head.negated) throw std::invalid_argument("rule heads are positive");
  if (!rule.head.is_ground() && !body_var) {
    throw std::invalid_argument("head variable must appear in the body");
  }
}

std::string_view LabelName(Label label) {
  switch (label) {
    case Label::kTrue:
      return "True";
    case Label::kFalse:
      return "False";
    case Label::kUnknown:
      return "Unknown";
  }
  return "Unknown";
}

std::optional<Label> ParseLabel(std::string_view name) {
  if (name == "True") return Label::kTrue;
  if (name == "False") return Label::kFalse;
  if (name == "Unknown") return Label::kUnknown;
  return std::nullopt;
}

std::vector<std::string> Entities(const Theory& theory) {
  std::set<std::string> out;
  auto add = [&](const Atom& a) {
    if (a.subject != kVariable) out.insert(a.subject);
    if (a.kind == AtomKind::kRelation && a.object != kVariable) {
      out.insert(a.object);
    }
  };
  for (const Atom& f : theory.facts) add(f);
  for (const Rule& r : theory.rules) {
    for (const Atom& a : r.body) add(a);
    add(r.head);
  }
  return {out.begin(), out.end()};
}

// ------------------------------------------------------------------ Prover

namespace {

// Forward chaining in which `banned` (if any) is never asserted.
Closure Chain(const Theory& theory, const Atom* banned) {
  Closure closure;
  for (const Atom& f : theory.facts) {
    if (banned == nullptr || f.positive() != *banned) {
      closure.emplace(f.positive(), Derivation{});
    }
  }
  const std::vector<std::string> entities = Entities(theory);
  const std::vector<std::string> no_binding{""};

  for (int round = 1;; ++round) {
    std::map<Atom, Derivation> fresh;
    for (std::size_t r = 0; r < theory.rules.size(); ++r) {
      const Rule& rule = theory.rules[r];
      const auto& bindings = rule.has_variable() ? entities : no_binding;
      for (const std::string& b : bindings) {
        std::vector<Atom> premises;
        bool fires = true;
        for (const Atom& a : rule.body) {
          premises.push_back(a.bind(b));
          if (!closure.contains(premises.back())) {
            fires = false;
            break;
          }
        }
        if (!fires) continue;
        Atom head = rule.head.bind(b);
        if (banned != nullptr && head == *banned) continue;
        if (closure.contains(head) || fresh.contains(head)) continue;
        fresh.emplace(std::move(head),
                      Derivation{round, static_cast<int>(r), b,
                                 std::move(premises)});
      }
    }
    if (fresh.empty()) break;
    closure.merge(fresh);
  }
  return closure;
}

// True when dropping any premise of the recorded derivation of `goal` pushes
// it deeper or out of reach, i.e. no other proof is as shallow.
bool ProofIsTight(const Theory& theory, const Closure& closure,
                  const Atom& goal) {
  const Derivation& d = closure.at(goal);
  for (const Atom& premise : d.premises) {
    const Closure without = Chain(theory, &premise);
    auto it = without.find(goal);
    if (it != without.end() && it->second.depth <= d.depth) return false;
  }
  return true;
}

}  // namespace

Closure ForwardChain(const Theory& theory) { return Chain(theory, nullptr); }

QueryLabel LabelQuery(const Closure& closure, const Atom& query) {
  auto it = closure.find(query.positive());
  if (it == closure.end()) return {Label::kUnknown, std::nullopt};
  return {query.negated ? Label::kFalse : Label::kTrue, it->second.depth};
}

// ----------------------------------------------------------------- Grammar

const Grammar& Grammar::Default() {
  static const Grammar g = [] {
    Grammar g;
    g.people = {"Anne", "Bob", "Charlie", "Dave",
                "Erin", "Fiona", "Gary", "Harry"};
    g.animals = {"bear", "cat", "cow", "dog", "lion",
                 "mouse", "rabbit", "squirrel", "tiger"};
    g.attributes = {"big",  "blue",  "cold",  "furry", "green",
                    "kind", "nice",  "quiet", "red",   "rough",
                    "round", "smart", "white", "young"};
    g.relation_base = {{"chases", "chase"}, {"eats", "eat"},
                       {"likes", "like"},   {"needs", "need"},
                       {"sees", "see"},     {"visits", "visit"}};
    for (const auto& [verb, base] : g.relation_base) g.relations.push_back(verb);
    return g;
  }();
  return g;
}

std::string_view Grammar::type_of(std::string_view token) const {
  if (token.empty()) return {};
  auto in = [](const std::vector<std::string>& pool, std::string_view t) {
    return std::find(pool.begin(), pool.end(), t) != pool.end();
  };
  if (in(people, token)) return "PERSON";
  std::string lower(token);
  lower[0] = static_cast<char>(std::tolower(lower[0]));
  if (in(animals, lower)) return "ANIMAL";
  if (in(attributes, lower)) return "ATTRIBUTE";
  if (in(relations, lower)) return "RELATION";
  for (const auto& [verb, base] : relation_base) {
    if (base == lower) return "RELATION";
  }
  return {};
}

// --------------------------------------------------------------- Rendering

std::string RenderAtom(const Atom& atom, TheoryKind kind) {
  return Render(WriteAtomSentence, atom, kind);
}

std::string RenderRule(const Rule& rule, TheoryKind kind) {
  Writer w;
  WriteRule(w, rule, kind);
  return w.text();
}

RenderedTheory RenderTheory(const Theory& theory) {
  Writer w;
  w.put("context");
  w.put(":");
  for (const Atom& f : theory.facts) WriteAtomSentence(w, f, theory.kind);
  for (const Rule& r : theory.rules) WriteRule(w, r, theory.kind);
  w.put("question");
  w.put(":");
  WriteAtomSentence(w, theory.query, theory.kind);
  RenderedTheory out;
  out.input = w.text();
  out.target = "answer : " + std::string(LabelName(theory.label));
  out.gold_tags = std::move(w.tags());
  return out;
}

// ---------------------------------------------------------------- Sampling

namespace {

class TheoryBuilder {
 public:
  TheoryBuilder(TheoryKind kind, std::mt19937_64& rng,
                const SampleOptions& options)
      : kind_(kind), rng_(rng) {
    const Grammar& g = Grammar::Default();
    const int n = Uniform(rng, options.min_entities, options.max_entities);
    entities_ = SampleWithout(
        kind == TheoryKind::kPeople ? g.people : g.animals, n, rng);
    attributes_ = SampleWithout(g.attributes, 6, rng);
    relations_ = SampleWithout(g.relations, 3, rng);
  }

  const std::vector<std::string>& entities() const { return entities_; }

  Atom random_atom(const std::string& subject) {
    Atom a;
    a.subject = subject;
    if (kind_ == TheoryKind::kAnimals && Coin(rng_, 0.4)) {
      a.kind = AtomKind::kRelation;
      a.predicate = Pick(relations_, rng_);
      do {
        a.object = Pick(entities_, rng_);
      } while (a.object == subject);
    } else {
      a.predicate = Pick(attributes_, rng_);
    }
    return a;
  }

  Atom random_atom() { return random_atom(Pick(entities_, rng_)); }

  static Atom lift(Atom a) {
    a.subject = kVariable;
    return a;
  }

  RuleStyle style_for(const Rule& rule) {
    if (kind_ != TheoryKind::kPeople || !VariableAttributesOnly(rule)) {
      return RuleStyle::kIfThen;
    }
    if (!Coin(rng_, 0.4)) return RuleStyle::kIfThen;
    return rule.body.size() == 1 ? RuleStyle::kAll : RuleStyle::kAdjectives;
  }

  Rule distractor_rule() {
    Rule r;
    const std::string probe = Pick(entities_, rng_);
    r.body.push_back(lift(random_atom(probe)));
    if (Coin(rng_, 0.4)) {
      Atom extra = lift(random_atom(probe));
      if (extra != r.body[0]) r.body.push_back(extra);
    }
    do {
      r.head = kind_ == TheoryKind::kAnimals && Coin(rng_, 0.2)
                   ? random_atom()
                   : lift(random_atom(probe));
    } while (std::find(r.body.begin(), r.body.end(), r.head) != r.body.end());
    r.style = style_for(r);
    return r;
  }

 private:
  TheoryKind kind_;
  std::mt19937_64& rng_;
  std::vector<std::string> entities_, attributes_, relations_;
};

}  // namespace

Theory SampleTheory(int depth, std::optional<Label> label,
                    std::mt19937_64& rng, const SampleOptions& options) {
  if (depth < 0 || depth > kMaxDepth) {
    throw std::invalid_argument("depth must lie in 0.." +
                                std::to_string(kMaxDepth));
  }
  const Label want = label ? *label
                           : static_cast<Label>(Uniform(rng, 0, 2));
  for (int attempt = 0; attempt < options.budget; ++attempt) {
    const TheoryKind kind =
        Coin(rng, 0.5) ? TheoryKind::kPeople : TheoryKind::kAnimals;
    TheoryBuilder b(kind, rng, options);
    const std::string subject = Pick(b.entities(), rng);

    // Planted chain ch[0] -> ch[1] -> ... -> ch[depth].
    std::vector<Atom> chain{b.random_atom(subject)};
    std::set<Atom> facts{chain[0]};
    std::vector<Rule> rules;
    bool ok = true;
    for (int i = 1; i <= depth && ok; ++i) {
      Atom next;
      int tries = 0;
      do {
        next = b.random_atom(subject);
      } while (std::find(chain.begin(), chain.end(), next) != chain.end() &&
               ++tries < 30);
      if (tries >= 30) {
        ok = false;
        break;
      }
      const bool use_var = Coin(rng, 0.75);
      auto shape = [&](const Atom& a) {
        return use_var ? TheoryBuilder::lift(a) : a;
      };
      Rule r;
      r.body.push_back(shape(chain.back()));
      if (Coin(rng, 0.35)) {
        Atom extra = b.random_atom(subject);
        if (extra != next &&
            std::find(chain.begin(), chain.end(), extra) == chain.end()) {
          facts.insert(extra);
          r.body.push_back(shape(extra));
        }
      }
      r.head = shape(next);
      r.style = b.style_for(r);
      rules.push_back(std::move(r));
      chain.push_back(std::move(next));
    }
    if (!ok) continue;

    const int n_facts = Uniform(rng, options.min_facts, options.max_facts);
    for (int tries = 0;
         static_cast<int>(facts.size()) < n_facts && tries < 50; ++tries) {
      Atom a = b.random_atom();
      if (std::find(chain.begin() + 1, chain.end(), a) != chain.end()) continue;
      facts.insert(std::move(a));
    }
    const int n_distract = Uniform(rng, options.min_distractor_rules,
                                   options.max_distractor_rules);
    for (int i = 0; i < n_distract; ++i) rules.push_back(b.distractor_rule());
    std::shuffle(rules.begin(), rules.end(), rng);

    Theory t;
    t.kind = kind;
    t.facts.assign(facts.begin(), facts.end());
    t.rules = std::move(rules);
    const Closure closure = ForwardChain(t);
    auto planted = closure.find(chain.back());
    if (planted == closure.end() || planted->second.depth != depth) continue;

    if (want == Label::kUnknown) {
      bool found = false;
      for (int tries = 0; tries < 30 && !found; ++tries) {
        Atom q = b.random_atom();
        if (closure.contains(q)) continue;
        q.negated = Coin(rng, 0.5);
        t.query = std::move(q);
        found = true;
      }
      if (!found) continue;
    } else {
      t.query = chain.back();
      t.query.negated = want == Label::kFalse;
    }
    const QueryLabel got = LabelQuery(closure, t.query);
    if (got.label != want) continue;
    if (want != Label::kUnknown &&
        (got.depth != depth || !ProofIsTight(t, closure, t.query.positive()))) {
      continue;
    }
    t.label = got.label;
    t.depth = got.depth;
    return t;
  }
  throw RulesError("rules sampling budget exhausted at depth " +
                   std::to_string(depth));
}

// ------------------------------------------------------------------ Splits

Record ToRecord(const Theory& theory, int bucket, std::string split) {
  RenderedTheory rendered = RenderTheory(theory);
  Record r;
  r.task = Task::kRules;
  r.input = std::move(rendered.input);
  r.target = std::move(rendered.target);
  r.split = std::move(split);
  r.bucket = bucket;
  r.label = std::string(LabelName(theory.label));
  r.proof_depth = theory.depth;
  r.gold_tags = std::move(rendered.gold_tags);
  return r;
}

Splits BuildSplits(const SplitConfig& config) {
  auto check = [](const std::vector<int>& depths, const char* what) {
    if (depths.empty()) {
      throw std::invalid_argument(std::string(what) + " depths are empty");
    }
    for (int d : depths) {
      if (d < 0 || d > kMaxDepth) {
        throw std::invalid_argument(std::string(what) +
                                    " depths must lie in 0..5");
      }
    }
  };
  check(config.train_depths, "train");
  check(config.test_depths, "test");
  if (config.train_per_depth < 1 || config.test_per_depth < 1) {
    throw std::invalid_argument("per-depth counts must be positive");
  }
  if (!(config.valid_fraction >= 0.0 && config.valid_fraction < 1.0)) {
    throw std::invalid_argument("valid_fraction must lie in [0, 1)");
  }

  auto make = [&](int stream, int depth, int index) {
    auto rng = MakeRng({config.seed, 100u + static_cast<std::uint64_t>(stream),
                        static_cast<std::uint64_t>(depth),
                        static_cast<std::uint64_t>(index)});
    return SampleTheory(depth, static_cast<Label>(index % 3), rng,
                        config.sampling);
  };

  Splits out;
  std::vector<Record> train;
  for (int d : config.train_depths) {
    for (int i = 0; i < config.train_per_depth; ++i) {
      train.push_back(ToRecord(make(0, d, i), d, "train"));
    }
  }
  auto shuffle_rng = MakeRng({config.seed, 102u});
  std::shuffle(train.begin(), train.end(), shuffle_rng);
  const auto n_valid = static_cast<std::size_t>(
      std::llround(config.valid_fraction * static_cast<double>(train.size())));
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (i < n_valid) {
      train[i].split = "valid";
      out.valid.push_back(std::move(train[i]));
    } else {
      out.train.push_back(std::move(train[i]));
    }
  }
  for (int d : config.test_depths) {
    auto& bucket = out.test[d];
    for (int i = 0; i < config.test_per_depth; ++i) {
      bucket.push_back(ToRecord(make(1, d, i), d, "test"));
    }
  }
  return out;
}

}  // namespace abslab::rules
