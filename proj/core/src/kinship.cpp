// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/kinship.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "abslab/random.hpp"
#include "abslab/vocab.hpp"

namespace abslab::detail {
extern const std::string_view kNamesTsv;
}  // namespace abslab::detail

namespace abslab::kinship {

namespace {

constexpr int kSampleBudget = 200;
constexpr int kWalkExpansionBudget = 4000;

bool IsBasic(Relation r) {
  switch (r) {
    case Relation::kFather:
    case Relation::kMother:
    case Relation::kSon:
    case Relation::kDaughter:
    case Relation::kBrother:
    case Relation::kSister:
    case Relation::kHusband:
    case Relation::kWife:
      return true;
    default:
      return false;
  }
}

std::string_view Article(std::string_view word) {
  return std::string_view("aeiou").find(word.front()) != std::string_view::npos
             ? "an"
             : "a";
}

Relation Gendered(Gender g, Relation male, Relation female) {
  return g == Gender::kMale ? male : female;
}

int AddPerson(Genealogy& g, Gender gender) {
  Person p;
  p.gender = gender;
  g.people.push_back(std::move(p));
  return static_cast<int>(g.people.size()) - 1;
}

void Marry(Genealogy& g, int a, int b) {
  g.people[a].spouse = b;
  g.people[b].spouse = a;
}

std::mt19937_64 ExampleRng(std::uint64_t seed, int stream, int level,
                           int index) {
  return MakeRng({seed, static_cast<std::uint64_t>(stream),
                  static_cast<std::uint64_t>(level),
                  static_cast<std::uint64_t>(index)});
}

Gender RandomGender(std::mt19937_64& rng) {
  return std::bernoulli_distribution(0.5)(rng) ? Gender::kMale
                                               : Gender::kFemale;
}

struct Step {
  int person;
  Relation relation;  // previous person -> this person
};

// Randomised depth-first search for a walk of `level` edges over distinct
// people whose composition fold stays defined at every prefix.
class WalkSearch {
 public:
  WalkSearch(const Genealogy& g, std::mt19937_64& rng)
      : g_(g), rng_(rng), used_(g.people.size(), false) {}

  bool run(int start, int level, std::vector<Step>& out,
           Relation& folded) {
    out.clear();
    used_.assign(g_.people.size(), false);
    used_[start] = true;
    expansions_ = 0;
    return extend(start, level, std::nullopt, out, folded);
  }

 private:
  bool extend(int at, int remaining, std::optional<Relation> acc,
              std::vector<Step>& out, Relation& folded) {
    if (remaining == 0) {
      folded = *acc;
      return true;
    }
    if (++expansions_ > kWalkExpansionBudget) return false;
    const RelationSchema& schema = RelationSchema::Default();
    auto options = Relatives(g_, at);
    std::shuffle(options.begin(), options.end(), rng_);
    for (const auto& [next, rel] : options) {
      if (used_[next]) continue;
      std::optional<Relation> next_acc =
          acc ? schema.compose(*acc, rel) : std::optional(rel);
      if (!next_acc) continue;
      used_[next] = true;
      out.push_back({next, rel});
      if (extend(next, remaining - 1, next_acc, out, folded)) return true;
      out.pop_back();
      used_[next] = false;
      if (expansions_ > kWalkExpansionBudget) return false;
    }
    return false;
  }

  const Genealogy& g_;
  std::mt19937_64& rng_;
  std::vector<bool> used_;
  int expansions_ = 0;
};

template <typename T>
const T& Pick(const std::vector<T>& items, std::mt19937_64& rng) {
  return items[std::uniform_int_distribution<std::size_t>(
      0, items.size() - 1)(rng)];
}

// Names for the walk nodes, or nullopt when the pool cannot satisfy the
// genders and endpoint blocks.
std::optional<std::vector<std::string>> AssignNames(
    const std::vector<Gender>& genders, const NamePool& pool,
    EndpointBlocks blocks, std::mt19937_64& rng) {
  const std::size_t n = genders.size();
  std::vector<std::string> names(n);
  std::set<std::string, std::less<>> used;

  auto candidates = [&](Gender g, int block) {
    std::vector<std::string> out;
    for (const std::string& name : pool.names(g)) {
      if (used.contains(name)) continue;
      if (block >= 0 && pool.block_of(name) != block) continue;
      out.push_back(name);
    }
    return out;
  };

  auto first = candidates(genders.front(), -1);
  if (first.empty()) return std::nullopt;
  names.front() = Pick(first, rng);
  used.insert(names.front());

  int last_block = -1;
  if (blocks != EndpointBlocks::kAny) {
    const int b = pool.block_of(names.front());
    last_block = blocks == EndpointBlocks::kSame ? b : 1 - b;
  }
  auto last = candidates(genders.back(), last_block);
  if (last.empty()) return std::nullopt;
  names.back() = Pick(last, rng);
  used.insert(names.back());

  for (std::size_t i = 1; i + 1 < n; ++i) {
    auto rest = candidates(genders[i], -1);
    if (rest.empty()) return std::nullopt;
    names[i] = Pick(rest, rng);
    used.insert(names[i]);
  }
  return names;
}

}  // namespace

// ---------------------------------------------------------------- NamePool

const NamePool& NamePool::Default() {
  static const NamePool pool = Parse(detail::kNamesTsv);
  return pool;
}

NamePool NamePool::Parse(std::string_view tsv) {
  NamePool pool;
  std::istringstream in{std::string(tsv)};
  std::set<std::string> seen;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw KinshipError("names line " + std::to_string(lineno) +
                         ": expected name<TAB>gender");
    }
    std::string name = line.substr(0, tab);
    const auto gender = ParseGender(line.substr(tab + 1));
    if (name.empty() || !gender ||
        name.find_first_of(" \t") != std::string::npos) {
      throw KinshipError("names line " + std::to_string(lineno) +
                         ": malformed entry");
    }
    if (!seen.insert(name).second) {
      throw KinshipError("duplicate name " + name);
    }
    (*gender == Gender::kMale ? pool.male_ : pool.female_)
        .push_back(std::move(name));
  }
  std::sort(pool.male_.begin(), pool.male_.end());
  std::sort(pool.female_.begin(), pool.female_.end());
  pool.reindex();
  return pool;
}

void NamePool::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < male_.size(); ++i) {
    index_[male_[i]] = {Gender::kMale, static_cast<int>(i % 2)};
  }
  for (std::size_t i = 0; i < female_.size(); ++i) {
    index_[female_[i]] = {Gender::kFemale, static_cast<int>(i % 2)};
  }
}

std::span<const std::string> NamePool::names(Gender g) const {
  return g == Gender::kMale ? male_ : female_;
}

std::optional<Gender> NamePool::gender_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second.first;
}

int NamePool::block_of(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second.second;
}

std::size_t NamePool::size() const { return male_.size() + female_.size(); }

NamePool NamePool::truncated(std::size_t per_gender) const {
  NamePool out = *this;
  if (per_gender == 0) return out;
  if (out.male_.size() > per_gender) out.male_.resize(per_gender);
  if (out.female_.size() > per_gender) out.female_.resize(per_gender);
  out.reindex();
  return out;
}

// --------------------------------------------------------------- Genealogy

Genealogy SampleGenealogy(std::mt19937_64& rng, const GenealogyShape& shape) {
  if (shape.generations < 1 || shape.min_children < 1 ||
      shape.max_children < shape.min_children) {
    throw std::invalid_argument("invalid genealogy shape");
  }
  Genealogy g;
  std::bernoulli_distribution marries(shape.marriage_rate);
  std::bernoulli_distribution brings_parents(shape.in_law_parents_rate);
  std::uniform_int_distribution<int> kids(shape.min_children,
                                          shape.max_children);

  const int founder = AddPerson(g, Gender::kMale);
  Marry(g, founder, AddPerson(g, Gender::kFemale));
  std::vector<int> couples{founder};  // one male partner per couple

  for (int gen = 1; gen < shape.generations; ++gen) {
    std::vector<int> next;
    for (int husband : couples) {
      const int wife = g.people[husband].spouse;
      const int count = kids(rng);
      for (int c = 0; c < count; ++c) {
        const int child = AddPerson(g, RandomGender(rng));
        g.people[child].father = husband;
        g.people[child].mother = wife;
        g.people[husband].children.push_back(child);
        g.people[wife].children.push_back(child);
        if (!marries(rng)) continue;
        const Gender own = g.people[child].gender;
        const int spouse = AddPerson(
            g, own == Gender::kMale ? Gender::kFemale : Gender::kMale);
        Marry(g, child, spouse);
        if (brings_parents(rng)) {
          const int f = AddPerson(g, Gender::kMale);
          const int m = AddPerson(g, Gender::kFemale);
          Marry(g, f, m);
          g.people[spouse].father = f;
          g.people[spouse].mother = m;
          g.people[f].children.push_back(spouse);
          g.people[m].children.push_back(spouse);
        }
        next.push_back(own == Gender::kMale ? child : spouse);
      }
    }
    couples = std::move(next);
  }
  return g;
}

std::vector<std::pair<int, Relation>> Relatives(const Genealogy& g, int p) {
  using R = Relation;
  std::vector<std::pair<int, Relation>> out;
  const auto& people = g.people;
  auto gender = [&](int q) { return people[q].gender; };
  auto add = [&](int q, R male, R female) {
    if (q >= 0 && q != p) out.emplace_back(q, Gendered(gender(q), male, female));
  };
  auto parents = [&](int q) {
    std::vector<int> v;
    if (people[q].father >= 0) v.push_back(people[q].father);
    if (people[q].mother >= 0) v.push_back(people[q].mother);
    return v;
  };
  auto siblings = [&](int q) {
    std::vector<int> v;
    if (people[q].father < 0) return v;
    for (int s : people[people[q].father].children) {
      if (s != q) v.push_back(s);
    }
    return v;
  };

  const Person& me = people[p];
  add(me.father, R::kFather, R::kMother);
  add(me.mother, R::kFather, R::kMother);
  for (int c : me.children) add(c, R::kSon, R::kDaughter);
  for (int s : siblings(p)) add(s, R::kBrother, R::kSister);
  add(me.spouse, R::kHusband, R::kWife);
  for (int par : parents(p)) {
    for (int gp : parents(par)) add(gp, R::kGrandfather, R::kGrandmother);
    for (int u : siblings(par)) add(u, R::kUncle, R::kAunt);
  }
  for (int c : me.children) {
    for (int gc : people[c].children) add(gc, R::kGrandson, R::kGranddaughter);
    add(people[c].spouse, R::kSonInLaw, R::kDaughterInLaw);
  }
  for (int s : siblings(p)) {
    for (int n : people[s].children) add(n, R::kNephew, R::kNiece);
  }
  if (me.spouse >= 0) {
    for (int pil : parents(me.spouse)) {
      add(pil, R::kFatherInLaw, R::kMotherInLaw);
    }
  }
  return out;
}

// ------------------------------------------------------------- FamilyGraph

int FamilyGraph::find(std::string_view name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void ValidateGraph(const FamilyGraph& graph) {
  const RelationSchema& schema = RelationSchema::Default();
  const int n = static_cast<int>(graph.nodes.size());
  if (n == 0) throw std::invalid_argument("empty family graph");
  std::set<std::string> names;
  for (const FamilyNode& node : graph.nodes) {
    if (node.name.empty() || !names.insert(node.name).second) {
      throw std::invalid_argument("family node names must be unique: " +
                                  node.name);
    }
  }
  if (static_cast<int>(graph.edges.size()) != n - 1) {
    throw std::invalid_argument("family graph must have nodes - 1 edges");
  }
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (const FamilyEdge& e : graph.edges) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n ||
        e.from == e.to) {
      throw std::invalid_argument("family edge endpoint out of range");
    }
    if (graph.nodes[e.to].gender != schema.target_gender(e.relation) ||
        !schema.inverse(e.relation, graph.nodes[e.from].gender)) {
      throw std::invalid_argument("gender-inconsistent edge " +
                                  graph.nodes[e.from].name + " -" +
                                  std::string(schema.name(e.relation)) +
                                  "-> " + graph.nodes[e.to].name);
    }
    const int a = find(e.from), b = find(e.to);
    if (a == b) throw std::invalid_argument("family graph has a cycle");
    root[a] = b;
  }
}

std::optional<Relation> DeriveRelation(const FamilyGraph& graph, int e1,
                                       int e2, const RelationSchema& schema) {
  const int n = static_cast<int>(graph.nodes.size());
  if (e1 < 0 || e1 >= n || e2 < 0 || e2 >= n || e1 == e2) {
    throw std::invalid_argument("query endpoints must be distinct nodes");
  }
  // adjacency: (neighbour, edge index)
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const FamilyEdge& e = graph.edges[i];
    adj[e.from].emplace_back(e.to, static_cast<int>(i));
    adj[e.to].emplace_back(e.from, static_cast<int>(i));
  }
  std::vector<int> via(n, -1), prev(n, -1);
  std::queue<int> frontier;
  frontier.push(e1);
  prev[e1] = e1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (auto [w, edge] : adj[u]) {
      if (prev[w] != -1) continue;
      prev[w] = u;
      via[w] = edge;
      frontier.push(w);
    }
  }
  if (prev[e2] == -1) throw std::invalid_argument("no path between e1 and e2");

  std::vector<int> path{e2};
  while (path.back() != e1) path.push_back(prev[path.back()]);
  std::reverse(path.begin(), path.end());

  std::optional<Relation> acc;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const int u = path[i], w = path[i + 1];
    const FamilyEdge& e = graph.edges[via[w]];
    std::optional<Relation> step =
        e.from == u ? std::optional(e.relation)
                    : schema.inverse(e.relation, graph.nodes[w].gender);
    if (!step) return std::nullopt;
    acc = acc ? schema.compose(*acc, *step) : step;
    if (!acc) return std::nullopt;
  }
  return acc;
}

// ---------------------------------------------------------------- Examples

Triple KinshipExample::gold_triple() const {
  return Triple{graph.nodes[e1].name, gold, graph.nodes[e2].name};
}

KinshipExample SampleExample(int level, const NamePool& pool,
                             std::mt19937_64& rng, EndpointBlocks blocks) {
  if (level < 2) {
    throw std::invalid_argument("kinship level must be at least 2, got " +
                                std::to_string(level));
  }
  if (pool.size() < static_cast<std::size_t>(level) + 1) {
    throw KinshipError("name pool has " + std::to_string(pool.size()) +
                       " names, level " + std::to_string(level) + " needs " +
                       std::to_string(level + 1));
  }
  for (int attempt = 0; attempt < kSampleBudget; ++attempt) {
    Genealogy g = SampleGenealogy(rng);
    const int start = std::uniform_int_distribution<int>(
        0, static_cast<int>(g.people.size()) - 1)(rng);
    WalkSearch search(g, rng);
    std::vector<Step> steps;
    Relation folded{};
    if (!search.run(start, level, steps, folded)) continue;

    std::vector<int> members{start};
    for (const Step& s : steps) members.push_back(s.person);
    std::vector<Gender> genders;
    for (int m : members) genders.push_back(g.people[m].gender);
    auto names = AssignNames(genders, pool, blocks, rng);
    if (!names) continue;

    KinshipExample ex;
    for (std::size_t i = 0; i < members.size(); ++i) {
      ex.graph.nodes.push_back({(*names)[i], genders[i]});
    }
    for (int i = 0; i < level; ++i) {
      ex.graph.edges.push_back({i, i + 1, steps[i].relation});
    }
    ex.e1 = 0;
    ex.e2 = level;
    ex.gold = folded;
    ex.edge_order.resize(level);
    std::iota(ex.edge_order.begin(), ex.edge_order.end(), 0);
    std::shuffle(ex.edge_order.begin(), ex.edge_order.end(), rng);
    std::uniform_int_distribution<int> edge_tpl(0, kEdgeTemplateCount - 1);
    for (int i = 0; i < level; ++i) ex.edge_templates.push_back(edge_tpl(rng));
    ex.question_template =
        std::uniform_int_distribution<int>(0, kQuestionTemplateCount - 1)(rng);
    ex.genealogy = std::move(g);
    ex.members = std::move(members);
    return ex;
  }
  throw KinshipError("kinship sampling budget exhausted at level " +
                     std::to_string(level));
}

// --------------------------------------------------------------- Rendering

std::string RenderEdge(const FamilyGraph& graph, const FamilyEdge& edge,
                       int template_id) {
  const std::string& a = graph.nodes.at(edge.from).name;
  const std::string& b = graph.nodes.at(edge.to).name;
  const std::string r(RelationSchema::Default().name(edge.relation));
  const std::string art(Article(r));
  switch (template_id) {
    case 0:
      return b + " is " + a + " 's " + r + " .";
    case 1:
      return b + " is " + art + " " + r + " to " + a + " .";
    case 2:
      return a + " has " + art + " " + r + " called " + b + " .";
    case 3:
      return b + " is the " + r + " of " + a + " .";
    default:
      throw std::invalid_argument("unknown edge template " +
                                  std::to_string(template_id));
  }
}

std::string RenderAnswer(const Triple& t) {
  const std::string r(RelationSchema::Default().name(t.rel));
  if (IsBasic(t.rel)) {
    return "answer : " + t.e1 + " has a " + r + " named " + t.e2 + " .";
  }
  return "answer : " + t.e2 + " is the " + r + " of " + t.e1 + " .";
}

std::string RenderInput(const KinshipExample& ex) {
  const std::string& e1 = ex.graph.nodes.at(ex.e1).name;
  const std::string& e2 = ex.graph.nodes.at(ex.e2).name;
  std::string out = ex.question_template == 0
                        ? "question : How is " + e1 + " related to " + e2 +
                              " ?"
                        : "question : What is the family connection between " +
                              e1 + " and " + e2 + " ?";
  out += " context :";
  for (int i : ex.edge_order) {
    out += ' ';
    out += RenderEdge(ex.graph, ex.graph.edges.at(i), ex.edge_templates.at(i));
  }
  return out;
}

std::pair<std::string, std::string> Render(const KinshipExample& ex) {
  return {RenderInput(ex), RenderAnswer(ex.gold_triple())};
}

std::optional<Triple> ExtractTriple(std::string_view generated) {
  const RelationSchema& schema = RelationSchema::Default();
  std::vector<std::string> tokens = Tokenize(generated);
  std::size_t begin = 0;
  if (tokens.size() >= 2 && tokens[0] == "answer" && tokens[1] == ":") {
    begin = 2;
  }
  auto stop = std::find(tokens.begin() + begin, tokens.end(), ".");
  std::vector<std::string> s(tokens.begin() + begin, stop);
  if (s.size() != 6) return std::nullopt;

  if (s[1] == "has" && s[2] == "a" && s[4] == "named") {
    auto rel = schema.parse(s[3]);
    if (rel && IsBasic(*rel)) return Triple{s[0], *rel, s[5]};
  }
  if (s[1] == "is" && s[2] == "the" && s[4] == "of") {
    auto rel = schema.parse(s[3]);
    if (rel && !IsBasic(*rel)) return Triple{s[5], *rel, s[0]};
  }
  return std::nullopt;
}

bool ScoreKinship(const Triple& pred, const Triple& gold,
                  std::optional<Gender> e1_gender,
                  const RelationSchema& schema) {
  if (pred == gold) return true;
  if (pred.e1 != gold.e2 || pred.e2 != gold.e1) return false;
  if (e1_gender) return schema.inverse(gold.rel, *e1_gender) == pred.rel;
  const auto all = schema.inverses(gold.rel);
  return std::find(all.begin(), all.end(), pred.rel) != all.end();
}

// ------------------------------------------------------------------ Splits

std::string_view LevelRegime(int level, std::span<const int> train_levels) {
  if (std::find(train_levels.begin(), train_levels.end(), level) !=
      train_levels.end()) {
    return "seen";
  }
  const auto [lo, hi] =
      std::minmax_element(train_levels.begin(), train_levels.end());
  if (lo != train_levels.end() && level > *lo && level < *hi) {
    return "interpolation";
  }
  return "extrapolation";
}

Record ToRecord(const KinshipExample& ex, std::string split) {
  Record r;
  r.task = Task::kKinship;
  std::tie(r.input, r.target) = Render(ex);
  r.split = std::move(split);
  r.bucket = ex.graph.level();
  r.gold = ex.gold_triple();
  r.e1_gender = ex.e1_gender();
  return r;
}

Splits BuildSplits(const SplitConfig& config, const NamePool& full_pool) {
  auto check_levels = [](const std::vector<int>& levels, const char* what) {
    if (levels.empty()) {
      throw std::invalid_argument(std::string(what) + " levels are empty");
    }
    for (int l : levels) {
      if (l < 2) {
        throw std::invalid_argument(std::string(what) +
                                    " levels must be at least 2");
      }
    }
  };
  check_levels(config.train_levels, "train");
  check_levels(config.test_levels, "test");
  if (config.train_per_level < 1 || config.test_per_level < 1) {
    throw std::invalid_argument("per-level counts must be positive");
  }
  if (!(config.valid_fraction >= 0.0 && config.valid_fraction < 1.0)) {
    throw std::invalid_argument("valid_fraction must lie in [0, 1)");
  }

  const NamePool pool = full_pool.truncated(config.names_per_gender);
  const EndpointBlocks train_blocks =
      config.partition_names ? EndpointBlocks::kSame : EndpointBlocks::kAny;
  const EndpointBlocks test_blocks =
      config.partition_names ? EndpointBlocks::kCross : EndpointBlocks::kAny;

  Splits out;
  std::vector<Record> train;
  for (int level : config.train_levels) {
    for (int i = 0; i < config.train_per_level; ++i) {
      auto rng = ExampleRng(config.seed, 0, level, i);
      train.push_back(
          ToRecord(SampleExample(level, pool, rng, train_blocks), "train"));
    }
  }
  auto shuffle_rng = ExampleRng(config.seed, 2, 0, 0);
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

  std::set<Triple> seen;
  for (const auto* part : {&out.train, &out.valid}) {
    for (const Record& r : *part) seen.insert(*r.gold);
  }
  std::size_t total = 0, shared = 0;
  for (int level : config.test_levels) {
    auto& bucket = out.test[level];
    for (int i = 0; i < config.test_per_level; ++i) {
      auto rng = ExampleRng(config.seed, 1, level, i);
      bucket.push_back(
          ToRecord(SampleExample(level, pool, rng, test_blocks), "test"));
      ++total;
      shared += seen.contains(*bucket.back().gold) ? 1 : 0;
    }
  }
  out.overlap = total == 0 ? 0.0
                           : static_cast<double>(shared) /
                                 static_cast<double>(total);
  if (out.overlap > config.overlap_ceiling) {
    std::ostringstream msg;
    msg << "test/train triple overlap " << out.overlap
        << " exceeds the ceiling " << config.overlap_ceiling;
    throw KinshipError(msg.str());
  }
  return out;
}

}  // namespace abslab::kinship
