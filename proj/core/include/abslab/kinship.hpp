// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Kinship story generator. A story is a chain of k relation edges over k+1
// named people; the question asks how the two chain ends are related.
//
// Chains are cut out of an explicitly sampled family (parents, spouses,
// children) so every rendered edge is true of a real genealogy. The gold
// answer is the left fold of the composition table along the chain.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abslab/dataset.hpp"
#include "abslab/relations.hpp"

namespace abslab::kinship {

class KinshipError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gendered single-token first names. Each gender list is sorted; the
// position of a name in its list decides its holdout block (index parity).
class NamePool {
 public:
  // The list shipped in core/data/names.tsv.
  static const NamePool& Default();
  // "name<TAB>m|f" lines, '#' comments. Throws KinshipError on bad lines or
  // duplicates.
  static NamePool Parse(std::string_view tsv);

  std::span<const std::string> names(Gender g) const;
  std::optional<Gender> gender_of(std::string_view name) const;
  int block_of(std::string_view name) const;  // 0 or 1, -1 if unknown
  std::size_t size() const;

  // First `per_gender` names of each list (0 keeps everything).
  NamePool truncated(std::size_t per_gender) const;

 private:
  std::vector<std::string> male_, female_;
  std::map<std::string, std::pair<Gender, int>, std::less<>> index_;

  void reindex();
};

struct Person {
  Gender gender = Gender::kMale;
  int father = -1;
  int mother = -1;
  int spouse = -1;
  std::vector<int> children;
};

struct Genealogy {
  std::vector<Person> people;
};

struct GenealogyShape {
  int generations = 4;
  int min_children = 2;
  int max_children = 4;
  double marriage_rate = 0.85;
  // Chance that a spouse marrying in brings their own parents along.
  double in_law_parents_rate = 0.5;
};

Genealogy SampleGenealogy(std::mt19937_64& rng,
                          const GenealogyShape& shape = {});

// Every (q, r) such that q is p's r, for all schema relations.
std::vector<std::pair<int, Relation>> Relatives(const Genealogy& g, int p);

struct FamilyNode {
  std::string name;
  Gender gender = Gender::kMale;
};

// to is from's relation.
struct FamilyEdge {
  int from = 0;
  int to = 0;
  Relation relation = Relation::kFather;
};

struct FamilyGraph {
  std::vector<FamilyNode> nodes;
  std::vector<FamilyEdge> edges;

  int level() const { return static_cast<int>(edges.size()); }
  int find(std::string_view name) const;  // -1 when absent
};

// Throws std::invalid_argument unless the graph is a connected tree with
// unique names and gender-consistent edges.
void ValidateGraph(const FamilyGraph& graph);

// Composition fold along the unique path e1 -> e2; reversed edges contribute
// their gender-specific inverse. nullopt when some step is undefined.
std::optional<Relation> DeriveRelation(
    const FamilyGraph& graph, int e1, int e2,
    const RelationSchema& schema = RelationSchema::Default());

// Which holdout blocks the query endpoints may come from.
enum class EndpointBlocks { kAny, kSame, kCross };

struct KinshipExample {
  FamilyGraph graph;  // chain: edge i joins node i and node i+1
  int e1 = 0;
  int e2 = 0;
  Relation gold = Relation::kFather;
  std::vector<int> edge_order;      // sentence order over graph.edges
  std::vector<int> edge_templates;  // per edge
  int question_template = 0;

  // Sampler provenance, kept for oracle checks.
  Genealogy genealogy;
  std::vector<int> members;  // genealogy person behind each node

  Triple gold_triple() const;
  Gender e1_gender() const { return graph.nodes[e1].gender; }
};

// Throws std::invalid_argument for level < 2 and KinshipError when the pool
// is too small or the sampling budget runs out.
KinshipExample SampleExample(int level, const NamePool& pool,
                             std::mt19937_64& rng,
                             EndpointBlocks blocks = EndpointBlocks::kAny);

inline constexpr int kEdgeTemplateCount = 4;
inline constexpr int kQuestionTemplateCount = 2;

std::string RenderEdge(const FamilyGraph& graph, const FamilyEdge& edge,
                       int template_id);
std::string RenderAnswer(const Triple& triple);
std::string RenderInput(const KinshipExample& example);
std::pair<std::string, std::string> Render(const KinshipExample& example);

// Inverse of RenderAnswer over the closed answer-template set. Parses the
// first sentence (up to the first "." token); a leading "answer :" is
// optional. nullopt when nothing matches.
std::optional<Triple> ExtractTriple(std::string_view generated);

// True iff pred is gold or (gold.e2, inv, gold.e1) for an inverse compatible
// with e1's gender (every inverse when the gender is unknown).
bool ScoreKinship(const Triple& pred, const Triple& gold,
                  std::optional<Gender> e1_gender,
                  const RelationSchema& schema = RelationSchema::Default());

struct SplitConfig {
  std::vector<int> train_levels{2, 4, 6};
  std::vector<int> test_levels{2, 3, 4, 5, 6, 7, 8, 9, 10};
  int train_per_level = 1000;
  int test_per_level = 100;
  double valid_fraction = 0.1;
  double overlap_ceiling = 0.10;
  // Train endpoints share a block, test endpoints straddle blocks.
  bool partition_names = true;
  std::size_t names_per_gender = 0;  // 0: whole pool
  std::uint64_t seed = 0;
};

struct Splits {
  std::vector<Record> train;
  std::vector<Record> valid;
  std::map<int, std::vector<Record>> test;  // by level
  // Share of test gold triples that also occur as train/valid gold triples.
  double overlap = 0.0;
};

// "interpolation" / "extrapolation" / "seen" relative to the train levels.
std::string_view LevelRegime(int level, std::span<const int> train_levels);

// Throws KinshipError when the measured overlap exceeds the ceiling.
Splits BuildSplits(const SplitConfig& config,
                   const NamePool& pool = NamePool::Default());

Record ToRecord(const KinshipExample& example, std::string split);

}  // namespace abslab::kinship
