// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/abstraction.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>

#include "abslab/kinship.hpp"
#include "abslab/rules.hpp"

namespace abslab {

namespace {

std::vector<std::string> Split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = s.find(sep, begin);
    out.emplace_back(s.substr(begin, pos - begin));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return out;
}

int ParseIndex(std::string_view s) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw TagFileError("bad span index '" + std::string(s) + "'");
  }
  return value;
}

std::string Surface(std::span<const std::string> tokens, int start, int end) {
  return JoinTokens(tokens.subspan(start, end - start));
}

}  // namespace

void ValidateSpans(std::span<const EntitySpan> spans, std::size_t length,
                   const TagSchema& schema) {
  std::vector<const EntitySpan*> sorted;
  for (const EntitySpan& s : spans) {
    if (s.start < 0 || s.start >= s.end ||
        static_cast<std::size_t>(s.end) > length) {
      throw std::invalid_argument("entity span [" + std::to_string(s.start) +
                                  ", " + std::to_string(s.end) +
                                  ") outside sequence of length " +
                                  std::to_string(length));
    }
    if (schema.type_index(s.type) < 0) {
      throw std::invalid_argument("entity type '" + s.type +
                                  "' is not in the tag schema");
    }
    sorted.push_back(&s);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->start < b->start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->start < sorted[i - 1]->end) {
      throw std::invalid_argument("entity spans overlap");
    }
  }
}

void Abstract(AbstractedExample& ex, std::span<const EntitySpan> spans,
              const Vocabulary& vocab, std::mt19937_64& rng,
              const AbstractionOptions& options) {
  const TagSchema& schema = vocab.schema();
  ValidateSpans(spans, ex.x.size(), schema);

  // Distinct surfaces per type, in order of first appearance.
  std::vector<std::vector<std::string>> distinct(schema.entity_types.size());
  std::vector<const EntitySpan*> ordered;
  for (const EntitySpan& s : spans) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](auto* a, auto* b) { return a->start < b->start; });
  for (const EntitySpan* s : ordered) {
    auto& seen = distinct[schema.type_index(s->type)];
    if (std::find(seen.begin(), seen.end(), s->surface) == seen.end()) {
      seen.push_back(s->surface);
    }
  }

  // Tag number for every (type, surface).
  std::vector<std::map<std::string, int>> number(distinct.size());
  for (std::size_t t = 0; t < distinct.size(); ++t) {
    const std::size_t count = distinct[t].size();
    if (count == 0) continue;
    if (count > static_cast<std::size_t>(schema.n) && !options.collapse_ids) {
      throw CapacityError(std::to_string(count) + " distinct " +
                          schema.entity_types[t] + " entities exceed n = " +
                          std::to_string(schema.n));
    }
    std::vector<int> pool(schema.n);
    std::iota(pool.begin(), pool.end(), 1);
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t i = 0; i < count; ++i) {
      number[t][distinct[t][i]] = pool[i % pool.size()];
    }
  }

  ex.x_s = ex.x;
  for (const EntitySpan* s : ordered) {
    const int t = schema.type_index(s->type);
    const int tag = vocab.tag_id(t, number[t].at(s->surface));
    for (int i = s->start; i < s->end; ++i) ex.x_s[i] = tag;
  }
  ex.mask.assign(ex.x_s.size(), 0);
  for (std::size_t i = 0; i < ex.x_s.size(); ++i) {
    ex.mask[i] = vocab.is_tag(ex.x_s[i]) ? 1 : 0;
  }
}

std::vector<EntitySpan> TagKinship(std::span<const std::string> tokens) {
  const kinship::NamePool& pool = kinship::NamePool::Default();
  std::vector<EntitySpan> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (pool.gender_of(tokens[i])) {
      const int at = static_cast<int>(i);
      out.push_back({at, at + 1, "PERSON", tokens[i]});
    }
  }
  return out;
}

std::vector<EntitySpan> TagRules(std::span<const std::string> tokens) {
  const rules::Grammar& grammar = rules::Grammar::Default();
  std::vector<EntitySpan> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string_view type = grammar.type_of(tokens[i]);
    if (type.empty()) continue;
    // Surface identity is case-insensitive on the first letter so that a
    // sentence-initial "Rough" and a later "rough" share one tag.
    std::string surface = tokens[i];
    if (type != "PERSON") surface[0] = static_cast<char>(std::tolower(surface[0]));
    const int at = static_cast<int>(i);
    out.push_back({at, at + 1, std::string(type), std::move(surface)});
  }
  return out;
}

std::vector<EntitySpan> ParseTagLine(std::string_view line,
                                     std::span<const std::string> tokens) {
  std::vector<EntitySpan> out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.empty()) return out;
  for (const std::string& record : Split(line, '\t')) {
    const auto fields = Split(record, ':');
    if (fields.size() != 3 || fields[2].empty()) {
      throw TagFileError("malformed tag record '" + record +
                         "' (expected start:end:TYPE)");
    }
    const int start = ParseIndex(fields[0]);
    const int end = ParseIndex(fields[1]);
    if (start < 0 || start >= end ||
        static_cast<std::size_t>(end) > tokens.size()) {
      throw TagFileError("tag record '" + record + "' is out of range for " +
                         std::to_string(tokens.size()) + " tokens");
    }
    out.push_back({start, end, fields[2], Surface(tokens, start, end)});
  }
  return out;
}

std::vector<std::string> ReadTagFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TagFileError("cannot read tag file " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace abslab
