// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

namespace abslab {

void TagSchema::validate() const {
  if (n < 1) throw std::invalid_argument("tag schema needs n >= 1");
  std::set<std::string> seen;
  for (const std::string& type : entity_types) {
    if (type.empty()) throw std::invalid_argument("empty entity type name");
    if (!seen.insert(type).second) {
      throw std::invalid_argument("duplicate entity type " + type);
    }
  }
}

int TagSchema::type_index(std::string_view type) const {
  for (std::size_t i = 0; i < entity_types.size(); ++i) {
    if (entity_types[i] == type) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string JoinTokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

void Vocabulary::add(std::string token) {
  const int id = static_cast<int>(tokens_.size());
  if (!index_.emplace(token, id).second) {
    throw std::invalid_argument("duplicate vocabulary entry " + token);
  }
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::Build(std::span<const std::string> corpus,
                             const TagSchema& schema, bool with_grounded) {
  schema.validate();
  Vocabulary vocab;
  vocab.schema_ = schema;
  vocab.add(std::string(kPad));
  vocab.add(std::string(kBos));
  vocab.add(std::string(kEos));
  vocab.add(std::string(kUnk));
  vocab.pad_ = 0;
  vocab.bos_ = 1;
  vocab.eos_ = 2;
  vocab.unk_ = 3;
  if (with_grounded) {
    vocab.grounded_ = static_cast<int>(vocab.tokens_.size());
    vocab.add(std::string(kGrounded));
  }

  std::vector<std::string> tags;
  for (const std::string& type : schema.entity_types) {
    for (int k = 1; k <= schema.n; ++k) tags.push_back(type + "_" + std::to_string(k));
  }
  const std::set<std::string> reserved(tags.begin(), tags.end());
  std::set<std::string> words;
  for (const std::string& tok : corpus) {
    if (vocab.index_.contains(tok) || reserved.contains(tok)) continue;
    words.insert(tok);
  }
  for (const std::string& w : words) vocab.add(w);
  vocab.tag_begin_ = static_cast<int>(vocab.tokens_.size());
  for (std::string& tag : tags) vocab.add(std::move(tag));
  vocab.tag_end_ = static_cast<int>(vocab.tokens_.size());
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary " + path.string());
  for (const std::string& tok : tokens_) out << tok << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read vocabulary " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  if (lines.size() < 4 || lines[0] != kPad || lines[1] != kBos ||
      lines[2] != kEos || lines[3] != kUnk) {
    throw std::runtime_error(path.string() + " is not a vocabulary file");
  }

  // The tag block is the maximal suffix of TYPE_k entries; it determines the
  // schema (types in order of first appearance, n entries each).
  static const std::regex kTag(R"(^([A-Z][A-Z0-9]*)_([0-9]+)$)");
  std::size_t begin = lines.size();
  while (begin > 4 && std::regex_match(lines[begin - 1], kTag)) --begin;
  TagSchema schema;
  std::vector<int> counts;
  for (std::size_t i = begin; i < lines.size(); ++i) {
    std::smatch m;
    std::regex_match(lines[i], m, kTag);
    const std::string type = m[1];
    if (schema.entity_types.empty() || schema.entity_types.back() != type) {
      schema.entity_types.push_back(type);
      counts.push_back(0);
    }
    ++counts.back();
    if (std::stoi(m[2]) != counts.back()) {
      throw std::runtime_error("tag block out of order at " + lines[i]);
    }
  }
  if (!counts.empty()) {
    schema.n = counts.front();
    for (int c : counts) {
      if (c != schema.n) throw std::runtime_error("ragged tag block");
    }
  }

  Vocabulary vocab;
  vocab.schema_ = schema;
  for (std::string& line : lines) vocab.add(std::move(line));
  vocab.pad_ = 0;
  vocab.bos_ = 1;
  vocab.eos_ = 2;
  vocab.unk_ = 3;
  if (auto it = vocab.index_.find(std::string(kGrounded)); it != vocab.index_.end()) {
    vocab.grounded_ = it->second;
  }
  vocab.tag_begin_ = static_cast<int>(begin);
  vocab.tag_end_ = static_cast<int>(vocab.tokens_.size());
  return vocab;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_ : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  return encode(Tokenize(text));
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& tok : tokens) ids.push_back(id(tok));
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += tokens_.at(ids[i]);
  }
  return out;
}

int Vocabulary::tag_id(int type_index, int k) const {
  if (type_index < 0 ||
      type_index >= static_cast<int>(schema_.entity_types.size()) || k < 1 ||
      k > schema_.n) {
    throw std::out_of_range("tag index out of range");
  }
  return tag_begin_ + type_index * schema_.n + (k - 1);
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const std::string& tok : tokens_) {
    for (unsigned char c : tok) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace abslab
