// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Word-level vocabulary with a contiguous block of abstraction tags
// (TYPE_1 .. TYPE_n for every entity type) and optional <grounded> token.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace abslab {

struct TagSchema {
  std::vector<std::string> entity_types;
  int n = 1;  // tags per type

  // Throws std::invalid_argument on n < 1 or duplicate type names.
  void validate() const;
  int type_index(std::string_view type) const;  // -1 when unknown
  std::size_t tag_count() const { return entity_types.size() * n; }
};

// Splits on runs of whitespace.
std::vector<std::string> Tokenize(std::string_view text);
std::string JoinTokens(std::span<const std::string> tokens);

class Vocabulary {
 public:
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::string_view kBos = "<bos>";
  static constexpr std::string_view kEos = "<eos>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr std::string_view kGrounded = "<grounded>";

  // Specials first (pad, bos, eos, unk, then <grounded> when requested),
  // sorted distinct corpus tokens next, tags last in schema order.
  static Vocabulary Build(std::span<const std::string> corpus,
                          const TagSchema& schema, bool with_grounded);

  // Line-per-token file; the id of a token is its zero-based line number.
  void save(const std::filesystem::path& path) const;
  static Vocabulary Load(const std::filesystem::path& path);

  std::size_t size() const { return tokens_.size(); }
  int pad_id() const { return pad_; }
  int bos_id() const { return bos_; }
  int eos_id() const { return eos_; }
  int unk_id() const { return unk_; }
  std::optional<int> grounded_id() const { return grounded_; }

  int id(std::string_view token) const;  // unk id when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(id); }

  std::vector<int> encode(std::string_view text) const;
  std::vector<int> encode(std::span<const std::string> tokens) const;
  std::string decode(std::span<const int> ids) const;

  const TagSchema& schema() const { return schema_; }
  // Tag block occupies ids [tag_begin, tag_end).
  int tag_begin() const { return tag_begin_; }
  int tag_end() const { return tag_end_; }
  bool is_tag(int id) const { return id >= tag_begin_ && id < tag_end_; }
  // Id of tag TYPE_k (1-based k).
  int tag_id(int type_index, int k) const;

  // FNV-1a over the serialised token list.
  std::uint64_t hash() const;

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  TagSchema schema_;
  int pad_ = -1, bos_ = -1, eos_ = -1, unk_ = -1;
  std::optional<int> grounded_;
  int tag_begin_ = 0, tag_end_ = 0;
};

}  // namespace abslab
