// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Builds the abstracted copy X_s of an input sequence: every tagged entity is
// replaced by a randomly numbered tag of its type (PERSON_7, ANIMAL_2, ...),
// repeated entities reuse their tag, and untagged tokens are copied.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "abslab/vocab.hpp"

namespace abslab {

struct EntitySpan {
  int start = 0;  // token index
  int end = 0;    // exclusive
  std::string type;
  std::string surface;

  bool operator==(const EntitySpan&) const = default;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TagFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AbstractedExample {
  std::vector<int> x;
  std::vector<int> x_s;
  std::vector<int> y;
  // 1 where x_s holds an abstraction tag.
  std::vector<std::uint8_t> mask;
};

struct AbstractionOptions {
  // Reuse tag ids cyclically instead of failing when a type has more than n
  // distinct entities (needed for n = 1 runs).
  bool collapse_ids = false;
};

// Throws std::invalid_argument for out-of-range, empty, overlapping or
// unknown-type spans.
void ValidateSpans(std::span<const EntitySpan> spans, std::size_t length,
                   const TagSchema& schema);

// Fills x_s and mask of `example` from example.x. Tag numbers are drawn
// uniformly without replacement from 1..n per type. Throws CapacityError when
// a type has more distinct surfaces than n (unless collapse_ids is set).
void Abstract(AbstractedExample& example, std::span<const EntitySpan> spans,
              const Vocabulary& vocab, std::mt19937_64& rng,
              const AbstractionOptions& options = {});

// Gold taggers for the two generated tasks: exact lookup in the generator
// lexicons. Tokens are the whitespace tokens of a rendered input.
std::vector<EntitySpan> TagKinship(std::span<const std::string> tokens);
std::vector<EntitySpan> TagRules(std::span<const std::string> tokens);

// Tag-file ingestion for user-supplied corpora. One line per example with
// tab-separated start:end:TYPE records (an empty line means no entities).
std::vector<EntitySpan> ParseTagLine(std::string_view line,
                                     std::span<const std::string> tokens);
std::vector<std::string> ReadTagFile(const std::filesystem::path& path);

}  // namespace abslab
