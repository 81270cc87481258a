// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset records shared by both generators and the training harness, plus
// their JSONL encoding.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "abslab/relations.hpp"

namespace abslab {

enum class Task { kKinship, kRules };

std::string_view TaskName(Task task);
Task ParseTask(std::string_view name);  // throws std::invalid_argument

// (e1, rel, e2): e2 is e1's rel.
struct Triple {
  std::string e1;
  Relation rel = Relation::kFather;
  std::string e2;

  bool operator==(const Triple&) const = default;
  auto operator<=>(const Triple&) const = default;
};

struct Record {
  Task task = Task::kKinship;
  std::string input;
  std::string target;
  std::string split;
  // Kinship level or rules depth folder.
  int bucket = 0;

  // Kinship gold.
  std::optional<Triple> gold;
  std::optional<Gender> e1_gender;

  // Rules gold: True / False / Unknown, proof depth (absent for Unknown) and
  // one abstraction type per input token ("O" for untagged tokens).
  std::string label;
  std::optional<int> proof_depth;
  std::vector<std::string> gold_tags;

  bool operator==(const Record&) const = default;
};

// One compact JSON object per line, keys in a fixed order.
std::string ToJsonLine(const Record& record);
Record FromJsonLine(std::string_view line);

void WriteJsonl(const std::filesystem::path& path,
                const std::vector<Record>& records);
std::vector<Record> ReadJsonl(const std::filesystem::path& path);

}  // namespace abslab
