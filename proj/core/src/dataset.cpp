// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace abslab {

using nlohmann::ordered_json;

std::string_view TaskName(Task task) {
  return task == Task::kKinship ? "kinship" : "rules";
}

Task ParseTask(std::string_view name) {
  if (name == "kinship") return Task::kKinship;
  if (name == "rules") return Task::kRules;
  throw std::invalid_argument("unknown task '" + std::string(name) +
                              "' (expected kinship or rules)");
}

std::string ToJsonLine(const Record& record) {
  const RelationSchema& schema = RelationSchema::Default();
  ordered_json j;
  j["task"] = TaskName(record.task);
  j["input"] = record.input;
  j["target"] = record.target;
  if (record.task == Task::kKinship) {
    j["level"] = record.bucket;
    ordered_json gold;
    if (record.gold) {
      gold["e1"] = record.gold->e1;
      gold["rel"] = schema.name(record.gold->rel);
      gold["e2"] = record.gold->e2;
    }
    if (record.e1_gender) gold["e1_gender"] = GenderName(*record.e1_gender);
    j["gold"] = std::move(gold);
  } else {
    j["depth"] = record.bucket;
    j["proof_depth"] = record.proof_depth ? ordered_json(*record.proof_depth)
                                          : ordered_json(nullptr);
    j["label"] = record.label;
    j["gold_tags"] = record.gold_tags;
  }
  j["split"] = record.split;
  return j.dump();
}

Record FromJsonLine(std::string_view line) {
  const RelationSchema& schema = RelationSchema::Default();
  const ordered_json j = ordered_json::parse(line);
  Record r;
  r.task = ParseTask(j.at("task").get<std::string>());
  r.input = j.at("input").get<std::string>();
  r.target = j.at("target").get<std::string>();
  r.split = j.value("split", "");
  if (r.task == Task::kKinship) {
    r.bucket = j.at("level").get<int>();
    const ordered_json& gold = j.at("gold");
    if (gold.contains("rel")) {
      const std::string rel = gold.at("rel").get<std::string>();
      auto parsed = schema.parse(rel);
      if (!parsed) throw std::invalid_argument("unknown relation " + rel);
      r.gold = Triple{gold.at("e1").get<std::string>(), *parsed,
                      gold.at("e2").get<std::string>()};
    }
    if (gold.contains("e1_gender")) {
      r.e1_gender = ParseGender(gold.at("e1_gender").get<std::string>());
    }
  } else {
    r.bucket = j.at("depth").get<int>();
    if (j.contains("proof_depth") && !j.at("proof_depth").is_null()) {
      r.proof_depth = j.at("proof_depth").get<int>();
    }
    r.label = j.at("label").get<std::string>();
    r.gold_tags = j.value("gold_tags", std::vector<std::string>{});
  }
  return r;
}

void WriteJsonl(const std::filesystem::path& path,
                const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const Record& r : records) out << ToJsonLine(r) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<Record> ReadJsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<Record> out;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(FromJsonLine(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": " + e.what());
    }
  }
  return out;
}

}  // namespace abslab
