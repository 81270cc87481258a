// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: an INI file flattened to "section.key" entries, with
// command-line overrides applied on top.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "abslab/dataset.hpp"
#include "abslab/harness.hpp"
#include "abslab/kinship.hpp"
#include "abslab/model.hpp"
#include "abslab/rules.hpp"

namespace abslab::tools {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "section.key" -> raw value. Keys outside any section keep their bare name.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap ReadConfigFile(const std::filesystem::path& path);
ConfigMap ParseConfigText(const std::string& text);

// Applies "--key value" and "--key=value" pairs; throws ConfigError on a
// dangling flag or a bare argument.
void ApplyOverrides(ConfigMap& map, const std::vector<std::string>& args);

struct EvalSettings {
  model::DecodeMode decode = model::DecodeMode::kGreedy;
  double top_p = 0.9;
  double temperature = 1.0;
  int max_new = 32;
  int max_per_bucket = 0;  // 0: the whole bucket
};

struct RunConfig {
  Task task = Task::kKinship;
  model::Strategy strategy = model::Strategy::kBaseline;
  std::uint64_t seed = 0;

  std::filesystem::path data_dir = "data";
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path report_dir = "reports";

  int tags_n = 0;  // 0: 20 for kinship, 10 for rules
  bool collapse_ids = false;

  kinship::SplitConfig kinship;
  rules::SplitConfig rules;
  model::ModelDims dims;
  harness::TrainConfig train;
  EvalSettings eval;

  int tag_count() const;
  AbstractionOptions abstraction() const {
    return AbstractionOptions{collapse_ids};
  }
};

// Builds a validated RunConfig; throws ConfigError on unknown keys, bad
// values or a missing run.seed.
RunConfig ToRunConfig(const ConfigMap& map);

// Every recognised key with its current value, in canonical order.
std::vector<std::pair<std::string, std::string>> Describe(
    const RunConfig& config);

}  // namespace abslab::tools
