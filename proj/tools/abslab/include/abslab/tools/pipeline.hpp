// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// The five commands of the abslab tool as library calls.
//
// Layout under paths.data_dir:
//   train.jsonl  valid.jsonl  test/<bucket>.jsonl  manifest.json
// Under paths.checkpoint_dir/<task>_<strategy>:
//   vocab.txt  model.ckpt  train_log.csv
// Under paths.report_dir:
//   <task>_<strategy>.json  <task>_<strategy>.txt

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "abslab/checks/suites.hpp"
#include "abslab/dataset.hpp"
#include "abslab/harness.hpp"
#include "abslab/tools/config.hpp"

namespace abslab::tools {

struct Dataset {
  std::vector<Record> train;
  std::vector<Record> valid;
  std::map<int, std::vector<Record>> test;
};

// File name of a test bucket, e.g. "level_3.jsonl" or "depth_0.jsonl".
std::string BucketFile(Task task, int bucket);

std::filesystem::path RunDir(const RunConfig& config);
std::filesystem::path ReportStem(const RunConfig& config);

struct GenerateSummary {
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> files;
};

// Writes the splits and manifest.json; the output is a pure function of the
// configuration.
GenerateSummary CmdGenerate(const RunConfig& config, std::ostream& log);

// Reads what CmdGenerate wrote; throws on missing or malformed files.
Dataset LoadDataset(const RunConfig& config);

struct TrainSummary {
  std::filesystem::path run_dir;
  harness::TrainResult result;
  std::size_t parameters = 0;
};

TrainSummary CmdTrain(const RunConfig& config, std::ostream& log);

harness::EvalReport CmdEval(const RunConfig& config, std::ostream& log);

// Merges reports (files, or directories scanned for *.json) into one
// comparison table per task, strategies in canonical order.
std::string CmdReport(const std::vector<std::filesystem::path>& inputs);

std::vector<checks::CheckResult> CmdCheck(const RunConfig& config,
                                          std::ostream& log);

}  // namespace abslab::tools
