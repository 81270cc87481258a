// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/tools/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "abslab/checks/suites.hpp"
#include "abslab/kinship.hpp"
#include "abslab/model.hpp"
#include "abslab/rules.hpp"
#include "abslab/vocab.hpp"

namespace abslab::tools {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ordered_json Histogram(const std::vector<Record>& records,
                       auto&& key_of) {
  std::map<std::string, int> counts;
  for (const Record& r : records) ++counts[key_of(r)];
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : counts) j[k] = v;
  return j;
}

std::string DepthKey(const Record& r) {
  return r.proof_depth ? std::to_string(*r.proof_depth) : "none";
}

std::vector<const Record*> AllRecords(const Dataset& data) {
  std::vector<const Record*> out;
  for (const Record& r : data.train) out.push_back(&r);
  for (const Record& r : data.valid) out.push_back(&r);
  for (const auto& [bucket, records] : data.test) {
    for (const Record& r : records) out.push_back(&r);
  }
  return out;
}

}  // namespace

std::string BucketFile(Task task, int bucket) {
  return (task == Task::kKinship ? "level_" : "depth_") +
         std::to_string(bucket) + ".jsonl";
}

fs::path RunDir(const RunConfig& config) {
  return config.checkpoint_dir /
         (std::string(TaskName(config.task)) + "_" +
          std::string(model::StrategyName(config.strategy)));
}

fs::path ReportStem(const RunConfig& config) {
  return config.report_dir /
         (std::string(TaskName(config.task)) + "_" +
          std::string(model::StrategyName(config.strategy)));
}

GenerateSummary CmdGenerate(const RunConfig& config, std::ostream& log) {
  Dataset data;
  ordered_json manifest;
  manifest["task"] = TaskName(config.task);
  manifest["seed"] = config.seed;

  // Keys that determine the generated data.
  const std::string section =
      config.task == Task::kKinship ? "kinship." : "rules.";
  ordered_json cfg = ordered_json::object();
  for (const auto& [key, value] : Describe(config)) {
    if (key.starts_with("run.task") || key.starts_with("run.seed") ||
        key.starts_with(section)) {
      cfg[key] = value;
    }
  }
  manifest["config"] = cfg;

  if (config.task == Task::kKinship) {
    kinship::Splits s = kinship::BuildSplits(config.kinship);
    data = {std::move(s.train), std::move(s.valid), std::move(s.test)};
    manifest["overlap"] = {{"measured", s.overlap},
                           {"ceiling", config.kinship.overlap_ceiling}};
  } else {
    rules::Splits s = rules::BuildSplits(config.rules);
    data = {std::move(s.train), std::move(s.valid), std::move(s.test)};
  }

  GenerateSummary summary;
  const fs::path dir = config.data_dir;
  fs::create_directories(dir / "test");
  auto write = [&](const fs::path& rel, const std::vector<Record>& records) {
    WriteJsonl(dir / rel, records);
    summary.files.push_back(dir / rel);
    log << "wrote " << (dir / rel).string() << " (" << records.size()
        << " records)\n";
  };
  write("train.jsonl", data.train);
  write("valid.jsonl", data.valid);
  ordered_json test_counts = ordered_json::object();
  for (const auto& [bucket, records] : data.test) {
    write(fs::path("test") / BucketFile(config.task, bucket), records);
    test_counts[std::to_string(bucket)] = records.size();
  }
  manifest["counts"] = {{"train", data.train.size()},
                        {"valid", data.valid.size()},
                        {"test", test_counts}};

  ordered_json hist;
  const auto bucket_key = [](const Record& r) {
    return std::to_string(r.bucket);
  };
  std::vector<Record> test_all;
  for (const auto& [bucket, records] : data.test) {
    test_all.insert(test_all.end(), records.begin(), records.end());
  }
  const std::pair<const char*, const std::vector<Record>*> parts[] = {
      {"train", &data.train}, {"valid", &data.valid}, {"test", &test_all}};
  for (const auto& [name, records] : parts) {
    ordered_json h;
    h[config.task == Task::kKinship ? "level" : "depth"] =
        Histogram(*records, bucket_key);
    if (config.task == Task::kRules) {
      h["label"] = Histogram(*records, [](const Record& r) { return r.label; });
      h["proof_depth"] = Histogram(*records, DepthKey);
    } else {
      h["relation"] = Histogram(*records, [](const Record& r) {
        return std::string(RelationSchema::Default().name(r.gold->rel));
      });
    }
    hist[name] = h;
  }
  manifest["histograms"] = hist;

  ordered_json files = ordered_json::array();
  for (const fs::path& f : summary.files) {
    files.push_back(fs::relative(f, dir).generic_string());
  }
  manifest["files"] = files;

  summary.manifest = dir / "manifest.json";
  WriteText(summary.manifest, manifest.dump(2) + "\n");
  log << "wrote " << summary.manifest.string() << "\n";
  return summary;
}

Dataset LoadDataset(const RunConfig& config) {
  const fs::path dir = config.data_dir;
  const ordered_json manifest =
      ordered_json::parse(ReadText(dir / "manifest.json"));
  if (manifest.at("task").get<std::string>() != TaskName(config.task)) {
    throw std::runtime_error("data in " + dir.string() + " is for task " +
                             manifest.at("task").get<std::string>());
  }
  Dataset data;
  data.train = ReadJsonl(dir / "train.jsonl");
  data.valid = ReadJsonl(dir / "valid.jsonl");
  for (const auto& [key, count] : manifest.at("counts").at("test").items()) {
    const int bucket = std::stoi(key);
    data.test[bucket] =
        ReadJsonl(dir / "test" / BucketFile(config.task, bucket));
    if (data.test[bucket].size() != count.get<std::size_t>()) {
      throw std::runtime_error("test bucket " + key +
                               " does not match the manifest count");
    }
  }
  return data;
}

TrainSummary CmdTrain(const RunConfig& config, std::ostream& log) {
  const Dataset data = LoadDataset(config);
  if (data.train.empty() || data.valid.empty()) {
    throw harness::TrainingError("training needs non-empty train and valid");
  }
  const std::vector<const Record*> all = AllRecords(data);
  const Vocabulary vocab = harness::BuildVocabulary(
      all, harness::SchemaFor(config.task, config.tag_count()),
      config.strategy);

  model::ModelDims dims = config.dims;
  dims.v = static_cast<int>(vocab.size());
  const harness::ExampleSet train(data.train, vocab, config.abstraction());
  const harness::ExampleSet valid(data.valid, vocab, config.abstraction());
  const std::size_t longest =
      std::max({train.max_input_length(), valid.max_input_length(),
                train.max_target_length() + 1, valid.max_target_length() + 1});
  if (longest > static_cast<std::size_t>(dims.max_len)) {
    throw harness::TrainingError(
        "sequences of length " + std::to_string(longest) +
        " exceed model.max_len = " + std::to_string(dims.max_len));
  }

  model::Model m(dims, config.strategy, config.seed, vocab.grounded_id());
  m.set_special_ids(vocab.pad_id(), vocab.bos_id(), vocab.eos_id());
  log << TaskName(config.task) << " / " << model::StrategyName(config.strategy)
      << ": " << train.size() << " train, " << valid.size() << " valid, "
      << vocab.size() << " tokens, " << m.param_count() << " parameters\n";

  TrainSummary summary;
  summary.parameters = m.param_count();
  summary.result =
      harness::Train(m, train, valid, config.train, [&](const auto& e) {
        log << "epoch " << e.epoch << " train " << e.train_loss << " valid "
            << e.valid_loss << " (" << e.seconds << " s)\n";
        log.flush();
      });

  summary.run_dir = RunDir(config);
  fs::create_directories(summary.run_dir);
  vocab.save(summary.run_dir / "vocab.txt");
  model::SaveCheckpoint(summary.run_dir / "model.ckpt", m, vocab.hash());
  harness::WriteTrainLog(summary.run_dir / "train_log.csv",
                         summary.result.log);
  log << "best epoch " << summary.result.best_epoch << " (valid "
      << summary.result.best_valid_loss << ")"
      << (summary.result.early_stopped ? ", early stop" : "")
      << (summary.result.budget_stopped ? ", time budget reached" : "")
      << "; wrote " << summary.run_dir.string() << "\n";
  return summary;
}

harness::EvalReport CmdEval(const RunConfig& config, std::ostream& log) {
  const fs::path run = RunDir(config);
  const Vocabulary vocab = Vocabulary::Load(run / "vocab.txt");
  const model::LoadedModel loaded =
      model::LoadCheckpoint(run / "model.ckpt", vocab.hash());
  if (loaded.model.strategy() != config.strategy) {
    throw std::runtime_error("checkpoint strategy does not match run.strategy");
  }
  Dataset data = LoadDataset(config);
  if (config.eval.max_per_bucket > 0) {
    for (auto& [bucket, records] : data.test) {
      if (records.size() > static_cast<std::size_t>(config.eval.max_per_bucket)) {
        records.resize(config.eval.max_per_bucket);
      }
    }
  }

  harness::EvalOptions options;
  options.decode.mode = config.eval.decode;
  options.decode.top_p = config.eval.top_p;
  options.decode.temperature = config.eval.temperature;
  options.decode.max_new = config.eval.max_new;
  options.seed = config.seed;
  options.abstraction = config.abstraction();
  const harness::EvalReport report =
      harness::Evaluate(loaded.model, vocab, config.task, data.test, options);

  const fs::path stem = ReportStem(config);
  WriteText(fs::path(stem).concat(".json"), report.to_json() + "\n");
  WriteText(fs::path(stem).concat(".txt"), report.table());
  log << report.table();
  return report;
}

std::string CmdReport(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const fs::path& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.path().extension() == ".json") found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  if (files.empty()) throw std::runtime_error("no reports to merge");

  std::map<Task, std::map<std::string, harness::EvalReport>> by_task;
  for (const fs::path& f : files) {
    harness::EvalReport r = harness::EvalReport::FromJson(ReadText(f));
    auto& slot = by_task[r.task];
    if (slot.contains(r.strategy)) {
      throw std::runtime_error("two reports for " +
                               std::string(TaskName(r.task)) + " / " +
                               r.strategy);
    }
    slot.emplace(r.strategy, std::move(r));
  }

  std::ostringstream out;
  bool first = true;
  for (const auto& [task, reports] : by_task) {
    std::vector<harness::EvalReport> ordered;
    for (model::Strategy s : model::AllStrategies()) {
      auto it = reports.find(std::string(model::StrategyName(s)));
      if (it != reports.end()) ordered.push_back(it->second);
    }
    if (!first) out << '\n';
    first = false;
    out << "task: " << TaskName(task) << '\n'
        << harness::ComparisonTable(ordered);
  }
  return out.str();
}

std::vector<checks::CheckResult> CmdCheck(const RunConfig& config,
                                          std::ostream& log) {
  std::vector<checks::CheckResult> results = checks::RunAllSuites(config.seed);
  for (const checks::CheckResult& r : results) {
    log << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.seconds
        << " s): " << r.detail << '\n';
  }
  return results;
}

}  // namespace abslab::tools
