// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training loop with early stopping and the evaluation/scoring pipeline.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abslab/abstraction.hpp"
#include "abslab/dataset.hpp"
#include "abslab/model.hpp"
#include "abslab/vocab.hpp"

namespace abslab::harness {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Entity types of each task.
TagSchema SchemaFor(Task task, int n);

// Gold entity spans of a generated input.
std::vector<EntitySpan> GoldSpans(Task task,
                                  std::span<const std::string> tokens);

// Vocabulary over every input and target of `records`, with the tag block of
// `schema` and <grounded> for emb-cat.
Vocabulary BuildVocabulary(std::span<const Record* const> records,
                           const TagSchema& schema, model::Strategy strategy);

// Encoded examples whose X_s is redrawn on demand.
class ExampleSet {
 public:
  ExampleSet(std::span<const Record> records, const Vocabulary& vocab,
             AbstractionOptions options = {});

  std::size_t size() const { return items_.size(); }
  const Record& record(std::size_t i) const { return *items_[i].record; }
  std::size_t max_input_length() const;
  std::size_t max_target_length() const;

  // x, y plus an X_s drawn with `rng`.
  AbstractedExample materialize(std::size_t i, std::mt19937_64& rng) const;

 private:
  struct Item {
    const Record* record;
    std::vector<int> x, y;
    std::vector<EntitySpan> spans;
  };
  const Vocabulary& vocab_;
  AbstractionOptions options_;
  std::vector<Item> items_;
};

struct TrainConfig {
  int batch_size = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  double clip_norm = 1.0;
  int patience = 10;
  int max_epochs = 100;
  double dropout = 0.1;
  // Draw tags once per example instead of once per epoch.
  bool freeze_tags = false;
  // Stop after the epoch that crosses this many seconds (0: no limit).
  double time_budget_seconds = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// Adaptive-moment optimizer with decoupled weight decay.
class AdamW {
 public:
  AdamW(const model::Model& model, const TrainConfig& config);
  void step(model::Model& model, const model::Gradients& grads);
  long steps() const { return t_; }

 private:
  TrainConfig config_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

// Global-norm clipping; returns the norm before clipping.
double ClipGradients(model::Gradients& grads, double max_norm);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  std::optional<double> abs_loss;  // train means of the dec-loss terms
  std::optional<double> lm_loss;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_valid_loss = 0.0;
  bool early_stopped = false;
  bool budget_stopped = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Trains in place and leaves the best-validation parameters in `model`.
TrainResult Train(model::Model& model, const ExampleSet& train,
                  const ExampleSet& valid, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Mean loss over a set without dropout; X_s drawn from fixed streams.
double MeanLoss(const model::Model& model, const ExampleSet& set,
                std::uint64_t seed);

void WriteTrainLog(const std::filesystem::path& path,
                   std::span<const EpochLog> log);

// -------------------------------------------------------------- Scoring

enum class Outcome { kCorrect, kExtractionFailed, kWrongTriple, kWrongLabel };
std::string_view OutcomeName(Outcome o);

// Label after "answer :" in the first sentence, if any.
std::optional<std::string> ParseRulesAnswer(std::string_view generated);
bool ScoreRules(std::string_view generated, std::string_view gold_label);

Outcome Score(const Record& record, std::string_view generated);

struct BucketStats {
  int bucket = 0;
  std::size_t count = 0;
  std::size_t correct = 0;
  std::map<std::string, std::size_t> failures;

  double accuracy() const {
    return count == 0 ? 0.0 : static_cast<double>(correct) / count;
  }
};

struct EvalReport {
  Task task = Task::kKinship;
  std::string strategy;
  std::vector<BucketStats> buckets;  // ascending bucket
  std::size_t total = 0;
  std::size_t correct = 0;
  std::vector<std::string> generations;  // in bucket, then record order

  // Correct / total, i.e. the count-weighted mean of bucket accuracies.
  double aggregate() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / total;
  }
  std::string to_json() const;
  static EvalReport FromJson(std::string_view text);
  // Aligned text table: one row, one column per bucket plus the aggregate.
  std::string table() const;
};

struct EvalOptions {
  model::DecodeOptions decode;
  std::uint64_t seed = 0;  // abstraction draws and top-p sampling
  AbstractionOptions abstraction;
};

EvalReport Evaluate(const model::Model& model, const Vocabulary& vocab,
                    Task task, const std::map<int, std::vector<Record>>& test,
                    const EvalOptions& options);

// Strategies as rows, buckets as columns.
std::string ComparisonTable(std::span<const EvalReport> reports);

}  // namespace abslab::harness
