// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "abslab/kinship.hpp"
#include "abslab/numkit/tensor.hpp"
#include "abslab/random.hpp"
#include "json.hpp"

namespace abslab::harness {

namespace {

// Stream ids for MakeRng.
enum Stream : std::uint64_t {
  kShuffle = 1,
  kTrainTags = 2,
  kDropout = 3,
  kLossTags = 4,
  kEvalTags = 5,
  kEvalSample = 6,
};

std::string NormalizedSurface(std::string_view token, std::string_view type) {
  std::string s(token);
  if (type != "PERSON" && !s.empty()) {
    s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  }
  return s;
}

std::vector<EntitySpan> SpansFromTags(std::span<const std::string> tokens,
                                      std::span<const std::string> tags) {
  std::vector<EntitySpan> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tags[i] == "O") continue;
    const int at = static_cast<int>(i);
    out.push_back({at, at + 1, tags[i], NormalizedSurface(tokens[i], tags[i])});
  }
  return out;
}

std::string Percent(double x) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1) << 100.0 * x;
  return out.str();
}

std::string BucketHeader(Task task) {
  return task == Task::kKinship ? "level" : "depth";
}

}  // namespace

TagSchema SchemaFor(Task task, int n) {
  TagSchema schema;
  schema.n = n;
  if (task == Task::kKinship) {
    schema.entity_types = {"PERSON"};
  } else {
    schema.entity_types = {"PERSON", "ATTRIBUTE", "ANIMAL", "RELATION"};
  }
  schema.validate();
  return schema;
}

std::vector<EntitySpan> GoldSpans(Task task,
                                  std::span<const std::string> tokens) {
  return task == Task::kKinship ? TagKinship(tokens) : TagRules(tokens);
}

Vocabulary BuildVocabulary(std::span<const Record* const> records,
                           const TagSchema& schema,
                           model::Strategy strategy) {
  std::vector<std::string> corpus;
  for (const Record* r : records) {
    for (std::string& t : Tokenize(r->input)) corpus.push_back(std::move(t));
    for (std::string& t : Tokenize(r->target)) corpus.push_back(std::move(t));
  }
  return Vocabulary::Build(corpus, schema,
                           strategy == model::Strategy::kEmbCat);
}

// -------------------------------------------------------------- ExampleSet

ExampleSet::ExampleSet(std::span<const Record> records,
                       const Vocabulary& vocab, AbstractionOptions options)
    : vocab_(vocab), options_(options) {
  items_.reserve(records.size());
  for (const Record& r : records) {
    const std::vector<std::string> tokens = Tokenize(r.input);
    Item item{&r, vocab.encode(std::span<const std::string>(tokens)),
              vocab.encode(r.target), {}};
    if (r.task == Task::kRules && r.gold_tags.size() == tokens.size()) {
      item.spans = SpansFromTags(tokens, r.gold_tags);
    } else {
      item.spans = GoldSpans(r.task, tokens);
    }
    if (item.y.empty()) {
      throw std::invalid_argument("record with empty target: " + r.input);
    }
    items_.push_back(std::move(item));
  }
}

std::size_t ExampleSet::max_input_length() const {
  std::size_t n = 0;
  for (const Item& it : items_) n = std::max(n, it.x.size());
  return n;
}

std::size_t ExampleSet::max_target_length() const {
  std::size_t n = 0;
  for (const Item& it : items_) n = std::max(n, it.y.size());
  return n;
}

AbstractedExample ExampleSet::materialize(std::size_t i,
                                          std::mt19937_64& rng) const {
  const Item& item = items_.at(i);
  AbstractedExample ex;
  ex.x = item.x;
  ex.y = item.y;
  Abstract(ex, item.spans, vocab_, rng, options_);
  return ex;
}

// ---------------------------------------------------------------- Training

void TrainConfig::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0)) {
      throw std::invalid_argument(std::string(name) + " must be positive");
    }
  };
  positive(batch_size, "batch_size");
  positive(learning_rate, "learning_rate");
  positive(epsilon, "epsilon");
  positive(clip_norm, "clip_norm");
  positive(max_epochs, "max_epochs");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("betas must lie in [0, 1)");
  }
  if (weight_decay < 0.0 || time_budget_seconds < 0.0) {
    throw std::invalid_argument("weight_decay and time budget must be >= 0");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("dropout must lie in [0, 1)");
  }
}

AdamW::AdamW(const model::Model& model, const TrainConfig& config)
    : config_(config) {
  for (const model::Param& p : model.params()) {
    m_.emplace_back(p.value.size(), 0.0);
    v_.emplace_back(p.value.size(), 0.0);
  }
}

void AdamW::step(model::Model& model, const model::Gradients& grads) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate;
  auto& params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* w = params[i].value.raw();
    const std::vector<double>& g = grads.g[i];
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double update =
          (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.epsilon);
      w[j] -= lr * (update + config_.weight_decay * w[j]);
    }
  }
}

double ClipGradients(model::Gradients& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

double MeanLoss(const model::Model& model, const ExampleSet& set,
                std::uint64_t seed) {
  if (set.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto rng = MakeRng({seed, kLossTags, i});
    const AbstractedExample ex = set.materialize(i, rng);
    nk::Tape tape(/*record_grads=*/false);
    model::Pass pass(model, tape, nullptr);
    total += pass.loss(ex).total.value()[0];
  }
  return total / static_cast<double>(set.size());
}

TrainResult Train(model::Model& model, const ExampleSet& train,
                  const ExampleSet& valid, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train.size() == 0 || valid.size() == 0) {
    throw std::invalid_argument("training needs non-empty train and valid sets");
  }
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  const bool dec_loss = model.strategy() == model::Strategy::kDecLoss;

  AdamW optimizer(model, config);
  model::Gradients grads = model.make_gradients();
  std::vector<nk::Tensor> best;
  for (const model::Param& p : model.params()) best.push_back(p.value);

  TrainResult result;
  result.best_valid_loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    auto shuffle_rng = MakeRng({config.seed, kShuffle,
                                static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sum_total = 0.0, sum_abs = 0.0, sum_lm = 0.0;

    for (std::size_t begin = 0; begin < order.size();
         begin += config.batch_size) {
      const std::size_t end =
          std::min(order.size(), begin + config.batch_size);
      grads.zero();
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t idx = order[b];
        const std::uint64_t tag_epoch =
            config.freeze_tags ? 0 : static_cast<std::uint64_t>(epoch);
        auto tag_rng = MakeRng({config.seed, kTrainTags, tag_epoch, idx});
        const AbstractedExample ex = train.materialize(idx, tag_rng);
        auto drop_rng = MakeRng({config.seed, kDropout,
                                 static_cast<std::uint64_t>(epoch), idx});
        nk::Tape tape;
        model::Pass pass(model, tape, &grads,
                         {true, config.dropout, &drop_rng});
        try {
          const model::LossParts parts = pass.loss(ex);
          tape.backward(parts.total);
          sum_total += parts.total.value()[0];
          sum_lm += parts.lm;
          sum_abs += parts.abs.value_or(0.0);
        } catch (const nk::NonFiniteError& e) {
          throw TrainingError("non-finite value at epoch " +
                              std::to_string(epoch) + ", example " +
                              std::to_string(idx) + ": " + e.what());
        }
      }
      grads.scale(1.0 / static_cast<double>(end - begin));
      if (!std::isfinite(grads.squared_norm())) {
        throw TrainingError("non-finite gradient at epoch " +
                            std::to_string(epoch));
      }
      ClipGradients(grads, config.clip_norm);
      optimizer.step(model, grads);
    }

    EpochLog entry;
    entry.epoch = epoch;
    const double n = static_cast<double>(train.size());
    entry.train_loss = sum_total / n;
    if (dec_loss) {
      entry.abs_loss = sum_abs / n;
      entry.lm_loss = sum_lm / n;
    }
    entry.valid_loss = MeanLoss(model, valid, config.seed);
    if (!std::isfinite(entry.valid_loss)) {
      throw TrainingError("non-finite validation loss at epoch " +
                          std::to_string(epoch));
    }
    entry.seconds =
        std::chrono::duration<double>(Clock::now() - epoch_start).count();
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (entry.valid_loss < result.best_valid_loss) {
      result.best_valid_loss = entry.valid_loss;
      result.best_epoch = epoch;
      for (std::size_t i = 0; i < best.size(); ++i) {
        best[i] = model.params()[i].value;
      }
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.early_stopped = true;
      break;
    }
    const double elapsed =
        std::chrono::duration<double>(Clock::now() - started).count();
    if (config.time_budget_seconds > 0 &&
        elapsed >= config.time_budget_seconds) {
      result.budget_stopped = true;
      break;
    }
  }
  for (std::size_t i = 0; i < best.size(); ++i) {
    auto src = best[i].data();
    std::copy(src.begin(), src.end(), model.params()[i].value.data().begin());
  }
  return result;
}

void WriteTrainLog(const std::filesystem::path& path,
                   std::span<const EpochLog> log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,valid_loss,abs_loss,lm_loss\n";
  out << std::setprecision(17);
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << e.train_loss << ',' << e.valid_loss << ',';
    if (e.abs_loss) out << *e.abs_loss;
    out << ',';
    if (e.lm_loss) out << *e.lm_loss;
    out << '\n';
  }
}

// ----------------------------------------------------------------- Scoring

std::string_view OutcomeName(Outcome o) {
  switch (o) {
    case Outcome::kCorrect:
      return "correct";
    case Outcome::kExtractionFailed:
      return "extraction-failed";
    case Outcome::kWrongTriple:
      return "wrong-triple";
    case Outcome::kWrongLabel:
      return "wrong-label";
  }
  return "unknown";
}

std::optional<std::string> ParseRulesAnswer(std::string_view generated) {
  const std::vector<std::string> tokens = Tokenize(generated);
  if (tokens.size() < 3 || tokens[0] != "answer" || tokens[1] != ":" ||
      tokens[2] == ".") {
    return std::nullopt;
  }
  return tokens[2];
}

bool ScoreRules(std::string_view generated, std::string_view gold_label) {
  const auto label = ParseRulesAnswer(generated);
  return label && *label == gold_label;
}

Outcome Score(const Record& record, std::string_view generated) {
  if (record.task == Task::kKinship) {
    if (!record.gold) throw std::invalid_argument("kinship record lacks gold");
    const auto triple = kinship::ExtractTriple(generated);
    if (!triple) return Outcome::kExtractionFailed;
    return kinship::ScoreKinship(*triple, *record.gold, record.e1_gender)
               ? Outcome::kCorrect
               : Outcome::kWrongTriple;
  }
  const auto label = ParseRulesAnswer(generated);
  if (!label) return Outcome::kExtractionFailed;
  return *label == record.label ? Outcome::kCorrect : Outcome::kWrongLabel;
}

// -------------------------------------------------------------- Evaluation

EvalReport Evaluate(const model::Model& model, const Vocabulary& vocab,
                    Task task, const std::map<int, std::vector<Record>>& test,
                    const EvalOptions& options) {
  EvalReport report;
  report.task = task;
  report.strategy = std::string(model::StrategyName(model.strategy()));
  for (const auto& [bucket, records] : test) {
    ExampleSet set(records, vocab, options.abstraction);
    BucketStats stats;
    stats.bucket = bucket;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto b = static_cast<std::uint64_t>(bucket);
      auto tag_rng = MakeRng({options.seed, kEvalTags, b, i});
      auto sample_rng = MakeRng({options.seed, kEvalSample, b, i});
      const AbstractedExample ex = set.materialize(i, tag_rng);
      model::DecodeOptions decode = options.decode;
      decode.rng = &sample_rng;
      const std::string text = vocab.decode(model.generate(ex, decode));
      const Outcome outcome = Score(set.record(i), text);
      ++stats.count;
      if (outcome == Outcome::kCorrect) {
        ++stats.correct;
      } else {
        ++stats.failures[std::string(OutcomeName(outcome))];
      }
      report.generations.push_back(text);
    }
    report.total += stats.count;
    report.correct += stats.correct;
    report.buckets.push_back(std::move(stats));
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = TaskName(task);
  j["strategy"] = strategy;
  j["total"] = total;
  j["correct"] = correct;
  j["aggregate"] = aggregate();
  auto& buckets_json = j["buckets"] = nlohmann::ordered_json::array();
  for (const BucketStats& b : buckets) {
    nlohmann::ordered_json failures = nlohmann::ordered_json::object();
    for (const auto& [k, v] : b.failures) failures[k] = v;
    buckets_json.push_back({{"bucket", b.bucket},
                            {"count", b.count},
                            {"correct", b.correct},
                            {"accuracy", b.accuracy()},
                            {"failures", failures}});
  }
  j["generations"] = generations;
  return j.dump(2);
}

EvalReport EvalReport::FromJson(std::string_view text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  EvalReport r;
  r.task = ParseTask(j.at("task").get<std::string>());
  r.strategy = j.at("strategy").get<std::string>();
  r.total = j.at("total").get<std::size_t>();
  r.correct = j.at("correct").get<std::size_t>();
  for (const auto& b : j.at("buckets")) {
    BucketStats s;
    s.bucket = b.at("bucket").get<int>();
    s.count = b.at("count").get<std::size_t>();
    s.correct = b.at("correct").get<std::size_t>();
    s.failures =
        b.at("failures").get<std::map<std::string, std::size_t>>();
    r.buckets.push_back(std::move(s));
  }
  r.generations = j.value("generations", std::vector<std::string>{});
  return r;
}

std::string EvalReport::table() const {
  return ComparisonTable(std::span<const EvalReport>(this, 1));
}

std::string ComparisonTable(std::span<const EvalReport> reports) {
  if (reports.empty()) return "";
  std::set<int> buckets;
  for (const EvalReport& r : reports) {
    for (const BucketStats& b : r.buckets) buckets.insert(b.bucket);
  }
  std::size_t name_width = BucketHeader(reports[0].task).size();
  for (const EvalReport& r : reports) {
    name_width = std::max(name_width, r.strategy.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width))
      << BucketHeader(reports[0].task) << std::right;
  for (int b : buckets) out << std::setw(7) << b;
  out << std::setw(7) << "avg" << '\n';
  for (const EvalReport& r : reports) {
    out << std::left << std::setw(static_cast<int>(name_width)) << r.strategy
        << std::right;
    for (int b : buckets) {
      auto it = std::find_if(r.buckets.begin(), r.buckets.end(),
                             [&](const BucketStats& s) { return s.bucket == b; });
      out << std::setw(7) << (it == r.buckets.end() ? "-" : Percent(it->accuracy()));
    }
    out << std::setw(7) << Percent(r.aggregate()) << '\n';
  }
  return out.str();
}

}  // namespace abslab::harness
