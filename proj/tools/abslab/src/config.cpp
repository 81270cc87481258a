// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/tools/config.hpp"

#include <array>
#include <charconv>
#include <functional>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace abslab::tools {

namespace {

namespace pt = boost::property_tree;

ConfigMap Flatten(const pt::ptree& tree) {
  ConfigMap out;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      out[name] = node.data();
      continue;
    }
    for (const auto& [key, leaf] : node) out[name + "." + key] = leaf.data();
  }
  return out;
}

template <typename T>
T As(const std::string& key, const std::string& raw) {
  try {
    return boost::lexical_cast<T>(boost::trim_copy(raw));
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("bad value '" + raw + "' for " + key);
  }
}

bool AsBool(const std::string& key, const std::string& raw) {
  const std::string v = boost::to_lower_copy(boost::trim_copy(raw));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean '" + raw + "' for " + key);
}

std::vector<int> AsIntList(const std::string& key, const std::string& raw) {
  std::vector<std::string> parts;
  boost::split(parts, raw, boost::is_any_of(","));
  std::vector<int> out;
  for (const std::string& p : parts) {
    if (boost::trim_copy(p).empty()) continue;
    out.push_back(As<int>(key, p));
  }
  return out;
}

std::string Str(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}
std::string Str(bool v) { return v ? "true" : "false"; }
template <typename T>
std::string Str(const T& v) {
  if constexpr (std::is_integral_v<T>) {
    return std::to_string(v);
  } else {
    return std::string(v);
  }
}
std::string Str(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? "," : "") + std::to_string(v[i]);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string& key, const std::string&)>
      set;
  std::function<std::string(const RunConfig&)> get;
};

// Binds a RunConfig member reachable through `member`.
template <typename T, typename Access>
Field Bind(const char* key, Access member) {
  return Field{
      key,
      [member](RunConfig& c, const std::string& k, const std::string& raw) {
        T& slot = member(c);
        if constexpr (std::is_same_v<T, bool>) {
          slot = AsBool(k, raw);
        } else if constexpr (std::is_same_v<T, std::vector<int>>) {
          slot = AsIntList(k, raw);
        } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
          slot = boost::trim_copy(raw);
        } else {
          slot = As<T>(k, raw);
        }
      },
      [member](const RunConfig& c) {
        T& slot = member(const_cast<RunConfig&>(c));
        if constexpr (std::is_same_v<T, std::filesystem::path>) {
          return slot.string();
        } else {
          return Str(slot);
        }
      }};
}

#define ABSLAB_FIELD(type, key, expr) \
  Bind<type>(key, [](RunConfig& c) -> type& { return c.expr; })

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(Field{
        "run.task",
        [](RunConfig& c, const std::string& k, const std::string& raw) {
          try {
            c.task = ParseTask(boost::trim_copy(raw));
          } catch (const std::exception&) {
            throw ConfigError("bad value '" + raw + "' for " + k +
                              " (kinship | rules)");
          }
        },
        [](const RunConfig& c) { return std::string(TaskName(c.task)); }});
    f.push_back(Field{
        "run.strategy",
        [](RunConfig& c, const std::string& k, const std::string& raw) {
          try {
            c.strategy = model::ParseStrategy(boost::trim_copy(raw));
          } catch (const std::exception&) {
            throw ConfigError("bad value '" + raw + "' for " + k);
          }
        },
        [](const RunConfig& c) {
          return std::string(model::StrategyName(c.strategy));
        }});
    f.push_back(ABSLAB_FIELD(std::uint64_t, "run.seed", seed));
    f.push_back(ABSLAB_FIELD(std::filesystem::path, "paths.data_dir", data_dir));
    f.push_back(ABSLAB_FIELD(std::filesystem::path, "paths.checkpoint_dir",
                             checkpoint_dir));
    f.push_back(
        ABSLAB_FIELD(std::filesystem::path, "paths.report_dir", report_dir));
    f.push_back(ABSLAB_FIELD(int, "tags.n", tags_n));
    f.push_back(ABSLAB_FIELD(bool, "tags.collapse_ids", collapse_ids));

    f.push_back(ABSLAB_FIELD(std::vector<int>, "kinship.train_levels",
                             kinship.train_levels));
    f.push_back(ABSLAB_FIELD(std::vector<int>, "kinship.test_levels",
                             kinship.test_levels));
    f.push_back(ABSLAB_FIELD(int, "kinship.train_per_level",
                             kinship.train_per_level));
    f.push_back(ABSLAB_FIELD(int, "kinship.test_per_level",
                             kinship.test_per_level));
    f.push_back(ABSLAB_FIELD(double, "kinship.valid_fraction",
                             kinship.valid_fraction));
    f.push_back(ABSLAB_FIELD(double, "kinship.overlap_ceiling",
                             kinship.overlap_ceiling));
    f.push_back(ABSLAB_FIELD(bool, "kinship.partition_names",
                             kinship.partition_names));
    f.push_back(ABSLAB_FIELD(std::size_t, "kinship.names_per_gender",
                             kinship.names_per_gender));

    f.push_back(ABSLAB_FIELD(std::vector<int>, "rules.train_depths",
                             rules.train_depths));
    f.push_back(ABSLAB_FIELD(std::vector<int>, "rules.test_depths",
                             rules.test_depths));
    f.push_back(
        ABSLAB_FIELD(int, "rules.train_per_depth", rules.train_per_depth));
    f.push_back(ABSLAB_FIELD(int, "rules.test_per_depth", rules.test_per_depth));
    f.push_back(
        ABSLAB_FIELD(double, "rules.valid_fraction", rules.valid_fraction));
    f.push_back(ABSLAB_FIELD(int, "rules.min_entities",
                             rules.sampling.min_entities));
    f.push_back(ABSLAB_FIELD(int, "rules.max_entities",
                             rules.sampling.max_entities));
    f.push_back(
        ABSLAB_FIELD(int, "rules.min_facts", rules.sampling.min_facts));
    f.push_back(
        ABSLAB_FIELD(int, "rules.max_facts", rules.sampling.max_facts));
    f.push_back(ABSLAB_FIELD(int, "rules.min_distractor_rules",
                             rules.sampling.min_distractor_rules));
    f.push_back(ABSLAB_FIELD(int, "rules.max_distractor_rules",
                             rules.sampling.max_distractor_rules));
    f.push_back(ABSLAB_FIELD(int, "rules.budget", rules.sampling.budget));

    f.push_back(ABSLAB_FIELD(int, "model.e", dims.e));
    f.push_back(ABSLAB_FIELD(int, "model.d", dims.d));
    f.push_back(ABSLAB_FIELD(int, "model.heads", dims.heads));
    f.push_back(ABSLAB_FIELD(int, "model.layers", dims.layers));
    f.push_back(ABSLAB_FIELD(int, "model.ff", dims.ff));
    f.push_back(ABSLAB_FIELD(int, "model.kv", dims.kv));
    f.push_back(ABSLAB_FIELD(int, "model.max_len", dims.max_len));

    f.push_back(ABSLAB_FIELD(int, "train.batch_size", train.batch_size));
    f.push_back(
        ABSLAB_FIELD(double, "train.learning_rate", train.learning_rate));
    f.push_back(ABSLAB_FIELD(double, "train.beta1", train.beta1));
    f.push_back(ABSLAB_FIELD(double, "train.beta2", train.beta2));
    f.push_back(ABSLAB_FIELD(double, "train.epsilon", train.epsilon));
    f.push_back(ABSLAB_FIELD(double, "train.weight_decay", train.weight_decay));
    f.push_back(ABSLAB_FIELD(double, "train.clip_norm", train.clip_norm));
    f.push_back(ABSLAB_FIELD(int, "train.patience", train.patience));
    f.push_back(ABSLAB_FIELD(int, "train.max_epochs", train.max_epochs));
    f.push_back(ABSLAB_FIELD(double, "train.dropout", train.dropout));
    f.push_back(ABSLAB_FIELD(bool, "train.freeze_tags", train.freeze_tags));
    f.push_back(ABSLAB_FIELD(double, "train.time_budget_seconds",
                             train.time_budget_seconds));

    f.push_back(Field{
        "eval.decode",
        [](RunConfig& c, const std::string& k, const std::string& raw) {
          const std::string v = boost::trim_copy(raw);
          if (v == "greedy") {
            c.eval.decode = model::DecodeMode::kGreedy;
          } else if (v == "top-p") {
            c.eval.decode = model::DecodeMode::kTopP;
          } else {
            throw ConfigError("bad value '" + raw + "' for " + k +
                              " (greedy | top-p)");
          }
        },
        [](const RunConfig& c) {
          return std::string(c.eval.decode == model::DecodeMode::kGreedy
                                 ? "greedy"
                                 : "top-p");
        }});
    f.push_back(ABSLAB_FIELD(double, "eval.top_p", eval.top_p));
    f.push_back(ABSLAB_FIELD(double, "eval.temperature", eval.temperature));
    f.push_back(ABSLAB_FIELD(int, "eval.max_new", eval.max_new));
    f.push_back(ABSLAB_FIELD(int, "eval.max_per_bucket", eval.max_per_bucket));
    return f;
  }();
  return fields;
}

#undef ABSLAB_FIELD

}  // namespace

ConfigMap ReadConfigFile(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return Flatten(tree);
}

ConfigMap ParseConfigText(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return Flatten(tree);
}

void ApplyOverrides(ConfigMap& map, const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& arg = args[i];
    if (!arg.starts_with("--") || arg.size() == 2) {
      throw ConfigError("unexpected argument '" + arg + "'");
    }
    const std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      map[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (i + 1 >= args.size()) throw ConfigError("missing value for " + arg);
    map[body] = args[++i];
  }
}

int RunConfig::tag_count() const {
  if (tags_n > 0) return tags_n;
  return task == Task::kKinship ? 20 : 10;
}

RunConfig ToRunConfig(const ConfigMap& map) {
  RunConfig config;
  bool has_seed = false;
  for (const auto& [key, raw] : map) {
    const Field* field = nullptr;
    for (const Field& f : Fields()) {
      if (key == f.key) field = &f;
    }
    if (field == nullptr) throw ConfigError("unknown config key '" + key + "'");
    field->set(config, key, raw);
    has_seed = has_seed || key == "run.seed";
  }
  if (!has_seed) throw ConfigError("run.seed is required");
  config.kinship.seed = config.seed;
  config.rules.seed = config.seed;
  config.train.seed = config.seed;
  if (config.tags_n < 0) throw ConfigError("tags.n must be positive");
  try {
    model::ModelDims dims = config.dims;
    dims.v = 1;
    dims.validate();
    config.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (config.eval.max_new <= 0) throw ConfigError("eval.max_new must be > 0");
  if (config.eval.max_per_bucket < 0) {
    throw ConfigError("eval.max_per_bucket must be >= 0");
  }
  return config;
}

std::vector<std::pair<std::string, std::string>> Describe(
    const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : Fields()) out.emplace_back(f.key, f.get(config));
  return out;
}

}  // namespace abslab::tools
