// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <unistd.h>

#include "abslab/tools/config.hpp"
#include "abslab/tools/pipeline.hpp"

namespace abslab::tools {
namespace {

namespace fs = std::filesystem;

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() /
              (name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

RunConfig Small(Task task, const fs::path& root, std::uint64_t seed = 7) {
  ConfigMap map = ParseConfigText(
      "[run]\n"
      "task = " + std::string(TaskName(task)) + "\n"
      "seed = " + std::to_string(seed) + "\n"
      "[kinship]\n"
      "train_levels = 2\n"
      "train_per_level = 40\n"
      "test_per_level = 3\n"
      "[rules]\n"
      "train_per_depth = 15\n"
      "test_per_depth = 3\n");
  map["paths.data_dir"] = (root / "data").string();
  map["paths.checkpoint_dir"] = (root / "ckpt").string();
  map["paths.report_dir"] = (root / "reports").string();
  return ToRunConfig(map);
}

TEST(ConfigTest, ParsesSectionsAndDefaults) {
  const RunConfig c = ToRunConfig(ParseConfigText(
      "[run]\ntask = rules\nstrategy = enc-cat\nseed = 11\n"
      "[model]\nlayers = 3\n[train]\nlearning_rate = 0.01\n"
      "[eval]\ndecode = top-p\ntop_p = 0.8\n"));
  EXPECT_EQ(c.task, Task::kRules);
  EXPECT_EQ(c.strategy, model::Strategy::kEncCat);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.rules.seed, 11u);
  EXPECT_EQ(c.train.seed, 11u);
  EXPECT_EQ(c.dims.layers, 3);
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.01);
  EXPECT_EQ(c.eval.decode, model::DecodeMode::kTopP);
  EXPECT_DOUBLE_EQ(c.eval.top_p, 0.8);
  EXPECT_EQ(c.tag_count(), 10);
  EXPECT_EQ(c.kinship.test_levels, (std::vector<int>{2, 3, 4, 5, 6, 7, 8, 9, 10}));
}

TEST(ConfigTest, KinshipDefaultsToTwentyTags) {
  const RunConfig c = ToRunConfig(ParseConfigText("[run]\nseed = 1\n"));
  EXPECT_EQ(c.task, Task::kKinship);
  EXPECT_EQ(c.tag_count(), 20);
}

TEST(ConfigTest, OverridesTakePrecedence) {
  ConfigMap map = ParseConfigText("[run]\nseed = 1\nstrategy = baseline\n");
  ApplyOverrides(map, {"--run.strategy", "dec-loss", "--run.seed=9",
                       "--kinship.test_levels", "2,5"});
  const RunConfig c = ToRunConfig(map);
  EXPECT_EQ(c.strategy, model::Strategy::kDecLoss);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.kinship.test_levels, (std::vector<int>{2, 5}));
  EXPECT_THROW(ApplyOverrides(map, {"--run.seed"}), ConfigError);
  EXPECT_THROW(ApplyOverrides(map, {"run.seed", "3"}), ConfigError);
}

TEST(ConfigTest, RejectsBadInput) {
  EXPECT_THROW(ToRunConfig(ParseConfigText("[run]\ntask = kinship\n")),
               ConfigError);
  EXPECT_THROW(ToRunConfig(ParseConfigText("[run]\nseed = 1\nsede = 2\n")),
               ConfigError);
  EXPECT_THROW(ToRunConfig(ParseConfigText("[run]\nseed = x\n")), ConfigError);
  EXPECT_THROW(
      ToRunConfig(ParseConfigText("[run]\nseed = 1\nstrategy = emb-mul\n")),
      ConfigError);
  EXPECT_THROW(ToRunConfig(ParseConfigText("[run]\nseed = 1\n[model]\nkv = 3\n")),
               ConfigError);
  EXPECT_THROW(ReadConfigFile("/nonexistent/abslab.ini"), ConfigError);
}

TEST(ConfigTest, DescribeRoundTrips) {
  const RunConfig c = Small(Task::kRules, "/tmp/x", 5);
  ConfigMap map;
  for (const auto& [k, v] : Describe(c)) map[k] = v;
  EXPECT_EQ(Describe(ToRunConfig(map)), Describe(c));
}

TEST(GenerateTest, KinshipLayoutAndDeterminism) {
  TempDir a("abslab_gen_a"), b("abslab_gen_b");
  std::ostringstream log;
  const GenerateSummary sa = CmdGenerate(Small(Task::kKinship, a.path()), log);
  CmdGenerate(Small(Task::kKinship, b.path()), log);
  std::set<std::string> tests;
  for (const auto& e : fs::directory_iterator(a.path() / "data" / "test")) {
    tests.insert(e.path().filename().string());
  }
  EXPECT_EQ(tests.size(), 9u);
  EXPECT_TRUE(tests.count("level_10.jsonl"));
  EXPECT_TRUE(fs::exists(sa.manifest));
  for (const fs::path& f : sa.files) {
    const fs::path rel = fs::relative(f, a.path());
    EXPECT_EQ(ReadFile(f), ReadFile(b.path() / rel)) << rel;
  }
  const Dataset d = LoadDataset(Small(Task::kKinship, a.path()));
  EXPECT_EQ(d.train.size() + d.valid.size(), 40u);
  EXPECT_EQ(d.valid.size(), 4u);
  EXPECT_EQ(d.test.size(), 9u);
  for (const auto& [level, rs] : d.test) EXPECT_EQ(rs.size(), 3u);
}

TEST(GenerateTest, RulesDepthFolders) {
  TempDir a("abslab_gen_rules");
  std::ostringstream log;
  CmdGenerate(Small(Task::kRules, a.path()), log);
  for (int depth = 0; depth <= 5; ++depth) {
    EXPECT_TRUE(fs::exists(a.path() / "data" / "test" /
                           BucketFile(Task::kRules, depth)));
  }
  EXPECT_THROW(LoadDataset(Small(Task::kKinship, a.path())),
               std::runtime_error);
}

TEST(GenerateTest, SeedChangesData) {
  TempDir a("abslab_seed_a"), b("abslab_seed_b");
  std::ostringstream log;
  CmdGenerate(Small(Task::kRules, a.path(), 1), log);
  CmdGenerate(Small(Task::kRules, b.path(), 2), log);
  EXPECT_NE(ReadFile(a.path() / "data" / "train.jsonl"),
            ReadFile(b.path() / "data" / "train.jsonl"));
}

TEST(PipelineTest, TrainEvalReport) {
  TempDir dir("abslab_pipeline");
  std::ostringstream log;
  RunConfig c = Small(Task::kRules, dir.path());
  c.dims.e = c.dims.d = 16;
  c.dims.heads = 2;
  c.dims.kv = 8;
  c.dims.layers = 1;
  c.dims.ff = 32;
  c.train.max_epochs = 1;
  c.eval.max_new = 4;
  c.eval.max_per_bucket = 2;
  CmdGenerate(c, log);
  for (model::Strategy s : {model::Strategy::kEncCat, model::Strategy::kBaseline}) {
    c.strategy = s;
    const TrainSummary t = CmdTrain(c, log);
    EXPECT_TRUE(fs::exists(t.run_dir / "model.ckpt"));
    EXPECT_TRUE(fs::exists(t.run_dir / "vocab.txt"));
    EXPECT_TRUE(fs::exists(t.run_dir / "train_log.csv"));
    const harness::EvalReport r = CmdEval(c, log);
    EXPECT_EQ(r.total, 12u);
    EXPECT_TRUE(fs::exists(ReportStem(c).string() + ".json"));
  }
  const std::string table = CmdReport({dir.path() / "reports"});
  EXPECT_EQ(table.find("task: rules"), 0u);
  EXPECT_LT(table.find("baseline"), table.find("enc-cat"));
  EXPECT_THROW(CmdReport({dir.path() / "reports",
                          ReportStem(c).string() + ".json"}),
               std::runtime_error);
  EXPECT_THROW(CmdReport({dir.path() / "missing"}), std::runtime_error);
}

#ifdef ABSLAB_CLI_PATH
int RunCli(const std::string& args) {
  const std::string cmd =
      std::string(ABSLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, ExitCodes) {
  TempDir dir("abslab_cli");
  const fs::path ini = dir.path() / "run.ini";
  {
    std::ofstream out(ini);
    out << "[run]\ntask = rules\nseed = 3\n[paths]\ndata_dir = "
        << (dir.path() / "data").string()
        << "\n[rules]\ntrain_per_depth = 5\ntest_per_depth = 2\n";
  }
  EXPECT_EQ(RunCli("generate -c " + ini.string()), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "data" / "manifest.json"));
  EXPECT_EQ(RunCli("generate -c " + ini.string() + " --run.bogus 1"), 1);
  EXPECT_EQ(RunCli("generate"), 1);
  EXPECT_EQ(RunCli("eval -c " + ini.string() + " --paths.checkpoint_dir " +
                   (dir.path() / "none").string()),
            1);
  EXPECT_EQ(RunCli("report " + (dir.path() / "none").string()), 1);
  EXPECT_NE(RunCli(""), 0);
}
#endif

}  // namespace
}  // namespace abslab::tools
