// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance [--full] [--only 1,4,10] [--out DIR] [--seed N]
//
// Criterion 9 is report-only. Without --full it trains on a reduced budget;
// with --full every run uses the criterion 8 budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "CLI11.hpp"
#include "abslab/checks/suites.hpp"
#include "abslab/tools/config.hpp"
#include "abslab/tools/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using abslab::checks::CheckResult;
using abslab::tools::RunConfig;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double CpuSeconds() {
  return static_cast<double>(std::clock()) / CLOCKS_PER_SEC;
}

std::string Fixed(double x, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

Outcome FromSuite(const CheckResult& r) { return {r.passed, r.detail}; }

Outcome WithinCpu(Outcome o, double cpu, double limit) {
  o.detail += "; " + Fixed(cpu, 1) + " s CPU (limit " + Fixed(limit, 0) + ")";
  o.passed = o.passed && cpu < limit;
  return o;
}

std::uint64_t Fnv1a(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Relative path -> hash of every regular file below `root`.
std::map<std::string, std::uint64_t> HashTree(const fs::path& root) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      out[fs::relative(e.path(), root).string()] = Fnv1a(e.path());
    }
  }
  return out;
}

int RunCli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(ABSLAB_CLI_PATH) + " " + args + " >>" +
                          log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ------------------------------------------------------------ Training runs

struct Budget {
  int train_per_level;  // before the validation carve-out
  int test_per_level;
  int max_epochs;
  double learning_rate;
  double time_budget_seconds;
};

// 5000 train examples after the 10% validation carve-out.
constexpr Budget kSanityBudget{5556, 200, 15, 1e-3, 1500.0};
constexpr Budget kReducedBudget{3334, 100, 12, 1e-3, 420.0};
// Plumbing check only; accuracies are meaningless at this size.
constexpr Budget kQuickBudget{60, 4, 1, 1e-3, 60.0};

std::string Describe(const Budget& b) {
  return std::to_string(b.train_per_level -
                        std::llround(0.1 * b.train_per_level)) +
         " train examples, up to " + std::to_string(b.max_epochs) +
         " epochs, lr " + Fixed(b.learning_rate, 4) + ", " +
         Fixed(b.time_budget_seconds, 0) + " s cap per run";
}

RunConfig KinshipRun(const fs::path& root, std::uint64_t seed,
                     const std::string& strategy,
                     const std::vector<int>& test_levels, const Budget& b) {
  std::string levels;
  for (int l : test_levels) levels += (levels.empty() ? "" : ",") + std::to_string(l);
  abslab::tools::ConfigMap map = abslab::tools::ParseConfigText(
      "[run]\ntask = kinship\n"
      "strategy = " + strategy + "\n"
      "seed = " + std::to_string(seed) + "\n"
      "[kinship]\ntrain_levels = 2\n"
      "test_levels = " + levels + "\n"
      "train_per_level = " + std::to_string(b.train_per_level) + "\n"
      "test_per_level = " + std::to_string(b.test_per_level) + "\n"
      "[model]\nlayers = 2\ne = 64\nd = 64\n"
      "[train]\n"
      "max_epochs = " + std::to_string(b.max_epochs) + "\n"
      "learning_rate = " + Fixed(b.learning_rate, 6) + "\n"
      "time_budget_seconds = " + Fixed(b.time_budget_seconds, 0) + "\n");
  map["paths.data_dir"] = (root / "data").string();
  map["paths.checkpoint_dir"] = (root / "checkpoints").string();
  map["paths.report_dir"] = (root / "reports").string();
  return abslab::tools::ToRunConfig(map);
}

abslab::harness::EvalReport TrainAndEval(const RunConfig& config,
                                         std::ostream& log) {
  abslab::tools::CmdTrain(config, log);
  return abslab::tools::CmdEval(config, log);
}

double BucketAccuracy(const abslab::harness::EvalReport& r, int bucket) {
  for (const auto& b : r.buckets) {
    if (b.bucket == bucket) return b.accuracy();
  }
  throw std::runtime_error("missing bucket " + std::to_string(bucket));
}

Outcome TrainingSanity(const fs::path& out, std::uint64_t seed,
                       const Budget& budget) {
  const fs::path root = out / "criterion8";
  fs::remove_all(root);
  std::ofstream log(out / "criterion8.log");
  const double cpu0 = CpuSeconds();
  const RunConfig c = KinshipRun(root, seed, "baseline", {2}, budget);
  abslab::tools::CmdGenerate(c, log);
  const auto report = TrainAndEval(c, log);
  const double cpu = CpuSeconds() - cpu0;
  const double acc = BucketAccuracy(report, 2);
  Outcome o;
  o.passed = acc >= 0.95 && cpu <= 1800.0;
  o.detail = "baseline level-2 greedy accuracy " + Fixed(100 * acc, 1) +
             "% on " + std::to_string(report.total) + " held-out examples (min 95.0%); " +
             Fixed(cpu / 60.0, 1) + " CPU-minutes (limit 30)";
  return o;
}

Outcome Directional(const fs::path& out, const Budget& budget,
                    const std::string& budget_name) {
  const fs::path root = out / "criterion9";
  fs::remove_all(root);
  std::ofstream log(out / "criterion9.log");
  const std::vector<std::string> strategies{"baseline", "enc-sum", "dec-loss"};
  const std::vector<int> levels{2, 3, 4};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  // strategy -> level -> per-seed accuracies
  std::map<std::string, std::map<int, std::vector<double>>> acc;
  std::vector<abslab::harness::EvalReport> reports;
  for (std::uint64_t seed : seeds) {
    const fs::path seed_root = root / ("seed_" + std::to_string(seed));
    abslab::tools::CmdGenerate(
        KinshipRun(seed_root, seed, "baseline", levels, budget), log);
    for (const std::string& s : strategies) {
      const auto r =
          TrainAndEval(KinshipRun(seed_root, seed, s, levels, budget), log);
      for (int l : levels) acc[s][l].push_back(BucketAccuracy(r, l));
      std::cout << "  criterion 9 run: seed " << seed << ' ' << s << ' '
                << Fixed(100 * r.aggregate(), 1) << "%\n"
                << std::flush;
    }
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  std::ostringstream table;
  table << "budget: " << budget_name << " (" << Describe(budget)
        << "), train level 2, " << seeds.size()
        << " seeds, mean greedy accuracy (%)\n";
  table << std::left << std::setw(10) << "strategy" << std::right;
  for (int l : levels) table << std::setw(8) << ("L" + std::to_string(l));
  table << std::setw(8) << "extrap" << '\n';
  std::map<std::string, double> extrap;
  for (const std::string& s : strategies) {
    table << std::left << std::setw(10) << s << std::right;
    for (int l : levels) table << std::setw(8) << Fixed(100 * mean(acc[s][l]), 1);
    extrap[s] = 0.5 * (mean(acc[s][3]) + mean(acc[s][4]));
    table << std::setw(8) << Fixed(100 * extrap[s], 1) << '\n';
  }
  const bool ordering = extrap["enc-sum"] >= extrap["baseline"] &&
                        extrap["dec-loss"] >= extrap["baseline"];
  table << "abstraction >= baseline on extrapolated levels: "
        << (ordering ? "reproduced" : "not reproduced") << '\n';
  {
    std::ofstream archive(out / "criterion9_table.txt");
    archive << table.str();
  }
  std::cout << table.str();
  return {true, std::string("report-only; ordering ") +
                    (ordering ? "reproduced" : "not reproduced") +
                    "; table archived to " +
                    (out / "criterion9_table.txt").string()};
}

Outcome Determinism(const fs::path& out, std::uint64_t seed) {
  const fs::path root = out / "criterion10";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "cli.log";
  const fs::path ini = root / "run.ini";
  {
    std::ofstream f(ini);
    f << "[run]\ntask = kinship\nstrategy = enc-cat\nseed = " << seed
      << "\n[kinship]\ntrain_levels = 2\ntest_levels = 2,3\n"
         "train_per_level = 120\ntest_per_level = 10\n"
         "[model]\ne = 16\nd = 16\nheads = 2\nkv = 8\nlayers = 1\nff = 32\n"
         "[train]\nmax_epochs = 2\n[eval]\ndecode = greedy\nmax_new = 12\n";
  }
  auto paths = [&](const std::string& run) {
    const fs::path r = root / run;
    return " --paths.data_dir " + (r / "data").string() +
           " --paths.checkpoint_dir " + (r / "ckpt").string() +
           " --paths.report_dir " + (r / "reports").string();
  };
  std::vector<std::map<std::string, std::uint64_t>> data, reports;
  for (const std::string run : {"a", "b"}) {
    const std::string args = " -c " + ini.string() + paths(run);
    for (const char* cmd : {"generate", "train", "eval"}) {
      if (const int rc = RunCli(cmd + args, log); rc != 0) {
        return {false, std::string(cmd) + " exited with " + std::to_string(rc) +
                           "; see " + log.string()};
      }
    }
    data.push_back(HashTree(root / run / "data"));
    reports.push_back(HashTree(root / run / "reports"));
  }
  // Evaluating run a's checkpoint again must reproduce its report.
  const std::string again = " -c " + ini.string() + paths("a") +
                            " --paths.report_dir " + (root / "again").string();
  if (RunCli("eval" + again, log) != 0) return {false, "repeat eval failed"};
  const auto repeat = HashTree(root / "again");

  const bool data_ok = data[0] == data[1] && !data[0].empty();
  const bool eval_ok = reports[0] == reports[1] && repeat == reports[0] &&
                       !repeat.empty();
  std::ostringstream detail;
  detail << data[0].size() << " generated files " << (data_ok ? "identical" : "DIFFER")
         << ", " << reports[0].size() << " greedy eval files "
         << (eval_ok ? "identical" : "DIFFER");
  if (!repeat.empty()) {
    detail << " (report json fnv1a " << std::hex << repeat.begin()->second << ")";
  }
  return {data_ok && eval_ok, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"abslab acceptance criteria"};
  bool full = false;
  bool quick = false;
  std::vector<int> only;
  std::string out_dir = ABSLAB_ACCEPTANCE_DIR;
  std::uint64_t seed = 1;
  app.add_flag("--full", full, "Criterion 9 at the criterion 8 budget");
  app.add_flag("--quick", quick,
               "Tiny budgets for criteria 8 and 9 (plumbing check only)");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--out", out_dir, "Artifact directory");
  app.add_option("--seed", seed, "Seed for criteria 1-8 and 10");
  CLI11_PARSE(app, argc, argv);

  const fs::path out(out_dir);
  fs::create_directories(out);
  using abslab::checks::GradientOptions;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1,
       [&] {
         const double c0 = CpuSeconds();
         GradientOptions g;
         g.seed = seed;
         const CheckResult r = abslab::checks::GradientSuite(g);
         return WithinCpu(FromSuite(r), CpuSeconds() - c0, 120.0);
       }},
      {2, [] { return FromSuite(abslab::checks::ParamAuditSuite()); }},
      {3, [&] { return FromSuite(abslab::checks::DegeneracySuite(seed)); }},
      {4,
       [&] {
         const double c0 = CpuSeconds();
         const CheckResult r = abslab::checks::ProverOracleSuite(500, seed);
         return WithinCpu(FromSuite(r), CpuSeconds() - c0, 60.0);
       }},
      {5, [&] { return FromSuite(abslab::checks::KinshipOracleSuite(1000, seed)); }},
      {6, [] { return FromSuite(abslab::checks::ScoringSuite()); }},
      {7, [&] { return FromSuite(abslab::checks::SplitFidelitySuite(seed)); }},
      {8,
       [&] {
         return TrainingSanity(out, seed, quick ? kQuickBudget : kSanityBudget);
       }},
      {9,
       [&] {
         if (quick) return Directional(out, kQuickBudget, "quick");
         return full ? Directional(out, kSanityBudget, "full")
                     : Directional(out, kReducedBudget, "reduced");
       }},
      {10, [&] { return Determinism(out, seed); }},
  };

  int failures = 0;
  std::ofstream summary(out / "summary.txt");
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) {
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    const std::string line = "criterion " + std::to_string(id) + ": " +
                             (o.passed ? "PASS" : "FAIL") + "  " + o.detail +
                             " [" + Fixed(secs, 1) + " s]";
    std::cout << line << '\n' << std::flush;
    summary << line << '\n';
    if (!o.passed) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
