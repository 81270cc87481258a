// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// abslab generate|train|eval|report|check --config <file> [--section.key v]

#include <algorithm>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "abslab/tools/config.hpp"
#include "abslab/tools/pipeline.hpp"

namespace {

using abslab::tools::RunConfig;

RunConfig Resolve(const std::string& config_path,
                  const std::vector<std::string>& extras) {
  abslab::tools::ConfigMap map;
  if (!config_path.empty()) map = abslab::tools::ReadConfigFile(config_path);
  abslab::tools::ApplyOverrides(map, extras);
  return abslab::tools::ToRunConfig(map);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity-abstraction experiments on synthetic reasoning tasks"};
  app.require_subcommand(1);

  std::string config_path;

  const char* footer =
      "Any config key may be overridden as --section.key value, "
      "e.g. --run.strategy enc-sum.";
  CLI::App* generate = app.add_subcommand("generate", "Write dataset splits");
  CLI::App* train = app.add_subcommand("train", "Train one strategy");
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a trained run");
  CLI::App* check = app.add_subcommand("check", "Run the property suites");
  for (CLI::App* sub : {generate, train, eval, check}) {
    sub->allow_extras();
    sub->footer(footer);
    sub->add_option("-c,--config", config_path, "INI run configuration")
        ->envname("ABSLAB_CONFIG")
        ->check(CLI::ExistingFile);
  }

  CLI::App* report =
      app.add_subcommand("report", "Merge eval reports into tables");
  std::vector<std::string> report_inputs;
  std::string report_out;
  report->add_option("inputs", report_inputs, "Report files or directories")
      ->required();
  report->add_option("-o,--out", report_out, "Also write the tables here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) {
      std::vector<std::filesystem::path> paths(report_inputs.begin(),
                                               report_inputs.end());
      const std::string text = abslab::tools::CmdReport(paths);
      std::cout << text;
      if (!report_out.empty()) {
        std::ofstream out(report_out, std::ios::binary);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + report_out);
      }
      return 0;
    }
    CLI::App* sub = app.get_subcommands().front();
    const RunConfig config = Resolve(config_path, sub->remaining());
    if (sub == generate) {
      abslab::tools::CmdGenerate(config, std::cout);
    } else if (sub == train) {
      abslab::tools::CmdTrain(config, std::cout);
    } else if (sub == eval) {
      abslab::tools::CmdEval(config, std::cout);
    } else {
      const auto results = abslab::tools::CmdCheck(config, std::cout);
      const bool ok = std::all_of(results.begin(), results.end(),
                                  [](const auto& r) { return r.passed; });
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "abslab: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
