// Copyright 2026 The awpds Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// awpds: runs an experiment configuration or its invariant suite.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "awpds/error.hpp"
#include "awpds/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Flags& flags) {
  cmd->add_option("config", flags.config, "Experiment file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "Override the seed of the file");
  cmd->add_option("--output-dir", flags.output_dir, "Output directory (overrides AWPDS_OUTPUT_DIR)");
  cmd->add_option("--jobs", flags.jobs, "Worker threads for independent cells")->check(CLI::PositiveNumber);
}

int execute(const Flags& flags, bool checks_only) {
  awpds::ExperimentConfig config = awpds::load_config(flags.config);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.jobs) config.jobs = *flags.jobs;
  config.output_dir = awpds::resolve_output_dir(config.output_dir, std::getenv("AWPDS_OUTPUT_DIR"), flags.output_dir);
  const awpds::RunOutcome out = checks_only ? awpds::run_checks(config) : awpds::run_experiment(config);
  std::cout << out.summary;
  std::cout << "output: " << config.output_dir << "\n";
  return out.exit_status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected dynamical systems and anti-windup approximations"};
  app.require_subcommand(1);
  Flags run_flags, check_flags;
  CLI::App* run = app.add_subcommand("run", "Run the configured experiment");
  add_common(run, run_flags);
  CLI::App* check = app.add_subcommand("check", "Run the invariant suite");
  add_common(check, check_flags);
  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return execute(run_flags, false);
    return execute(check_flags, true);
  } catch (const awpds::Error& e) {
    std::fprintf(stderr, "awpds: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "awpds: unexpected failure: %s\n", e.what());
    return 3;
  }
}
