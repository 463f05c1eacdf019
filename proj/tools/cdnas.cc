/* Copyright 2026 The cdnas Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// cdnas command-line driver.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cdnas/errors.h"
#include "cdnas/experiment.h"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::string trajectory;
  std::string architecture;
  std::optional<int> jobs;
  std::optional<double> gpu_hours;
  std::string mode;
};

cdnas::ExperimentConfig Load(const Flags& f) {
  cdnas::ExperimentConfig c = cdnas::LoadExperimentConfig(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.out = f.out;
  if (f.jobs) {
    if (*f.jobs < 1) throw cdnas::ConfigError("jobs", "must be >= 1");
    c.search.jobs = *f.jobs;
  }
  return c;
}

cdnas::CommandOptions Options(const Flags& f) {
  cdnas::CommandOptions o;
  o.checkpoint = f.checkpoint;
  o.trajectory = f.trajectory;
  o.architecture = f.architecture;
  if (!f.mode.empty()) o.mode = f.mode;
  o.gpu_hours = f.gpu_hours;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel-bypass supernet search: train, search, retrain, report"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", f.config, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "override the config seed");
    cmd->add_option("--out", f.out, "override the run directory");
  };

  CLI::App* train = app.add_subcommand("train-supernet", "train the super-network");
  add_common(train);

  CLI::App* search = app.add_subcommand("search", "run coordinate-descent search");
  add_common(search);
  search->add_option("--checkpoint", f.checkpoint, "super-network checkpoint");
  search->add_option("--trajectory", f.trajectory, "where to write the trajectory");
  search->add_option("--jobs", f.jobs, "sample-evaluation threads");

  CLI::App* discovered =
      app.add_subcommand("train-discovered", "train the discovered network");
  add_common(discovered);
  discovered->add_option("--checkpoint", f.checkpoint, "super-network checkpoint (replay)");
  discovered->add_option("--trajectory", f.trajectory, "search trajectory");
  discovered->add_option("--architecture", f.architecture, "architecture JSON (scratch)");
  discovered->add_option("--mode", f.mode, "scratch or replay")
      ->check(CLI::IsMember({"scratch", "replay"}));

  CLI::App* report = app.add_subcommand("report", "summarize a run directory");
  std::string run_dir;
  report->add_option("run_dir", run_dir, "run directory")->required();
  report->add_option("--gpu-hours", f.gpu_hours, "GPU-hours for the CO2 line")
      ->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      cdnas::CmdTrainSupernet(Load(f), std::cout);
    } else if (search->parsed()) {
      cdnas::CmdSearch(Load(f), Options(f), std::cout);
    } else if (discovered->parsed()) {
      cdnas::CmdTrainDiscovered(Load(f), Options(f), std::cout);
    } else if (report->parsed()) {
      cdnas::CmdReport(run_dir, Options(f), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
