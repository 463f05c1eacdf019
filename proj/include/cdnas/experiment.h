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

#ifndef CDNAS_EXPERIMENT_H_
#define CDNAS_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "cdnas/cost_model.h"
#include "cdnas/data.h"
#include "cdnas/search.h"
#include "cdnas/supernet.h"
#include "cdnas/training.h"
#include "json.hpp"

namespace cdnas {

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "raster"
  std::filesystem::path path;        // raster container when source = raster
  SynthOptions synthetic;
  double test_fraction = 0.2;
  double holdout_fraction = 0.1;
};

struct CostConfig {
  ResourceKind metric = ResourceKind::kLatency;
  std::filesystem::path table;  // empty: synthetic table
  double synthetic_scale = 1e-5;
  double synthetic_offset = 0.05;
  bool interpolate = false;
};

struct DiscoveredConfig {
  TrainOptions train;
  std::string mode = "scratch";  // "scratch" or "replay"
  int epochs_per_step = 2;       // replay only
};

struct ExperimentConfig {
  NetworkSpec network;
  DataConfig data;
  CostConfig cost;
  TrainOptions supernet;
  SearchConfig search;
  std::optional<double> target;           // absolute resource
  std::optional<double> target_fraction;  // of the full network's resource
  DiscoveredConfig discovered;
  std::filesystem::path out = "run";
  std::uint64_t seed = 0;
};

// Parses and validates every field before anything runs. Unknown keys are
// errors. Errors are ConfigError naming the field path.
ExperimentConfig ParseExperimentConfig(const nlohmann::json& j);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);
nlohmann::json ExperimentConfigToJson(const ExperimentConfig& config);

// Train/holdout/test splits, deterministic in config.seed.
struct DataSplits {
  Dataset train;
  Dataset holdout;
  Dataset test;
};
DataSplits LoadData(const ExperimentConfig& config);

CostModel BuildCostModel(const ExperimentConfig& config);

// Absolute target resource for the configured network.
double ResolveTarget(const ExperimentConfig& config, const CostModel& cost);

// Held while a command writes into a run directory. Creation fails if the
// lock file already exists.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Run-directory file names.
inline constexpr const char* kSupernetCheckpoint = "supernet.ckpt.json";
inline constexpr const char* kSupernetCurve = "supernet_curve.csv";
inline constexpr const char* kSupernetMetrics = "supernet_metrics.json";
inline constexpr const char* kTrajectoryFile = "trajectory.json";
inline constexpr const char* kSearchLogFile = "search_log.csv";
inline constexpr const char* kArchitectureFile = "architecture.json";
inline constexpr const char* kDiscoveredCheckpoint = "discovered.ckpt.json";
inline constexpr const char* kDiscoveredCurve = "discovered_curve.csv";
inline constexpr const char* kDiscoveredMetrics = "metrics.json";

struct CommandOptions {
  std::filesystem::path checkpoint;    // search, train-discovered
  std::filesystem::path trajectory;    // search output / replay input
  std::filesystem::path architecture;  // scratch input
  std::optional<std::string> mode;     // overrides discovered.mode
  std::optional<double> gpu_hours;     // report
};

// Each command writes into config.out, which it locks for its duration, plus
// config.<command>.json (the effective config) and timing.<command>.json.
void CmdTrainSupernet(const ExperimentConfig& config, std::ostream& log);
void CmdSearch(const ExperimentConfig& config, const CommandOptions& options,
               std::ostream& log);
void CmdTrainDiscovered(const ExperimentConfig& config,
                        const CommandOptions& options, std::ostream& log);

// Reads run artifacts and prints the summary. Writes nothing.
void CmdReport(const std::filesystem::path& run_dir,
               const CommandOptions& options, std::ostream& out);

}  // namespace cdnas

#endif  // CDNAS_EXPERIMENT_H_
