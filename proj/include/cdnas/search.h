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

#ifndef CDNAS_SEARCH_H_
#define CDNAS_SEARCH_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cdnas/cost_model.h"
#include "cdnas/data.h"
#include "cdnas/supernet.h"
#include "cdnas/training.h"
#include "json.hpp"

namespace cdnas {

enum class Optimizer { kMultiLayer, kSingleLayer };

struct SearchConfig {
  int samples_per_iteration = 20;  // J
  int layers_per_sample = 3;       // L
  double init_reduction = 0.03;    // fraction of the initial resource
  double decay = 0.98;             // per-iteration multiplier
  double target_resource = 0.0;
  ResourceKind metric = ResourceKind::kLatency;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kMultiLayer;
  int max_attempts = 200;  // rejection-sampling cap per sample
  int jobs = 1;            // sample-evaluation threads
};

// Throws ConfigError naming the offending field.
void ValidateSearchConfig(const SearchConfig& config, int num_layers);

struct SampleRecord {
  SubNetChoice choice;
  double resource = 0.0;
  double accuracy = 0.0;
  int iteration = 0;
};

// Best sample per iteration; steps[0] is the initial network (iteration 0).
struct Trajectory {
  std::vector<SampleRecord> steps;
};

// initial * init_reduction * decay^iteration.
double ReductionSchedule(double initial_resource, const SearchConfig& config,
                         int iteration);

// Every strictly smaller (M, k) for one layer. A removed layer (M = 0)
// appears once, keeping the current kernel.
std::vector<LayerChoice> ShrinkOptions(const LayerSpec& spec,
                                       const LayerChoice& current);

// Shrinks up to L randomly chosen layers of `prev` until
// resource <= resource(prev) - required_reduction. Proposals draw M' and k'
// uniformly from the grid values not above the current ones; after
// `max_attempts` rejections the chosen layers are forced to their minimum one
// at a time, then the L layers with the largest possible saving. Throws
// FeasibilityError (carrying the attempt count) if all of that fails.
SubNetChoice GenerateMcdSample(const CostModel& cost, const SubNetChoice& prev,
                               int layers_per_sample, double required_reduction,
                               std::mt19937_64& rng, int max_attempts = 200);

// Sample l shrinks only layer l, by the least amount that meets the
// reduction. Layers that cannot meet it alone produce no sample.
std::vector<SubNetChoice> GenerateScdSamples(const CostModel& cost,
                                             const SubNetChoice& prev,
                                             double required_reduction);

// Largest reduction every layer can deliver alone (the SCD per-iteration
// ceiling), and the largest reduction every L-subset of layers can deliver
// together.
double ScdReductionCapacity(const CostModel& cost, const SubNetChoice& prev);
double McdReductionCapacity(const CostModel& cost, const SubNetChoice& prev,
                            int layers_per_sample);

// Top-1 holdout accuracy of the sliced sub-network. Read-only.
double EvaluateSample(const SuperNetwork& net, const SubNetChoice& choice,
                      const Dataset& holdout);

// Highest accuracy; ties go to the lower resource, then the lower index.
// Throws DomainError on an empty list.
std::size_t SelectBest(std::span<const SampleRecord> samples);

struct SearchLogRow {
  int iteration = 0;
  int sample_id = 0;
  double resource = 0.0;
  double accuracy = 0.0;
  bool chosen = false;
  double bound = 0.0;     // resource ceiling for this iteration's samples
  int duplicate_of = -1;  // earlier sample id with the same choice, or -1
};

struct SearchResult {
  Trajectory trajectory;
  std::vector<SearchLogRow> log;
};

// Iterates until the best sample meets config.target_resource. Throws
// FeasibilityError before the first iteration when even the smallest
// sub-network exceeds the target.
SearchResult RunSearch(const SuperNetwork& net, const CostModel& cost,
                       const Dataset& holdout, const SearchConfig& config);

// Walks the trajectory from the initial network's pretrained weights,
// reusing the overlapping slices at every step and training each step for
// `step_options.epochs`, then trains the final architecture for
// `final_epochs`.
StandaloneNetwork TrajectoryReplayFinetune(const SuperNetwork& pretrained,
                                           const Trajectory& trajectory,
                                           const Dataset& train,
                                           const TrainOptions& step_options,
                                           int final_epochs,
                                           std::mt19937_64& rng);

// Search log CSV, first line "# cdnas-search-log v1", then
//   iteration,sample_id,resource,accuracy,chosen,bound,duplicate_of
inline constexpr int kSearchLogVersion = 1;
std::string SearchLogToCsv(std::span<const SearchLogRow> rows);

// {"format": "cdnas-trajectory", "version": 1, "metric": ..,
//  "steps": [{"iteration", "resource", "accuracy", "architecture": {..}}]}
inline constexpr int kTrajectoryVersion = 1;
nlohmann::json TrajectoryToJson(const NetworkSpec& spec, ResourceKind metric,
                                const Trajectory& trajectory);
Trajectory TrajectoryFromJson(const NetworkSpec& spec, const nlohmann::json& j);

}  // namespace cdnas

#endif  // CDNAS_SEARCH_H_
