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

#include "cdnas/search.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <thread>

#include "cdnas/errors.h"

namespace cdnas {

using nlohmann::json;

void ValidateSearchConfig(const SearchConfig& c, int num_layers) {
  if (c.samples_per_iteration < 1) throw ConfigError("search.J", "must be >= 1");
  if (c.layers_per_sample < 1 || c.layers_per_sample > num_layers) {
    throw ConfigError("search.L", "must lie in [1, " +
                                      std::to_string(num_layers) + "]");
  }
  if (!(c.init_reduction > 0.0 && c.init_reduction < 1.0)) {
    throw ConfigError("search.init_reduction", "must lie in (0, 1)");
  }
  if (!(c.decay > 0.0 && c.decay <= 1.0)) {
    throw ConfigError("search.decay", "must lie in (0, 1]");
  }
  if (!(c.target_resource > 0.0)) {
    throw ConfigError("search.target", "must be > 0");
  }
  if (c.max_attempts < 1) {
    throw ConfigError("search.max_attempts", "must be >= 1");
  }
  if (c.jobs < 1) throw ConfigError("jobs", "must be >= 1");
}

double ReductionSchedule(double initial_resource, const SearchConfig& config,
                         int iteration) {
  if (iteration < 0) throw DomainError("iteration must be >= 0");
  return initial_resource * config.init_reduction *
         std::pow(config.decay, iteration);
}

std::vector<LayerChoice> ShrinkOptions(const LayerSpec& spec,
                                       const LayerChoice& current) {
  std::vector<LayerChoice> options;
  if (current.width == 0) return options;
  for (int m : spec.width_grid) {
    if (m > current.width) break;
    if (m == 0) {
      options.push_back({0, current.kernel});
      continue;
    }
    for (int k : spec.kernel_grid) {
      if (k > current.kernel) break;
      if (m == current.width && k == current.kernel) continue;
      options.push_back({m, k});
    }
  }
  return options;
}

namespace {

// Slack for comparing sums of table entries.
double Tolerance(double scale) { return 1e-9 * std::max(1.0, std::fabs(scale)); }

std::vector<int> ShrinkableLayers(const NetworkSpec& spec,
                                  const SubNetChoice& choice) {
  std::vector<int> out;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!ShrinkOptions(spec.layers[i], choice.layers[i]).empty()) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

LayerChoice Smallest(const LayerSpec& spec, const LayerChoice& current) {
  if (spec.min_width() == 0) return {0, current.kernel};
  return {spec.min_width(), spec.min_kernel()};
}

// Uniform draw among the grid values not above `current` (M and k
// independently), redrawn until something actually shrinks.
LayerChoice ProposeShrink(const LayerSpec& spec, const LayerChoice& current,
                          std::mt19937_64& rng) {
  const auto w_end =
      std::upper_bound(spec.width_grid.begin(), spec.width_grid.end(), current.width);
  const auto k_end = std::upper_bound(spec.kernel_grid.begin(),
                                      spec.kernel_grid.end(), current.kernel);
  std::uniform_int_distribution<long> pick_w(0, (w_end - spec.width_grid.begin()) - 1);
  std::uniform_int_distribution<long> pick_k(0, (k_end - spec.kernel_grid.begin()) - 1);
  for (;;) {
    LayerChoice c{spec.width_grid[pick_w(rng)], spec.kernel_grid[pick_k(rng)]};
    if (c.width == 0) c.kernel = current.kernel;
    if (!(c == current)) return c;
  }
}

}  // namespace

SubNetChoice GenerateMcdSample(const CostModel& cost, const SubNetChoice& prev,
                               int layers_per_sample, double required_reduction,
                               std::mt19937_64& rng, int max_attempts) {
  const NetworkSpec& spec = cost.spec();
  const double prev_resource = cost.Total(prev);
  const double bound = prev_resource - required_reduction + Tolerance(prev_resource);
  std::vector<int> shrinkable = ShrinkableLayers(spec, prev);
  if (shrinkable.empty()) {
    throw FeasibilityError("no layer can be shrunk further", 0);
  }
  const int count = std::min<int>(layers_per_sample, static_cast<int>(shrinkable.size()));

  auto choose_layers = [&]() {
    std::vector<int> pool = shrinkable;
    for (int i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, pool.size() - 1);
      std::swap(pool[i], pool[d(rng)]);
    }
    pool.resize(count);
    return pool;
  };

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    SubNetChoice cand = prev;
    for (int l : choose_layers()) {
      cand.layers[l] = ProposeShrink(spec.layers[l], prev.layers[l], rng);
    }
    if (cost.Total(cand) <= bound) return cand;
  }

  // Escalation: force layers to their minimum one at a time.
  SubNetChoice cand = prev;
  for (int l : choose_layers()) {
    cand.layers[l] = Smallest(spec.layers[l], prev.layers[l]);
    if (cost.Total(cand) <= bound) return cand;
  }
  std::vector<std::pair<double, int>> savings;
  for (int l : shrinkable) {
    SubNetChoice one = prev;
    one.layers[l] = Smallest(spec.layers[l], prev.layers[l]);
    savings.emplace_back(prev_resource - cost.Total(one), l);
  }
  std::stable_sort(savings.begin(), savings.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  cand = prev;
  for (int i = 0; i < count; ++i) {
    const int l = savings[i].second;
    cand.layers[l] = Smallest(spec.layers[l], prev.layers[l]);
    if (cost.Total(cand) <= bound) return cand;
  }
  throw FeasibilityError("no sample shrinking " + std::to_string(count) +
                             " layers reduces the resource by " +
                             std::to_string(required_reduction) + " after " +
                             std::to_string(max_attempts) + " attempts",
                         max_attempts);
}

std::vector<SubNetChoice> GenerateScdSamples(const CostModel& cost,
                                             const SubNetChoice& prev,
                                             double required_reduction) {
  const NetworkSpec& spec = cost.spec();
  const double prev_resource = cost.Total(prev);
  const double bound = prev_resource - required_reduction + Tolerance(prev_resource);
  std::vector<SubNetChoice> samples;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    SubNetChoice best_choice;
    double best_resource = -1.0;
    for (const LayerChoice& opt : ShrinkOptions(spec.layers[l], prev.layers[l])) {
      SubNetChoice cand = prev;
      cand.layers[l] = opt;
      const double r = cost.Total(cand);
      // Options ascend in (M, k); >= keeps the widest among equal resources.
      if (r <= bound && r >= best_resource) {
        best_resource = r;
        best_choice = std::move(cand);
      }
    }
    if (best_resource >= 0.0) samples.push_back(std::move(best_choice));
  }
  return samples;
}

namespace {

double SavingAtMinimum(const CostModel& cost, const SubNetChoice& prev,
                       std::span<const int> layers, double prev_resource) {
  SubNetChoice cand = prev;
  for (int l : layers) {
    cand.layers[l] = Smallest(cost.spec().layers[l], prev.layers[l]);
  }
  return prev_resource - cost.Total(cand);
}

}  // namespace

double ScdReductionCapacity(const CostModel& cost, const SubNetChoice& prev) {
  const double prev_resource = cost.Total(prev);
  const std::vector<int> shrinkable = ShrinkableLayers(cost.spec(), prev);
  if (shrinkable.empty()) return 0.0;
  double capacity = prev_resource;
  for (int l : shrinkable) {
    const int one[] = {l};
    capacity = std::min(capacity, SavingAtMinimum(cost, prev, one, prev_resource));
  }
  return capacity;
}

double McdReductionCapacity(const CostModel& cost, const SubNetChoice& prev,
                            int layers_per_sample) {
  const double prev_resource = cost.Total(prev);
  const std::vector<int> shrinkable = ShrinkableLayers(cost.spec(), prev);
  const int n = static_cast<int>(shrinkable.size());
  const int count = std::min(layers_per_sample, n);
  if (count == 0) return 0.0;
  double capacity = prev_resource;
  // Every count-subset of the shrinkable layers, in lexicographic order.
  std::vector<int> pick(count);
  std::iota(pick.begin(), pick.end(), 0);
  std::vector<int> subset(count);
  for (;;) {
    for (int i = 0; i < count; ++i) subset[i] = shrinkable[pick[i]];
    capacity = std::min(capacity,
                        SavingAtMinimum(cost, prev, subset, prev_resource));
    int i = count - 1;
    while (i >= 0 && pick[i] == n - count + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < count; ++j) pick[j] = pick[j - 1] + 1;
  }
  return capacity;
}

double EvaluateSample(const SuperNetwork& net, const SubNetChoice& choice,
                      const Dataset& holdout) {
  return EvaluateAccuracy(net, choice, holdout);
}

std::size_t SelectBest(std::span<const SampleRecord> samples) {
  if (samples.empty()) throw DomainError("cannot select from no samples");
  std::size_t best = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const SampleRecord& a = samples[i];
    const SampleRecord& b = samples[best];
    if (a.accuracy > b.accuracy ||
        (a.accuracy == b.accuracy && a.resource < b.resource)) {
      best = i;
    }
  }
  return best;
}

namespace {

std::vector<double> EvaluateAll(const SuperNetwork& net,
                                 const std::vector<SubNetChoice>& choices,
                                 const Dataset& holdout, int jobs) {
  std::vector<double> acc(choices.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < choices.size(); i = next++) {
      acc[i] = EvaluateSample(net, choices[i], holdout);
    }
  };
  const int threads = std::min<int>(jobs, static_cast<int>(choices.size()));
  if (threads <= 1) {
    worker();
    return acc;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  return acc;
}

}  // namespace

SearchResult RunSearch(const SuperNetwork& net, const CostModel& cost,
                       const Dataset& holdout, const SearchConfig& config) {
  const NetworkSpec& spec = net.spec();
  ValidateSearchConfig(config, static_cast<int>(spec.layers.size()));
  if (holdout.size() == 0) throw DomainError("holdout set is empty");
  if (config.metric != cost.kind()) {
    throw ConfigError("search.metric", "does not match the cost model");
  }

  const SubNetChoice initial = FullChoice(spec);
  const double initial_resource = cost.Total(initial);
  const double floor_resource = cost.Total(MinimalChoice(spec));
  const double target = config.target_resource;
  if (floor_resource > target + Tolerance(target)) {
    throw FeasibilityError("target " + std::to_string(target) +
                               " is below the smallest reachable resource " +
                               std::to_string(floor_resource),
                           0);
  }

  std::mt19937_64 rng(config.seed);
  SearchResult result;
  SampleRecord best{initial, initial_resource,
                    EvaluateSample(net, initial, holdout), 0};
  result.trajectory.steps.push_back(best);

  int iteration = 0;
  while (best.resource > target + Tolerance(target)) {
    ++iteration;
    double bound = best.resource -
                   ReductionSchedule(initial_resource, config, iteration - 1);
    // The schedule can outrun what is left to remove; finish at the target.
    if (bound < floor_resource) bound = target;
    const double required = best.resource - bound;

    std::vector<SubNetChoice> samples;
    if (config.optimizer == Optimizer::kMultiLayer) {
      for (int j = 0; j < config.samples_per_iteration; ++j) {
        samples.push_back(GenerateMcdSample(cost, best.choice,
                                            config.layers_per_sample, required,
                                            rng, config.max_attempts));
      }
    } else {
      samples = GenerateScdSamples(cost, best.choice, required);
      if (samples.empty()) {
        throw FeasibilityError("iteration " + std::to_string(iteration) +
                                   ": no single layer can reduce the resource by " +
                                   std::to_string(required),
                               0);
      }
    }

    std::map<std::string, int> first_seen;
    std::vector<int> duplicate_of(samples.size(), -1);
    std::vector<SubNetChoice> unique;
    std::vector<int> unique_index(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
      auto [it, fresh] = first_seen.emplace(samples[j].Key(), static_cast<int>(j));
      if (fresh) {
        unique_index[j] = static_cast<int>(unique.size());
        unique.push_back(samples[j]);
      } else {
        duplicate_of[j] = it->second;
        unique_index[j] = unique_index[it->second];
      }
    }
    const std::vector<double> acc = EvaluateAll(net, unique, holdout, config.jobs);

    std::vector<SampleRecord> records;
    for (std::size_t u = 0; u < unique.size(); ++u) {
      records.push_back({unique[u], cost.Total(unique[u]), acc[u], iteration});
    }
    const std::size_t chosen = SelectBest(records);
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const SampleRecord& r = records[unique_index[j]];
      result.log.push_back({iteration, static_cast<int>(j), r.resource,
                            r.accuracy,
                            duplicate_of[j] < 0 &&
                                unique_index[j] == static_cast<int>(chosen),
                            bound, duplicate_of[j]});
    }
    best = records[chosen];
    result.trajectory.steps.push_back(best);
  }
  return result;
}

StandaloneNetwork TrajectoryReplayFinetune(const SuperNetwork& pretrained,
                                           const Trajectory& trajectory,
                                           const Dataset& train,
                                           const TrainOptions& step_options,
                                           int final_epochs,
                                           std::mt19937_64& rng) {
  if (trajectory.steps.empty()) throw DomainError("trajectory is empty");
  StandaloneNetwork net = pretrained.Extract(trajectory.steps.front().choice);
  for (std::size_t s = 1; s < trajectory.steps.size(); ++s) {
    net = net.Shrink(trajectory.steps[s].choice);
    TrainStandalone(net, train, step_options, rng);
  }
  TrainOptions final_options = step_options;
  final_options.epochs = final_epochs;
  TrainStandalone(net, train, final_options, rng);
  return net;
}

std::string SearchLogToCsv(std::span<const SearchLogRow> rows) {
  std::string out = "# cdnas-search-log v" + std::to_string(kSearchLogVersion) +
                    "\niteration,sample_id,resource,accuracy,chosen,bound,"
                    "duplicate_of\n";
  char line[256];
  for (const SearchLogRow& r : rows) {
    std::snprintf(line, sizeof line, "%d,%d,%.9g,%.6f,%d,%.9g,%d\n", r.iteration,
                  r.sample_id, r.resource, r.accuracy, r.chosen ? 1 : 0,
                  r.bound, r.duplicate_of);
    out += line;
  }
  return out;
}

json TrajectoryToJson(const NetworkSpec& spec, ResourceKind metric,
                      const Trajectory& trajectory) {
  json j;
  j["format"] = "cdnas-trajectory";
  j["version"] = kTrajectoryVersion;
  j["metric"] = ResourceKindName(metric);
  json steps = json::array();
  for (const SampleRecord& r : trajectory.steps) {
    steps.push_back({{"iteration", r.iteration},
                     {"resource", r.resource},
                     {"accuracy", r.accuracy},
                     {"architecture", ArchitectureToJson(spec, r.choice)}});
  }
  j["steps"] = std::move(steps);
  return j;
}

Trajectory TrajectoryFromJson(const NetworkSpec& spec, const json& j) {
  if (j.value("format", "") != "cdnas-trajectory") {
    throw ConfigError("format", "not a cdnas trajectory");
  }
  if (j.value("version", 0) != kTrajectoryVersion) {
    throw ConfigError("version", "unsupported trajectory version");
  }
  Trajectory t;
  for (const json& s : j.at("steps")) {
    t.steps.push_back({ChoiceFromArchitecture(spec, s.at("architecture")),
                       s.at("resource").get<double>(),
                       s.at("accuracy").get<double>(),
                       s.at("iteration").get<int>()});
  }
  if (t.steps.empty()) throw ConfigError("steps", "trajectory is empty");
  return t;
}

}  // namespace cdnas
