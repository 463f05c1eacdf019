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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "cdnas/checkpoint.h"
#include "cdnas/cost_model.h"
#include "cdnas/errors.h"
#include "cdnas/experiment.h"
#include "cdnas/ops.h"
#include "cdnas/search.h"
#include "cdnas/supernet.h"
#include "cdnas/training.h"
#include "test_util.h"

namespace cdnas {
namespace {

namespace fs = std::filesystem;
using testing::MakeSpec;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

// 1. Channel-level bypass arithmetic against slot-by-slot routing.
Outcome CbcOracle() {
  int cases = 0, mismatches = 0;
  for (int c = 1; c <= 8; ++c)
    for (int t = 1; t <= 8; ++t)
      for (int m = 0; m <= t; ++m, ++cases) {
        std::vector<std::optional<ChannelSource>> slots(std::max(c, t));
        for (int i = 0; i < m; ++i) slots[i] = ChannelSource{ChannelSource::Kind::kFilter, i};
        for (int j = 0; j < std::min(c, t); ++j) {
          if (!slots[j]) slots[j] = ChannelSource{ChannelSource::Kind::kInput, j};
        }
        std::vector<ChannelSource> routed;
        for (const auto& s : slots) {
          if (!s) break;
          routed.push_back(*s);
        }
        if (CbcOutputChannels(c, t, m) != static_cast<int>(routed.size()) ||
            BypassChannelMap(c, t, m) != routed) {
          ++mismatches;
        }
      }
  const int worked = CbcOutputChannels(4, 2, 2);
  return {mismatches == 0 && worked == 2,
          Fmt("%d cases, %d mismatches, Z(C=4,T=2,M=2)=%d", cases, mismatches, worked)};
}

// 2. A removed stride-1 layer behaves as if it had never been built.
Outcome LayerRemoval() {
  const NetworkSpec spec = MakeSpec(3, 8, 8, 4, {{6, 3}, {6, 5}, {6, 3}});
  std::mt19937_64 rng(2);
  const SuperNetwork net(spec, rng);
  double worst = 0.0;
  for (int removed = 0; removed < 3; ++removed) {
    // Physically rebuilt two-layer network from the surviving layers.
    
    std::vector<int> source;
    for (int i = 0; i < 3; ++i) {
      if (i == removed) continue;
      source.push_back(i);
    }
    NetworkSpec small = MakeSpec(3, 8, 8, 4, {{6, spec.layers[source[0]].max_kernel},
                                              {6, spec.layers[source[1]].max_kernel}});
    std::mt19937_64 other(99);
    SuperNetwork rebuilt(small, other);
    TensorMap tensors;
    for (int j = 0; j < 2; ++j) {
      const Tensor& w = net.layer_weight(source[j]).value;
      const int c_in = small.layers[j].in_channels;
      tensors["layers." + std::to_string(j) + ".weight"] =
          SliceConvWeights(w, w.dim(0), c_in, w.dim(2));
      tensors["layers." + std::to_string(j) + ".bias"] = net.layer_bias(source[j]).value;
    }
    tensors["head.weight"] = net.head_weight().value;
    tensors["head.bias"] = net.head_bias().value;
    RestoreTensors(tensors, rebuilt.parameters());

    SubNetChoice choice = FullChoice(spec);
    choice.layers[removed].width = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const Tensor x = Tensor::RandomNormal({1, 3, 8, 8}, 1.0f, rng);
      const Tensor expect = rebuilt.Forward(x, FullChoice(small));
      worst = std::max(worst, MaxAbsoluteError(net.Forward(x, choice), expect));
      worst = std::max(worst, MaxAbsoluteError(
                                  const_cast<SuperNetwork&>(net).ForwardTraining(
                                      x, TrainingPlan::Uniform(choice, 1)),
                                  expect));
    }
  }
  return {worst <= 1e-6, Fmt("3 removal positions x 100 inputs, max abs diff %.3g (limit 1e-6)", worst)};
}

// 3. Masked training-mode forward equals sliced evaluation-mode forward.
Outcome MaskSlice() {
  const NetworkSpec spec =
      MakeSpec(3, 8, 8, 4, {{8, 5}, {4, 3}, {8, 5, 2}, {8, 3}, {6, 5}});
  std::mt19937_64 rng(3);
  const SuperNetwork net(spec, rng);
  const Tensor x = Tensor::RandomNormal({4, 3, 8, 8}, 1.0f, rng);
  constexpr double kFloor = 1e-6;
  double worst = 0.0;
  int points = 0;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerSpec& ls = spec.layers[l];
    for (int m : ls.width_grid)
      for (int k : ls.kernel_grid) {
        ++points;
        // Single layer, fed a T-channel input.
        const Tensor in = Tensor::RandomNormal({2, ls.in_channels, 6, 6}, 1.0f, rng);
        const Tensor train = CbcForward(ls, net.layer_weight(l).value, net.layer_bias(l).value,
                                        in, m, k, Mode::kTraining);
        const Tensor eval = CbcForward(ls, net.layer_weight(l).value, net.layer_bias(l).value,
                                       in, m, k, Mode::kEvaluation);
        worst = std::max(worst, MaxRelativeError(ops::SliceChannels(train, 0, eval.dim(1)),
                                                 eval, kFloor));
        for (int j = eval.dim(1); j < train.dim(1); ++j) {
          const Tensor tail = ops::SliceChannels(train, j, j + 1);
          for (float v : tail.values()) worst = std::max(worst, std::fabs(v) / kFloor);
        }
        // Whole network with this layer at (m, k) and the rest full.
        SubNetChoice choice = FullChoice(spec);
        choice.layers[l] = {m, k};
        const Tensor masked = const_cast<SuperNetwork&>(net).ForwardTraining(
            x, TrainingPlan::Uniform(choice, 4));
        worst = std::max(worst, MaxRelativeError(masked, net.Forward(x, choice), kFloor));
      }
  }
  return {worst <= 1e-5, Fmt("%d grid points, max rel err %.3g (floor %g, limit 1e-5)", points,
                             worst, kFloor)};
}

// 4. Finite differences on every parameter, and exact zeros beyond the
// widest sampled width.
Outcome Gradients() {
  const NetworkSpec spec = MakeSpec(2, 5, 5, 3, {{4, 3}, {6, 5}, {4, 3}});
  std::mt19937_64 rng(4);
  SuperNetwork net(spec, rng);
  const Tensor x = Tensor::RandomNormal({4, 2, 5, 5}, 1.0f, rng);
  const std::vector<int> labels{0, 2, 1, 2};
  // Reference runs in double; a small step keeps central differences from
  // straddling a ReLU kink (one sampled plan has a pre-activation ~1e-5 from 0).
  constexpr double kStep = 1e-7, kFloor = 1e-4;

  std::vector<TrainingPlan> plans;
  TrainingPlan fixed;
  fixed.widths = {{1, 2, 3, 2}, {0, 3, 4, 2}, {4, 1, 0, 2}};
  fixed.kernels = {3, 3, 3};
  plans.push_back(fixed);
  for (int i = 0; i < 3; ++i) plans.push_back(SampleTrainingPlan(spec, 4, rng));

  double worst = 0.0;
  std::size_t checked = 0;
  long nonzero_beyond = 0, beyond = 0;
  for (const TrainingPlan& plan : plans) {
    net.ZeroGrad();
    Tape tape;
    tape.Backward(tape.SoftmaxCrossEntropy(net.ForwardTraining(tape, tape.Input(x), plan), labels));
    const auto r = testing::CompareWithFiniteDifferences(net, x, labels, plan, kStep, kFloor);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
      const int widest = *std::max_element(plan.widths[l].begin(), plan.widths[l].end());
      const Tensor& gw = net.layer_weight(l).grad;
      const Tensor& gb = net.layer_bias(l).grad;
      const std::size_t per = gw.size() / gw.dim(0);
      for (int f = widest; f < spec.layers[l].filters; ++f) {
        beyond += static_cast<long>(per) + 1;
        nonzero_beyond += gb[f] != 0.0f;
        for (std::size_t j = 0; j < per; ++j) nonzero_beyond += gw[f * per + j] != 0.0f;
      }
    }
  }
  const bool pass = worst < 1e-3 && nonzero_beyond == 0 && beyond > 0;
  return {pass, Fmt("%zu gradients, max rel err %.3g (step %g, floor %g); %ld of %ld "
                    "beyond-width entries nonzero",
                    checked, worst, kStep, kFloor, nonzero_beyond, beyond)};
}

// 5. Per-batch width counts differ by at most one.
Outcome WidthSampling() {
  std::mt19937_64 rng(5);
  const std::vector<int> grid = DefaultWidthGrid(16, 1);
  int worst = 0;
  for (int b = 0; b < 1000; ++b) {
    const int batch = 64 + b % 7;
    std::map<int, int> count;
    for (int w : SampleWidthAssignments(batch, grid, rng)) ++count[w];
    int lo = batch, hi = 0;
    for (int g : grid) {
      lo = std::min(lo, count[g]);
      hi = std::max(hi, count[g]);
    }
    worst = std::max(worst, hi - lo);
  }
  return {worst <= 1, Fmt("1000 batches of 64-70 over %zu widths, max count spread %d", grid.size(), worst)};
}

// 6. Reduction schedule against an iterated product.
Outcome Schedule() {
  SearchConfig c;
  c.init_reduction = 0.03;
  c.decay = 0.98;
  const double base = 100.0;
  double expect = base * 0.03, worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    worst = std::max(worst, std::fabs(ReductionSchedule(base, c, i) - expect) / expect);
    expect *= 0.98;
  }
  const double first = ReductionSchedule(base, c, 0);
  return {worst <= 1e-12 && first == 3.0,
          Fmt("i in [0, 100], max rel err %.3g, iteration 0 = %.4f ms on 100 ms", worst, first)};
}

// 7. Search contract on a 6-layer toy net.
Outcome SearchContract() {
  const NetworkSpec spec =
      MakeSpec(3, 8, 8, 4, {{8, 5}, {8, 3}, {12, 5, 2}, {12, 3}, {12, 5}, {12, 3}});
  const CostModel cost = CostModel::Latency(spec, LatencyTable::Synthetic(spec, 1e-4, 0.05));
  std::mt19937_64 rng(7);
  SuperNetwork net(spec, rng);
  SynthOptions so;
  so.per_class = 30;
  so.height = so.width = 8;
  so.seed = 7;
  const auto [train, holdout] = Split(SynthClassification(so), 0.2, 7);
  TrainOptions o;
  o.epochs = 2;
  o.batch_size = 16;
  o.learning_rate = 0.1f;
  TrainSupernetwork(net, train, o, rng);

  SearchConfig c;
  c.samples_per_iteration = 20;
  c.layers_per_sample = 3;
  c.seed = 17;
  const double initial = cost.Total(FullChoice(spec));
  const double floor_resource = cost.Total(MinimalChoice(spec));
  c.target_resource = 0.5 * initial;
  const SearchResult r = RunSearch(net, cost, holdout, c);
  const auto& steps = r.trajectory.steps;

  bool decreasing = true;
  for (std::size_t i = 1; i < steps.size(); ++i) decreasing &= steps[i].resource < steps[i - 1].resource;
  const bool met = steps.back().resource <= c.target_resource;
  int violations = 0;
  for (const SearchLogRow& row : r.log) {
    double bound = steps[row.iteration - 1].resource - ReductionSchedule(initial, c, row.iteration - 1);
    if (bound < floor_resource) bound = c.target_resource;
    const double quantum = 1e-9 * initial;
    if (std::fabs(row.bound - bound) > quantum || row.resource > bound + quantum) ++violations;
  }
  const bool rows = r.log.size() == (steps.size() - 1) * c.samples_per_iteration;
  const SearchResult again = RunSearch(net, cost, holdout, c);
  const bool identical =
      SearchLogToCsv(again.log) == SearchLogToCsv(r.log) &&
      TrajectoryToJson(spec, cost.kind(), again.trajectory).dump() ==
          TrajectoryToJson(spec, cost.kind(), r.trajectory).dump();
  return {decreasing && met && violations == 0 && rows && identical,
          Fmt("%zu iterations, %.4g -> %.4g ms (target %.4g), %zu logged samples, %d bound "
              "violations, strictly decreasing %s, rerun identical %s",
              steps.size() - 1, initial, steps.back().resource, c.target_resource, r.log.size(),
              violations, decreasing ? "yes" : "no", identical ? "yes" : "no")};
}

// 8. Multi-layer vs single-layer reduction capacity.
Outcome Capacity() {
  // Requested premise: smallest layer 2 ms, three smallest summing to 5 ms.
  // With a = 2 the other two are each >= 2, so the smallest achievable sum
  // is 6; search the grid of candidate second/third latencies to confirm.
  bool premise = false;
  for (int b2 = 4; b2 <= 40; ++b2)
    for (int c2 = b2; c2 <= 40; ++c2) premise |= 2.0 + b2 / 2.0 + c2 / 2.0 == 5.0;

  // Nearest valid net: every layer removable, full-width latencies
  // 2, 2, 2, 4, 6, 8 ms (three smallest sum to 6 ms).
  const NetworkSpec spec = MakeSpec(4, 4, 4, 2, {{4, 3}, {4, 3}, {4, 3}, {4, 3}, {4, 3}, {4, 3}},
                                    5);
  const double full_ms[] = {2, 2, 2, 4, 6, 8};
  LatencyTable table;
  for (int l = 0; l < 6; ++l)
    for (int m : spec.layers[l].width_grid) table.Set(l, 3, m, full_ms[l] * m / 4.0);
  const CostModel cost = CostModel::Latency(spec, table);
  const SubNetChoice prev = FullChoice(spec);
  const double scd = ScdReductionCapacity(cost, prev);
  const double mcd = McdReductionCapacity(cost, prev, 3);
  const bool scd_stops = GenerateScdSamples(cost, prev, 2.0).size() == 6 &&
                         GenerateScdSamples(cost, prev, 2.5).size() == 3;
  std::mt19937_64 rng(8);
  int admitted = 0;
  for (int i = 0; i < 200; ++i) {
    const SubNetChoice s = GenerateMcdSample(cost, prev, 3, 5.0, rng);
    admitted += cost.Total(prev) - cost.Total(s) >= 5.0 - 1e-12;
  }
  const bool checks = scd == 2.0 && mcd >= 5.0 && mcd > scd && scd_stops && admitted == 200;
  return {premise && checks,
          Fmt("premise (min 2 ms, three smallest sum 5 ms) %s; on 2,2,2,4,6,8 ms: SCD capacity "
              "%.3g ms, MCD(L=3) capacity %.3g ms, %d/200 MCD samples reduce >= 5 ms",
              premise ? "constructed" : "UNSATISFIABLE (three smallest sum >= 6 ms)", scd, mcd,
              admitted)};
}

// 9. CO2 conversion.
Outcome Co2() {
  const double a = Co2EstimateLbs(397), b = Co2EstimateLbs(2304);
  const double ratio = 1438.0 / (64.0 * 79.0);
  const bool pass = std::fabs(a - 113) <= 0.5 && std::fabs(b - 655) <= 0.5 &&
                    Co2EstimateRoundedLbs(397) == 113 && Co2EstimateRoundedLbs(2304) == 655 &&
                    std::fabs(ratio - kCo2LbsPerGpuHour) <= 1e-4;
  return {pass, Fmt("397 h -> %.2f lbs, 2304 h -> %.2f lbs, 1438/(64*79) = %.6f vs %.4f", a, b,
                    ratio, kCo2LbsPerGpuHour)};
}

// 10. Shipped smoke config end to end.
Outcome EndToEnd() {
  ExperimentConfig config = LoadExperimentConfig(CDNAS_SOURCE_DIR "/configs/smoke.json");
  config.out = fs::temp_directory_path() / "cdnas_acceptance_smoke";
  fs::remove_all(config.out);
  std::ostringstream log;
  CmdTrainSupernet(config, log);
  CmdSearch(config, {}, log);
  CmdTrainDiscovered(config, {}, log);
  auto read = [&](const char* name) {
    std::ifstream in(config.out / name);
    return nlohmann::json::parse(in);
  };
  const auto super = read(kSupernetMetrics);
  const auto metrics = read(kDiscoveredMetrics);
  const double full = super.at("full_width_test_accuracy");
  const double found = metrics.at("test_accuracy");
  const double resource = metrics.at("resource");
  const double target = metrics.at("target");
  const bool pass = full >= 0.9 && resource <= target && full - found <= 0.1;
  return {pass, Fmt("full-width test acc %.4f, discovered %.4f at %.4g ms (target %.4g)", full,
                    found, resource, target)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace cdnas

int main() {
  using namespace cdnas;
  const Criterion criteria[] = {
      {1, "CBC oracle equivalence", 1, CbcOracle},
      {2, "layer-removal identity", 5, LayerRemoval},
      {3, "mask/slice equivalence", 30, MaskSlice},
      {4, "gradient isolation and correctness", 60, Gradients},
      {5, "width-sampling uniformity", 5, WidthSampling},
      {6, "schedule math", 1, Schedule},
      {7, "search contract", 300, SearchContract},
      {8, "MCD vs SCD reduction capacity", 60, Capacity},
      {9, "CO2 figures", 1, Co2},
      {10, "end-to-end smoke", 600, EndToEnd},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d: %s  %s: %s [%.2f s, limit %.0f s%s]\n", c.id, pass ? "PASS" : "FAIL",
                c.name, o.detail.c_str(), secs, c.limit_seconds, in_time ? "" : ", OVER TIME");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}
