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

#include "cdnas/experiment.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "cdnas/checkpoint.h"
#include "cdnas/errors.h"

namespace cdnas {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Object reader that remembers which keys were consumed so leftovers can be
// reported as unknown.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_, "must be an object");
  }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* Get(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  const json& Require(const std::string& key) {
    const json* v = Get(key);
    if (!v) throw ConfigError(Path(key), "is required");
    return *v;
  }

  int Int(const std::string& key, std::optional<int> fallback = {}) {
    const json* v = fallback ? Get(key) : &Require(key);
    if (!v) return *fallback;
    if (!v->is_number_integer()) throw ConfigError(Path(key), "must be an integer");
    return v->get<int>();
  }

  double Number(const std::string& key, std::optional<double> fallback = {}) {
    const json* v = fallback ? Get(key) : &Require(key);
    if (!v) return *fallback;
    if (!v->is_number()) throw ConfigError(Path(key), "must be a number");
    return v->get<double>();
  }

  std::optional<double> OptionalNumber(const std::string& key) {
    const json* v = Get(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ConfigError(Path(key), "must be a number");
    return v->get<double>();
  }

  bool Bool(const std::string& key, bool fallback) {
    const json* v = Get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(Path(key), "must be true or false");
    return v->get<bool>();
  }

  std::string String(const std::string& key, const std::string& fallback) {
    const json* v = Get(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(Path(key), "must be a string");
    return v->get<std::string>();
  }

  std::optional<std::vector<int>> IntList(const std::string& key) {
    const json* v = Get(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) throw ConfigError(Path(key), "must be a list of integers");
    std::vector<int> out;
    for (const json& e : *v) {
      if (!e.is_number_integer()) {
        throw ConfigError(Path(key), "must be a list of integers");
      }
      out.push_back(e.get<int>());
    }
    return out;
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(Path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

TrainOptions ParseTrainOptions(Fields& f, TrainOptions d) {
  TrainOptions o;
  o.epochs = f.Int("epochs", d.epochs);
  o.batch_size = f.Int("batch_size", d.batch_size);
  o.learning_rate = static_cast<float>(f.Number("learning_rate", d.learning_rate));
  o.weight_decay = static_cast<float>(f.Number("weight_decay", d.weight_decay));
  if (o.epochs < 1) throw ConfigError(f.Path("epochs"), "must be >= 1");
  if (o.batch_size < 1) throw ConfigError(f.Path("batch_size"), "must be >= 1");
  if (!(o.learning_rate > 0.0f)) {
    throw ConfigError(f.Path("learning_rate"), "must be > 0");
  }
  if (!(o.weight_decay >= 0.0f)) {
    throw ConfigError(f.Path("weight_decay"), "must be >= 0");
  }
  return o;
}

json TrainOptionsToJson(const TrainOptions& o) {
  return {{"epochs", o.epochs},
          {"batch_size", o.batch_size},
          {"learning_rate", o.learning_rate},
          {"weight_decay", o.weight_decay}};
}

void CheckFraction(double v, const std::string& field) {
  if (!(v > 0.0 && v < 1.0)) throw ConfigError(field, "must lie in (0, 1)");
}

NetworkSpec ParseNetwork(const json& j) {
  Fields f(j, "network");
  NetworkSpec spec;
  Fields input(f.Require("input"), "network.input");
  spec.in_channels = input.Int("channels");
  spec.height = input.Int("height");
  spec.width = input.Int("width");
  input.Finish();
  if (spec.in_channels < 1) throw ConfigError("network.input.channels", "must be >= 1");
  if (spec.height < 1) throw ConfigError("network.input.height", "must be >= 1");
  if (spec.width < 1) throw ConfigError("network.input.width", "must be >= 1");
  spec.classes = f.Int("classes");
  if (spec.classes < 2) throw ConfigError("network.classes", "must be >= 2");

  const json& layers = f.Require("layers");
  if (!layers.is_array() || layers.empty()) {
    throw ConfigError("network.layers", "must be a nonempty list");
  }
  int c = spec.in_channels;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Fields lf(layers[i], "network.layers[" + std::to_string(i) + "]");
    LayerSpec l;
    l.index = static_cast<int>(i);
    l.in_channels = lf.Int("C", c);
    l.filters = lf.Int("T");
    l.max_kernel = lf.Int("K");
    l.stride = lf.Int("stride", 1);
    const int points = lf.Int("grid_points", 9);
    if (points < 2) throw ConfigError(lf.Path("grid_points"), "must be >= 2");
    if (l.filters < 1) throw ConfigError(lf.Path("T"), "must be >= 1");
    if (l.max_kernel < 1 || l.max_kernel % 2 == 0) {
      throw ConfigError(lf.Path("K"), "must be a positive odd number");
    }
    if (l.stride != 1 && l.stride != 2) throw ConfigError(lf.Path("stride"), "must be 1 or 2");
    l.width_grid = lf.IntList("width_grid").value_or(
        DefaultWidthGrid(l.filters, l.stride, points));
    l.kernel_grid = lf.IntList("kernel_grid").value_or(DefaultKernelGrid(l.max_kernel));
    lf.Finish();
    spec.layers.push_back(std::move(l));
    c = spec.layers.back().filters;
  }
  f.Finish();
  try {
    ValidateNetworkSpec(spec);
  } catch (const ConfigError& e) {
    std::string what = e.what();
    what = what.substr(std::min(what.size(), e.field().size() + 2));
    throw ConfigError("network." + e.field(), what);
  }
  return spec;
}

json NetworkToJson(const NetworkSpec& spec) {
  json layers = json::array();
  for (const LayerSpec& l : spec.layers) {
    layers.push_back({{"C", l.in_channels},
                      {"T", l.filters},
                      {"K", l.max_kernel},
                      {"stride", l.stride},
                      {"width_grid", l.width_grid},
                      {"kernel_grid", l.kernel_grid}});
  }
  return {{"input",
           {{"channels", spec.in_channels},
            {"height", spec.height},
            {"width", spec.width}}},
          {"classes", spec.classes},
          {"layers", std::move(layers)}};
}

std::mt19937_64 StageRng(std::uint64_t seed, std::uint32_t stage) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stage};
  return std::mt19937_64(seq);
}

enum Stage : std::uint32_t {
  kStageData = 1,
  kStageInit,
  kStageSupernetTrain,
  kStageSearch,
  kStageDiscoveredInit,
  kStageDiscoveredTrain,
};

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void WriteJson(const fs::path& path, const json& j) { WriteText(path, j.dump(2) + "\n"); }

json ReadJson(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing artifact " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
}

void WriteProvenance(const ExperimentConfig& config, const std::string& command) {
  WriteJson(config.out / ("config." + command + ".json"), ExperimentConfigToJson(config));
}

void WriteTiming(const ExperimentConfig& config, const std::string& command,
                 double seconds) {
  WriteJson(config.out / ("timing." + command + ".json"),
            {{"command", command}, {"seconds", seconds}});
}

double SecondsSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string CurveCsv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,loss,train_accuracy\n";
  char line[96];
  for (const EpochStats& s : history) {
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f\n", s.epoch, s.loss, s.train_accuracy);
    out += line;
  }
  return out;
}

SuperNetwork LoadSupernet(const NetworkSpec& spec, const fs::path& checkpoint) {
  std::mt19937_64 rng(0);
  SuperNetwork net(spec, rng);
  RestoreTensors(LoadCheckpoint(checkpoint), net.parameters());
  return net;
}

fs::path OrDefault(const fs::path& given, const fs::path& fallback) {
  return given.empty() ? fallback : given;
}

}  // namespace

ExperimentConfig ParseExperimentConfig(const json& j) {
  Fields f(j, "");
  ExperimentConfig c;
  if (const json* seed = f.Get("seed")) {
    if (!seed->is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
    c.seed = seed->get<std::uint64_t>();
  }
  c.out = f.String("out", c.out.string());
  if (c.out.empty()) throw ConfigError("out", "must not be empty");
  c.network = ParseNetwork(f.Require("network"));

  {
    Fields d(f.Require("data"), "data");
    c.data.source = d.String("source", "synthetic");
    c.data.path = d.String("path", "");
    c.data.test_fraction = d.Number("test_fraction", 0.2);
    c.data.holdout_fraction = d.Number("holdout_fraction", 0.1);
    CheckFraction(c.data.test_fraction, "data.test_fraction");
    CheckFraction(c.data.holdout_fraction, "data.holdout_fraction");
    SynthOptions& s = c.data.synthetic;
    s.classes = c.network.classes;
    s.channels = c.network.in_channels;
    s.height = c.network.height;
    s.width = c.network.width;
    if (c.data.source == "synthetic") {
      if (const json* sj = d.Get("synthetic")) {
        Fields sf(*sj, "data.synthetic");
        s.per_class = sf.Int("per_class", s.per_class);
        s.blobs_per_channel = sf.Int("blobs_per_channel", s.blobs_per_channel);
        s.noise = sf.Number("noise", s.noise);
        sf.Finish();
      }
      if (s.per_class < 1) throw ConfigError("data.synthetic.per_class", "must be >= 1");
      if (s.blobs_per_channel < 1) {
        throw ConfigError("data.synthetic.blobs_per_channel", "must be >= 1");
      }
      if (!(s.noise >= 0.0)) throw ConfigError("data.synthetic.noise", "must be >= 0");
      if (!c.data.path.empty()) {
        throw ConfigError("data.path", "only used when source is \"raster\"");
      }
    } else if (c.data.source == "raster") {
      if (d.Get("synthetic")) {
        throw ConfigError("data.synthetic", "only used when source is \"synthetic\"");
      }
      if (c.data.path.empty()) throw ConfigError("data.path", "is required for raster data");
      if (!fs::is_regular_file(c.data.path)) {
        throw ConfigError("data.path", "no such file: " + c.data.path.string());
      }
    } else {
      throw ConfigError("data.source", "must be \"synthetic\" or \"raster\"");
    }
    d.Finish();
  }

  if (const json* cj = f.Get("cost")) {
    Fields cf(*cj, "cost");
    try {
      c.cost.metric = ParseResourceKind(cf.String("metric", "latency"));
    } catch (const std::exception&) {
      throw ConfigError("cost.metric", "must be \"latency\" or \"macs\"");
    }
    c.cost.table = cf.String("table", "");
    c.cost.synthetic_scale = cf.Number("synthetic_scale", c.cost.synthetic_scale);
    c.cost.synthetic_offset = cf.Number("synthetic_offset", c.cost.synthetic_offset);
    c.cost.interpolate = cf.Bool("interpolate", false);
    cf.Finish();
    if (!(c.cost.synthetic_scale > 0.0)) throw ConfigError("cost.synthetic_scale", "must be > 0");
    if (!(c.cost.synthetic_offset >= 0.0)) {
      throw ConfigError("cost.synthetic_offset", "must be >= 0");
    }
    if (!c.cost.table.empty()) {
      if (c.cost.metric != ResourceKind::kLatency) {
        throw ConfigError("cost.table", "only used with the latency metric");
      }
      if (!fs::is_regular_file(c.cost.table)) {
        throw ConfigError("cost.table", "no such file: " + c.cost.table.string());
      }
    }
  }

  if (const json* tj = f.Get("supernet_training")) {
    Fields tf(*tj, "supernet_training");
    c.supernet = ParseTrainOptions(tf, c.supernet);
    c.supernet.check_isolation = tf.Bool("check_isolation", false);
    tf.Finish();
  }

  {
    Fields sf(f.Require("search"), "search");
    SearchConfig& s = c.search;
    s.samples_per_iteration = sf.Int("J", s.samples_per_iteration);
    s.layers_per_sample = sf.Int("L", s.layers_per_sample);
    s.init_reduction = sf.Number("init_reduction", s.init_reduction);
    s.decay = sf.Number("decay", s.decay);
    s.max_attempts = sf.Int("max_attempts", s.max_attempts);
    s.jobs = sf.Int("jobs", s.jobs);
    const std::string opt = sf.String("optimizer", "mcd");
    if (opt == "mcd") {
      s.optimizer = Optimizer::kMultiLayer;
    } else if (opt == "scd") {
      s.optimizer = Optimizer::kSingleLayer;
    } else {
      throw ConfigError("search.optimizer", "must be \"mcd\" or \"scd\"");
    }
    c.target = sf.OptionalNumber("target");
    c.target_fraction = sf.OptionalNumber("target_fraction");
    sf.Finish();
    if (c.target.has_value() == c.target_fraction.has_value()) {
      throw ConfigError("search.target", "give exactly one of target and target_fraction");
    }
    if (c.target && !(*c.target > 0.0)) throw ConfigError("search.target", "must be > 0");
    if (c.target_fraction && !(*c.target_fraction > 0.0 && *c.target_fraction <= 1.0)) {
      throw ConfigError("search.target_fraction", "must lie in (0, 1]");
    }
    s.metric = c.cost.metric;
    SearchConfig probe = s;
    probe.target_resource = 1.0;
    ValidateSearchConfig(probe, static_cast<int>(c.network.layers.size()));
  }

  if (const json* dj = f.Get("discovered_training")) {
    Fields df(*dj, "discovered_training");
    c.discovered.train = ParseTrainOptions(df, c.discovered.train);
    c.discovered.mode = df.String("mode", c.discovered.mode);
    c.discovered.epochs_per_step = df.Int("epochs_per_step", c.discovered.epochs_per_step);
    df.Finish();
    if (c.discovered.mode != "scratch" && c.discovered.mode != "replay") {
      throw ConfigError("discovered_training.mode", "must be \"scratch\" or \"replay\"");
    }
    if (c.discovered.epochs_per_step < 0) {
      throw ConfigError("discovered_training.epochs_per_step", "must be >= 0");
    }
  }
  f.Finish();
  return c;
}

ExperimentConfig LoadExperimentConfig(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
  return ParseExperimentConfig(j);
}

json ExperimentConfigToJson(const ExperimentConfig& c) {
  json data = {{"source", c.data.source},
               {"test_fraction", c.data.test_fraction},
               {"holdout_fraction", c.data.holdout_fraction}};
  if (c.data.source == "raster") {
    data["path"] = c.data.path.string();
  } else {
    data["synthetic"] = {{"per_class", c.data.synthetic.per_class},
                         {"blobs_per_channel", c.data.synthetic.blobs_per_channel},
                         {"noise", c.data.synthetic.noise}};
  }
  json cost = {{"metric", ResourceKindName(c.cost.metric)},
               {"synthetic_scale", c.cost.synthetic_scale},
               {"synthetic_offset", c.cost.synthetic_offset},
               {"interpolate", c.cost.interpolate}};
  if (!c.cost.table.empty()) cost["table"] = c.cost.table.string();
  json supernet = TrainOptionsToJson(c.supernet);
  supernet["check_isolation"] = c.supernet.check_isolation;
  json search = {{"J", c.search.samples_per_iteration},
                 {"L", c.search.layers_per_sample},
                 {"init_reduction", c.search.init_reduction},
                 {"decay", c.search.decay},
                 {"max_attempts", c.search.max_attempts},
                 {"jobs", c.search.jobs},
                 {"optimizer", c.search.optimizer == Optimizer::kMultiLayer ? "mcd" : "scd"}};
  if (c.target) search["target"] = *c.target;
  if (c.target_fraction) search["target_fraction"] = *c.target_fraction;
  json discovered = TrainOptionsToJson(c.discovered.train);
  discovered["mode"] = c.discovered.mode;
  discovered["epochs_per_step"] = c.discovered.epochs_per_step;
  return {{"seed", c.seed},
          {"out", c.out.string()},
          {"network", NetworkToJson(c.network)},
          {"data", std::move(data)},
          {"cost", std::move(cost)},
          {"supernet_training", std::move(supernet)},
          {"search", std::move(search)},
          {"discovered_training", std::move(discovered)}};
}

DataSplits LoadData(const ExperimentConfig& config) {
  Dataset all;
  if (config.data.source == "raster") {
    all = LoadRaster(config.data.path);
    const NetworkSpec& n = config.network;
    if (all.channels() != n.in_channels) {
      throw ConfigError("network.input.channels", "does not match the dataset");
    }
    if (all.height() != n.height) throw ConfigError("network.input.height", "does not match the dataset");
    if (all.width() != n.width) throw ConfigError("network.input.width", "does not match the dataset");
    if (all.classes != n.classes) throw ConfigError("network.classes", "does not match the dataset");
  } else {
    SynthOptions s = config.data.synthetic;
    s.seed = StageRng(config.seed, kStageData)();
    all = SynthClassification(s);
  }
  const std::uint64_t split_seed = StageRng(config.seed, kStageData)() ^ 0x5bd1e995u;
  auto [rest, test] = Split(all, config.data.test_fraction, split_seed);
  auto [train, holdout] = Split(rest, config.data.holdout_fraction, split_seed + 1);
  test.split = "test";
  return {std::move(train), std::move(holdout), std::move(test)};
}

CostModel BuildCostModel(const ExperimentConfig& config) {
  if (config.cost.metric == ResourceKind::kMacs) return CostModel::Macs(config.network);
  LatencyTable table = config.cost.table.empty()
                           ? LatencyTable::Synthetic(config.network,
                                                     config.cost.synthetic_scale,
                                                     config.cost.synthetic_offset)
                           : LatencyTable::Load(config.cost.table);
  if (config.cost.interpolate) table.set_interpolate(true);
  return CostModel::Latency(config.network, std::move(table));
}

double ResolveTarget(const ExperimentConfig& config, const CostModel& cost) {
  if (config.target) return *config.target;
  return *config.target_fraction * cost.Total(FullChoice(config.network));
}

RunLock::RunLock(const fs::path& run_dir) : path_(run_dir / ".lock") {
  fs::create_directories(run_dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) {
    throw StateError("run directory " + run_dir.string() +
                     " is locked by another command (remove " + path_.string() +
                     " if stale)");
  }
  std::fclose(f);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

void CmdTrainSupernet(const ExperimentConfig& config, std::ostream& log) {
  RunLock lock(config.out);
  WriteProvenance(config, "train-supernet");
  const auto start = std::chrono::steady_clock::now();
  const DataSplits data = LoadData(config);
  const CostModel cost = BuildCostModel(config);

  std::mt19937_64 init_rng = StageRng(config.seed, kStageInit);
  SuperNetwork net(config.network, init_rng);
  std::mt19937_64 rng = StageRng(config.seed, kStageSupernetTrain);
  const auto history = TrainSupernetwork(
      net, data.train, config.supernet, rng, [&](const EpochStats& s) {
        log << "epoch " << s.epoch << " loss " << std::fixed << std::setprecision(4)
            << s.loss << " train_acc " << s.train_accuracy << "\n";
      });
  SaveCheckpoint(config.out / kSupernetCheckpoint, CollectTensors(net.parameters()));
  WriteText(config.out / kSupernetCurve, CurveCsv(history));

  const SubNetChoice full = FullChoice(config.network);
  const double test_acc = EvaluateAccuracy(net, full, data.test);
  const double holdout_acc = EvaluateAccuracy(net, full, data.holdout);
  const SubNetChoice minimal = MinimalChoice(config.network);
  WriteJson(config.out / kSupernetMetrics,
            {{"metric", ResourceKindName(cost.kind())},
             {"full_width_resource", cost.Total(full)},
             {"full_width_test_accuracy", test_acc},
             {"full_width_holdout_accuracy", holdout_acc},
             {"minimal_resource", cost.Total(minimal)},
             {"minimal_test_accuracy", EvaluateAccuracy(net, minimal, data.test)},
             {"checksum", net.Checksum()}});
  log << "full-width test accuracy " << test_acc << "\n";
  WriteTiming(config, "train-supernet", SecondsSince(start));
}

void CmdSearch(const ExperimentConfig& config, const CommandOptions& options,
               std::ostream& log) {
  RunLock lock(config.out);
  WriteProvenance(config, "search");
  const auto start = std::chrono::steady_clock::now();
  const DataSplits data = LoadData(config);
  const CostModel cost = BuildCostModel(config);
  const SuperNetwork net = LoadSupernet(
      config.network, OrDefault(options.checkpoint, config.out / kSupernetCheckpoint));

  SearchConfig sc = config.search;
  sc.target_resource = ResolveTarget(config, cost);
  sc.seed = StageRng(config.seed, kStageSearch)();
  const SearchResult result = RunSearch(net, cost, data.holdout, sc);

  for (const SampleRecord& r : result.trajectory.steps) {
    log << "iteration " << r.iteration << " resource " << std::setprecision(6)
        << r.resource << " holdout_acc " << r.accuracy << "\n";
  }
  WriteJson(OrDefault(options.trajectory, config.out / kTrajectoryFile),
            TrajectoryToJson(config.network, cost.kind(), result.trajectory));
  WriteText(config.out / kSearchLogFile, SearchLogToCsv(result.log));
  WriteJson(config.out / kArchitectureFile,
            ArchitectureToJson(config.network, result.trajectory.steps.back().choice));
  WriteTiming(config, "search", SecondsSince(start));
}

void CmdTrainDiscovered(const ExperimentConfig& config, const CommandOptions& options,
                        std::ostream& log) {
  const std::string mode = options.mode.value_or(config.discovered.mode);
  if (mode != "scratch" && mode != "replay") {
    throw ConfigError("mode", "must be \"scratch\" or \"replay\"");
  }
  RunLock lock(config.out);
  WriteProvenance(config, "train-discovered");
  const auto start = std::chrono::steady_clock::now();
  const DataSplits data = LoadData(config);
  const CostModel cost = BuildCostModel(config);
  const auto log_epoch = [&](const EpochStats& s) {
    log << "epoch " << s.epoch << " loss " << std::fixed << std::setprecision(4) << s.loss
        << " train_acc " << s.train_accuracy << "\n";
  };

  std::mt19937_64 train_rng = StageRng(config.seed, kStageDiscoveredTrain);
  std::vector<EpochStats> history;
  std::optional<StandaloneNetwork> net;
  if (mode == "replay") {
    const Trajectory trajectory = TrajectoryFromJson(
        config.network,
        ReadJson(OrDefault(options.trajectory, config.out / kTrajectoryFile)));
    const SuperNetwork pretrained = LoadSupernet(
        config.network, OrDefault(options.checkpoint, config.out / kSupernetCheckpoint));
    TrainOptions step = config.discovered.train;
    step.epochs = config.discovered.epochs_per_step;
    net.emplace(TrajectoryReplayFinetune(pretrained, trajectory, data.train, step,
                                         config.discovered.train.epochs, train_rng));
  } else {
    SubNetChoice choice;
    if (!options.architecture.empty() || options.trajectory.empty()) {
      choice = ChoiceFromArchitecture(
          config.network,
          ReadJson(OrDefault(options.architecture, config.out / kArchitectureFile)));
    } else {
      choice = TrajectoryFromJson(config.network, ReadJson(options.trajectory))
                   .steps.back()
                   .choice;
    }
    std::mt19937_64 init_rng = StageRng(config.seed, kStageDiscoveredInit);
    net.emplace(StandaloneNetwork::Build(config.network, choice, init_rng));
    history = TrainStandalone(*net, data.train, config.discovered.train, train_rng, log_epoch);
  }
  SaveCheckpoint(config.out / kDiscoveredCheckpoint, CollectTensors(net->parameters()));
  WriteText(config.out / kDiscoveredCurve, CurveCsv(history));

  const SubNetChoice& choice = net->choice();
  const double test_acc = EvaluateAccuracy(*net, data.test);
  const double target = ResolveTarget(config, cost);
  const double resource = cost.Total(choice);
  WriteJson(config.out / kDiscoveredMetrics,
            {{"mode", mode},
             {"metric", ResourceKindName(cost.kind())},
             {"test_accuracy", test_acc},
             {"resource", resource},
             {"target", target},
             {"meets_target", resource <= target},
             {"macs", CostModel::Macs(config.network).Total(choice)},
             {"architecture", ArchitectureToJson(config.network, choice)}});
  log << "discovered test accuracy " << test_acc << " resource " << resource << "\n";
  WriteTiming(config, "train-discovered", SecondsSince(start));
}

void CmdReport(const fs::path& run_dir, const CommandOptions& options, std::ostream& out) {
  const json supernet = ReadJson(run_dir / kSupernetMetrics);
  const json metrics = ReadJson(run_dir / kDiscoveredMetrics);
  const json trajectory = ReadJson(run_dir / kTrajectoryFile);
  const double t_supernet = ReadJson(run_dir / "timing.train-supernet.json").at("seconds");
  const double t_search = ReadJson(run_dir / "timing.search.json").at("seconds");
  const double t_discovered = ReadJson(run_dir / "timing.train-discovered.json").at("seconds");
  const double total = t_supernet + t_search + t_discovered;
  const double hours = options.gpu_hours.value_or(total / 3600.0);
  if (hours < 0.0) throw DomainError("GPU-hours must be >= 0");

  const std::string metric = metrics.at("metric");
  char buf[512];
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    out << buf;
  };
  line("run            %s\n", run_dir.string().c_str());
  line("%-14s %10s %14s %14s\n", "network", "test acc", metric.c_str(), "MACs");
  line("%-14s %10.4f %14.6g %14s\n", "full width",
       supernet.at("full_width_test_accuracy").get<double>(),
       supernet.at("full_width_resource").get<double>(), "-");
  line("%-14s %10.4f %14.6g %14.0f\n", "discovered", metrics.at("test_accuracy").get<double>(),
       metrics.at("resource").get<double>(), metrics.at("macs").get<double>());
  line("target         %.6g (%s)\n", metrics.at("target").get<double>(),
       metrics.at("meets_target").get<bool>() ? "met" : "NOT met");
  line("iterations     %d\n", static_cast<int>(trajectory.at("steps").size()) - 1);
  line("mode           %s\n", metrics.at("mode").get<std::string>().c_str());
  line("time (s)       %.2f (%.2f, %.2f, %.2f)\n", total, t_supernet, t_search, t_discovered);
  line("GPU-hours      %.4g (%s)\n", hours, options.gpu_hours ? "given" : "measured");
  line("CO2            %ld lbs\n", Co2EstimateRoundedLbs(hours));
}

}  // namespace cdnas
