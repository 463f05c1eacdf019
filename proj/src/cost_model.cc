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

#include "cdnas/cost_model.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cdnas/errors.h"

namespace cdnas {

using nlohmann::json;

const char* ResourceKindName(ResourceKind kind) {
  return kind == ResourceKind::kLatency ? "latency" : "macs";
}

ResourceKind ParseResourceKind(const std::string& name) {
  if (name == "latency") return ResourceKind::kLatency;
  if (name == "macs") return ResourceKind::kMacs;
  throw ConfigError("metric", "unknown resource kind '" + name +
                                  "' (expected latency or macs)");
}

std::uint64_t LayerMacs(std::uint64_t in_channels, std::uint64_t filters,
                        std::uint64_t kernel, std::uint64_t out_height,
                        std::uint64_t out_width) {
  return kernel * kernel * in_channels * filters * out_height * out_width;
}

std::uint64_t DenseMacs(std::uint64_t in_features, std::uint64_t out_features) {
  return in_features * out_features;
}

void LatencyTable::Set(int layer, int kernel, int width, double ms) {
  layers_[layer][kernel][width] = ms;
}

std::optional<double> LatencyTable::Find(int layer, int kernel,
                                         int width) const {
  auto l = layers_.find(layer);
  if (l == layers_.end()) return std::nullopt;
  auto k = l->second.find(kernel);
  if (k == l->second.end()) return std::nullopt;
  auto m = k->second.find(width);
  if (m == k->second.end()) return std::nullopt;
  return m->second;
}

const LatencyTable::LayerTable& LatencyTable::layer(int index) const {
  auto it = layers_.find(index);
  if (it == layers_.end()) throw LookupError(index, -1, -1);
  return it->second;
}

double InterpolateLatency(const LatencyTable::LayerTable& table, int layer,
                          int width, int kernel) {
  auto row_it = table.find(kernel);
  if (row_it == table.end() || row_it->second.empty()) {
    throw LookupError(layer, width, kernel);
  }
  const auto& row = row_it->second;
  auto hi = row.lower_bound(width);
  if (hi == row.end()) throw LookupError(layer, width, kernel);
  if (hi->first == width) return hi->second;
  if (hi == row.begin()) throw LookupError(layer, width, kernel);
  auto lo = std::prev(hi);
  const double t = static_cast<double>(width - lo->first) /
                   static_cast<double>(hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

double LatencyTable::Lookup(int layer, int width, int kernel) const {
  if (auto v = Find(layer, kernel, width)) return *v;
  if (width == 0) {
    auto l = layers_.find(layer);
    if (l != layers_.end()) {
      for (const auto& [k, row] : l->second) {
        auto m = row.find(0);
        if (m != row.end()) return m->second;
      }
    }
  }
  if (interpolate_ && layers_.count(layer)) {
    return InterpolateLatency(layers_.at(layer), layer, width, kernel);
  }
  throw LookupError(layer, width, kernel);
}

json LatencyTable::ToJson() const {
  json j = json::object();
  for (const auto& [layer, kernels] : layers_) {
    json jl = json::object();
    for (const auto& [k, row] : kernels) {
      json jr = json::object();
      for (const auto& [m, ms] : row) jr[std::to_string(m)] = ms;
      jl[std::to_string(k)] = std::move(jr);
    }
    j[std::to_string(layer)] = std::move(jl);
  }
  if (!device.empty() || !note.empty()) {
    j["meta"] = {{"device", device}, {"note", note}};
  }
  return j;
}

namespace {

int ParseIntKey(const std::string& key, const std::string& where) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(key, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != key.size() || v < 0) {
    throw ConfigError(where, "key '" + key + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace

LatencyTable LatencyTable::FromJson(const json& j) {
  if (!j.is_object()) throw ConfigError("latency_table", "must be an object");
  LatencyTable t;
  for (const auto& [lkey, jl] : j.items()) {
    if (lkey == "meta") {
      t.device = jl.value("device", "");
      t.note = jl.value("note", "");
      continue;
    }
    const int layer = ParseIntKey(lkey, "latency_table");
    for (const auto& [kkey, jr] : jl.items()) {
      const int k = ParseIntKey(kkey, "latency_table." + lkey);
      for (const auto& [mkey, ms] : jr.items()) {
        const int m = ParseIntKey(mkey, "latency_table." + lkey + "." + kkey);
        if (!ms.is_number() || ms.get<double>() < 0.0) {
          throw ConfigError("latency_table." + lkey + "." + kkey + "." + mkey,
                            "latency must be a non-negative number");
        }
        t.Set(layer, k, m, ms.get<double>());
      }
    }
  }
  return t;
}

LatencyTable LatencyTable::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cost.table", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError("latency table " + path.string() + ": " + e.what(),
                     e.byte);
  }
  return FromJson(j);
}

void LatencyTable::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << ToJson().dump(1) << "\n";
}

LatencyTable LatencyTable::Synthetic(const NetworkSpec& spec, double scale,
                                     double offset) {
  LatencyTable t;
  t.device = "synthetic";
  t.note = "a*k^2*C*M*H*W + b";
  const auto extents = LayerOutputExtents(spec);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    for (int k : l.kernel_grid) {
      for (int m : l.width_grid) {
        const double ms =
            m == 0 ? 0.0
                   : scale * static_cast<double>(LayerMacs(
                                 l.in_channels, m, k, extents[i].height,
                                 extents[i].width)) +
                         offset;
        t.Set(l.index, k, m, ms);
      }
    }
  }
  return t;
}

CostModel::CostModel(ResourceKind kind, NetworkSpec spec, LatencyTable table)
    : kind_(kind),
      spec_(std::move(spec)),
      extents_(LayerOutputExtents(spec_)),
      table_(std::move(table)) {}

CostModel CostModel::Latency(NetworkSpec spec, LatencyTable table) {
  ValidateNetworkSpec(spec);
  for (const LayerSpec& l : spec.layers) {
    if (!table.has_layer(l.index)) {
      throw ConfigError("cost.table",
                        "no entries for layer " + std::to_string(l.index));
    }
  }
  return CostModel(ResourceKind::kLatency, std::move(spec), std::move(table));
}

CostModel CostModel::Macs(NetworkSpec spec) {
  ValidateNetworkSpec(spec);
  return CostModel(ResourceKind::kMacs, std::move(spec), LatencyTable());
}

std::vector<double> CostModel::PerLayer(const SubNetChoice& choice) const {
  ValidateChoice(spec_, choice);
  std::vector<double> out;
  out.reserve(spec_.layers.size() + 1);
  if (kind_ == ResourceKind::kLatency) {
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      out.push_back(table_.Lookup(spec_.layers[i].index,
                                  choice.layers[i].width,
                                  choice.layers[i].kernel));
    }
    return out;
  }
  int c = spec_.in_channels;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerChoice& pick = choice.layers[i];
    out.push_back(static_cast<double>(
        pick.width == 0 ? 0
                        : LayerMacs(c, pick.width, pick.kernel,
                                    extents_[i].height, extents_[i].width)));
    c = LayerOutputChannels(spec_.layers[i], c, pick.width);
  }
  out.push_back(static_cast<double>(DenseMacs(c, spec_.classes)));
  return out;
}

double CostModel::Total(const SubNetChoice& choice) const {
  double sum = 0.0;
  for (double v : PerLayer(choice)) sum += v;
  return sum;
}

double Co2EstimateLbs(double gpu_hours) {
  if (!(gpu_hours >= 0.0)) throw DomainError("GPU-hours must be >= 0");
  return kCo2LbsPerGpuHour * gpu_hours;
}

long Co2EstimateRoundedLbs(double gpu_hours) {
  return std::lround(Co2EstimateLbs(gpu_hours));
}

}  // namespace cdnas
