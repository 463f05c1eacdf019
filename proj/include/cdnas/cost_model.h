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

#ifndef CDNAS_COST_MODEL_H_
#define CDNAS_COST_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdnas/supernet.h"
#include "json.hpp"

namespace cdnas {

enum class ResourceKind { kLatency, kMacs };

const char* ResourceKindName(ResourceKind kind);
// "latency" or "macs"; throws ConfigError otherwise.
ResourceKind ParseResourceKind(const std::string& name);

// k * k * C * M * H_out * W_out.
std::uint64_t LayerMacs(std::uint64_t in_channels, std::uint64_t filters,
                        std::uint64_t kernel, std::uint64_t out_height,
                        std::uint64_t out_width);
// C * M for a dense layer.
std::uint64_t DenseMacs(std::uint64_t in_features, std::uint64_t out_features);

// Per-layer latency lookup table: layer -> kernel -> width -> milliseconds.
//
// File format (JSON), string-keyed integers:
//   {"<layer>": {"<k>": {"<M>": ms, ...}, ...}, ...,
//    "meta": {"device": "...", "note": "..."}}     <- optional
class LatencyTable {
 public:
  using KernelRow = std::map<int, double>;          // width -> ms
  using LayerTable = std::map<int, KernelRow>;      // kernel -> row

  void Set(int layer, int kernel, int width, double ms);
  std::optional<double> Find(int layer, int kernel, int width) const;
  const LayerTable& layer(int index) const;
  bool has_layer(int index) const { return layers_.count(index) > 0; }
  int num_layers() const { return static_cast<int>(layers_.size()); }

  // Exact entry, or the piecewise-linear interpolant in M when enabled.
  // Width 0 matches any kernel's M = 0 entry. Throws LookupError.
  double Lookup(int layer, int width, int kernel) const;

  bool interpolate() const { return interpolate_; }
  void set_interpolate(bool on) { interpolate_ = on; }

  std::string device;
  std::string note;

  nlohmann::json ToJson() const;
  static LatencyTable FromJson(const nlohmann::json& j);
  static LatencyTable Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  // a * k^2 * C * M * H_out * W_out + b for M > 0, and 0 at M = 0, over every
  // grid point of every layer.
  static LatencyTable Synthetic(const NetworkSpec& spec, double scale,
                                double offset);

 private:
  std::map<int, LayerTable> layers_;
  bool interpolate_ = false;
};

// Linear in M between the bracketing entries of the kernel's row; exact at
// grid points. Throws LookupError if the kernel has no row or M lies outside
// the row's range.
double InterpolateLatency(const LatencyTable::LayerTable& table, int layer,
                          int width, int kernel);

// Maps a SubNetChoice to a scalar resource. Latency sums table entries over
// the searchable layers. MACs use each layer's actual input channel count
// under the choice, plus the classifier head.
class CostModel {
 public:
  static CostModel Latency(NetworkSpec spec, LatencyTable table);
  static CostModel Macs(NetworkSpec spec);

  ResourceKind kind() const { return kind_; }
  const NetworkSpec& spec() const { return spec_; }
  const LatencyTable& table() const { return table_; }

  // One entry per searchable layer; MACs append the head as a final entry.
  std::vector<double> PerLayer(const SubNetChoice& choice) const;
  double Total(const SubNetChoice& choice) const;

 private:
  CostModel(ResourceKind kind, NetworkSpec spec, LatencyTable table);

  ResourceKind kind_;
  NetworkSpec spec_;
  std::vector<SpatialExtent> extents_;
  LatencyTable table_;
};

// 1438 lbs for 64 GPUs x 79 hours, to four decimals.
inline constexpr double kCo2LbsPerGpuHour = 0.2844;

// Throws DomainError for negative hours.
double Co2EstimateLbs(double gpu_hours);
// Rounded to the nearest pound.
long Co2EstimateRoundedLbs(double gpu_hours);

}  // namespace cdnas

#endif  // CDNAS_COST_MODEL_H_
