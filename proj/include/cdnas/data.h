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

#ifndef CDNAS_DATA_H_
#define CDNAS_DATA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdnas/tensor.h"

namespace cdnas {

struct Dataset {
  Tensor images;            // [N, C, H, W]
  std::vector<int> labels;  // [N], each in [0, classes)
  int classes = 0;
  std::string split = "all";

  int size() const { return static_cast<int>(labels.size()); }
  int channels() const { return images.dim(1); }
  int height() const { return images.dim(2); }
  int width() const { return images.dim(3); }

  // Images at `indices`, in that order.
  Tensor Gather(std::span<const int> indices) const;
  std::vector<int> GatherLabels(std::span<const int> indices) const;
  Dataset Subset(std::span<const int> indices, std::string split_name) const;
};

struct SynthOptions {
  int classes = 4;
  int per_class = 100;
  int channels = 3;
  int height = 12;
  int width = 12;
  int blobs_per_channel = 2;
  double noise = 0.1;  // stddev of additive Gaussian noise
  std::uint64_t seed = 0;
};

// Each class gets a prototype image made of Gaussian blobs (random center,
// width and amplitude per channel); samples add i.i.d. Gaussian noise and
// clamp to [0, 1]. Labels are grouped by class in the output.
Dataset SynthClassification(const SynthOptions& options);

// Label-stratified split. Holdout size is round(N * fraction), apportioned
// across classes by largest remainder. Throws DomainError when a side would
// be empty.
std::pair<Dataset, Dataset> Split(const Dataset& data, double holdout_fraction,
                                  std::uint64_t seed);

// Raster container, little-endian:
//   bytes 0..3   magic "CDR1"
//   u32 x 5      N, C, H, W, classes
//   u8  x N*C*H*W pixels (value / 255)
//   u16 x N      labels
inline constexpr char kRasterMagic[4] = {'C', 'D', 'R', '1'};
inline constexpr std::size_t kRasterHeaderBytes = 24;

std::vector<std::uint8_t> EncodeRaster(const Dataset& data);
// Throws ParseError with the byte offset on bad magic or truncation.
Dataset DecodeRaster(std::span<const std::uint8_t> bytes);

void SaveRaster(const std::filesystem::path& path, const Dataset& data);
Dataset LoadRaster(const std::filesystem::path& path);

}  // namespace cdnas

#endif  // CDNAS_DATA_H_
