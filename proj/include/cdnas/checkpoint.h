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

#ifndef CDNAS_CHECKPOINT_H_
#define CDNAS_CHECKPOINT_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include "cdnas/tape.h"
#include "cdnas/tensor.h"

// Weight checkpoint file, JSON:
//
//   {"format": "cdnas-checkpoint", "version": 1,
//    "tensors": {"<name>": {"shape": [..], "data": [..]}, ...}}
//
// Names are sorted (std::map order). Floats are written with enough digits
// to round-trip exactly, so save -> load -> save is byte-identical.
namespace cdnas {

inline constexpr int kCheckpointVersion = 1;

using TensorMap = std::map<std::string, Tensor>;

std::string SerializeCheckpoint(const TensorMap& tensors);
TensorMap ParseCheckpoint(const std::string& text);

void SaveCheckpoint(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap LoadCheckpoint(const std::filesystem::path& path);

TensorMap CollectTensors(std::span<const Parameter* const> params);
// Copies values by name. Throws ConfigError on a missing name and
// DimensionError on a shape mismatch.
void RestoreTensors(const TensorMap& tensors, std::span<Parameter* const> params);

}  // namespace cdnas

#endif  // CDNAS_CHECKPOINT_H_
