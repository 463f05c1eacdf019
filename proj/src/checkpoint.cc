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

#include "cdnas/checkpoint.h"

#include <fstream>
#include <sstream>

#include "cdnas/errors.h"
#include "json.hpp"

namespace cdnas {

using nlohmann::json;

std::string SerializeCheckpoint(const TensorMap& tensors) {
  json root;
  root["format"] = "cdnas-checkpoint";
  root["version"] = kCheckpointVersion;
  json& out = root["tensors"] = json::object();
  for (const auto& [name, t] : tensors) {
    json entry;
    entry["shape"] = t.shape();
    json data = json::array();
    for (float v : t.values()) data.push_back(v);
    entry["data"] = std::move(data);
    out[name] = std::move(entry);
  }
  return root.dump() + "\n";
}

TensorMap ParseCheckpoint(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what(),
                     e.byte);
  }
  if (root.value("format", "") != "cdnas-checkpoint") {
    throw ConfigError("format", "not a cdnas checkpoint");
  }
  if (root.value("version", 0) != kCheckpointVersion) {
    throw ConfigError("version", "unsupported checkpoint version");
  }
  TensorMap tensors;
  for (const auto& [name, entry] : root.at("tensors").items()) {
    auto shape = entry.at("shape").get<std::vector<int>>();
    std::vector<float> data;
    data.reserve(entry.at("data").size());
    for (const auto& v : entry.at("data")) data.push_back(v.get<float>());
    tensors.emplace(name, Tensor(std::move(shape), std::move(data)));
  }
  return tensors;
}

void SaveCheckpoint(const std::filesystem::path& path,
                    const TensorMap& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << SerializeCheckpoint(tensors);
}

TensorMap LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseCheckpoint(ss.str());
}

TensorMap CollectTensors(std::span<const Parameter* const> params) {
  TensorMap m;
  for (const Parameter* p : params) m.emplace(p->name, p->value);
  return m;
}

void RestoreTensors(const TensorMap& tensors,
                    std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    auto it = tensors.find(p->name);
    if (it == tensors.end()) {
      throw ConfigError(p->name, "missing from checkpoint");
    }
    if (!it->second.SameShape(p->value)) {
      throw DimensionError(p->name, "checkpoint shape " +
                                        it->second.ShapeString() +
                                        " != expected " +
                                        p->value.ShapeString());
    }
    p->value = it->second;
    p->grad = Tensor(p->value.shape());
  }
  if (tensors.size() != params.size()) {
    throw ConfigError("tensors", "checkpoint has " +
                                     std::to_string(tensors.size()) +
                                     " tensors, network expects " +
                                     std::to_string(params.size()));
  }
}

}  // namespace cdnas
