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

#include "cdnas/tensor.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cdnas/errors.h"

namespace cdnas {

std::size_t ShapeElements(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string ShapeToString(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

void CheckExtents(const std::vector<int>& shape) {
  if (shape.empty()) throw DimensionError("rank", "tensor shape is empty");
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] < 1) {
      throw DimensionError("axis " + std::to_string(i),
                           "tensor extent must be >= 1, got shape " +
                               ShapeToString(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, float fill) : shape_(std::move(shape)) {
  CheckExtents(shape_);
  data_.assign(ShapeElements(shape_), fill);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  CheckExtents(shape_);
  if (data_.size() != ShapeElements(shape_)) {
    throw DimensionError("size", "shape " + ShapeToString(shape_) + " needs " +
                                     std::to_string(ShapeElements(shape_)) +
                                     " values, got " +
                                     std::to_string(data_.size()));
  }
}

Tensor Tensor::RandomNormal(std::vector<int> shape, float stddev,
                            std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<float> dist(0.0f, stddev);
  for (float& v : t.data_) v = dist(rng);
  return t;
}

Tensor Tensor::RandomUniform(std::vector<int> shape, float lo, float hi,
                             std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<float> dist(lo, hi);
  for (float& v : t.data_) v = dist(rng);
  return t;
}

void Tensor::Fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::Accumulate(const Tensor& other) {
  if (!SameShape(other)) {
    throw DimensionError("shape", "cannot accumulate " + other.ShapeString() +
                                      " into " + ShapeString());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

std::string Tensor::ShapeString() const { return ShapeToString(shape_); }

std::uint64_t Tensor::Checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (int d : shape_) mix(&d, sizeof d);
  mix(data_.data(), data_.size() * sizeof(float));
  return h;
}

double MaxRelativeError(const Tensor& a, const Tensor& b, double floor) {
  if (!a.SameShape(b)) {
    throw DimensionError("shape", "cannot compare " + a.ShapeString() +
                                      " with " + b.ShapeString());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    const double denom = std::max({std::fabs(x), std::fabs(y), floor});
    worst = std::max(worst, std::fabs(x - y) / denom);
  }
  return worst;
}

double MaxAbsoluteError(const Tensor& a, const Tensor& b) {
  if (!a.SameShape(b)) {
    throw DimensionError("shape", "cannot compare " + a.ShapeString() +
                                      " with " + b.ShapeString());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(static_cast<double>(a[i]) - b[i]));
  }
  return worst;
}

}  // namespace cdnas
