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

#ifndef CDNAS_TENSOR_H_
#define CDNAS_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cdnas {

// Dense row-major float32 array. Rank 4 tensors are NCHW, rank 2 are [N, D].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, float fill = 0.0f);
  Tensor(std::vector<int> shape, std::vector<float> values);

  static Tensor RandomNormal(std::vector<int> shape, float stddev,
                             std::mt19937_64& rng);
  static Tensor RandomUniform(std::vector<int> shape, float lo, float hi,
                              std::mt19937_64& rng);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // NCHW element access.
  float& at(int n, int c, int h, int w) {
    return data_[Offset4(n, c, h, w)];
  }
  const float& at(int n, int c, int h, int w) const {
    return data_[Offset4(n, c, h, w)];
  }
  // [N, D] element access.
  float& at(int n, int d) { return data_[static_cast<std::size_t>(n) * shape_[1] + d]; }
  const float& at(int n, int d) const {
    return data_[static_cast<std::size_t>(n) * shape_[1] + d];
  }

  void Fill(float v);
  // Elementwise this += other. Shapes must match.
  void Accumulate(const Tensor& other);

  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string ShapeString() const;

  // FNV-1a over the raw bytes; used for no-mutation and determinism checks.
  std::uint64_t Checksum() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t Offset4(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) *
               shape_[3] +
           w;
  }

  std::vector<int> shape_;
  std::vector<float> data_;
};

std::size_t ShapeElements(const std::vector<int>& shape);
std::string ShapeToString(const std::vector<int>& shape);

// Largest |a - b| / max(|a|, |b|, floor) over all elements.
double MaxRelativeError(const Tensor& a, const Tensor& b, double floor = 1e-12);
double MaxAbsoluteError(const Tensor& a, const Tensor& b);

}  // namespace cdnas

#endif  // CDNAS_TENSOR_H_
