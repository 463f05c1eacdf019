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

#ifndef CDNAS_ERRORS_H_
#define CDNAS_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdnas {

// Tensor extents disagree. `axis` names the offending axis ("channels",
// "inner", "kernel", ...).
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(std::string axis, const std::string& what)
      : std::invalid_argument(what), axis_(std::move(axis)) {}
  const std::string& axis() const { return axis_; }

 private:
  std::string axis_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Operation called in the wrong lifecycle state.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid network / experiment configuration. `field` is the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Missing latency-table entry.
class LookupError : public std::out_of_range {
 public:
  LookupError(int layer, int width, int kernel)
      : std::out_of_range("no latency entry for layer " +
                          std::to_string(layer) + " at (M=" +
                          std::to_string(width) + ", k=" +
                          std::to_string(kernel) + ")"),
        layer_(layer),
        width_(width),
        kernel_(kernel) {}
  int layer() const { return layer_; }
  int width() const { return width_; }
  int kernel() const { return kernel_; }

 private:
  int layer_;
  int width_;
  int kernel_;
};

// A resource-reduced sample or target could not be reached.
class FeasibilityError : public std::runtime_error {
 public:
  FeasibilityError(const std::string& what, int attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// Malformed file. `offset` is the byte offset where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace cdnas

#endif  // CDNAS_ERRORS_H_
