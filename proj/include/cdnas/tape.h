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

#ifndef CDNAS_TAPE_H_
#define CDNAS_TAPE_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cdnas/tensor.h"

namespace cdnas {

// A trainable tensor and its gradient. Gradients accumulate across backward
// passes until ZeroGrad() is called.
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void ZeroGrad() { grad.Fill(0.0f); }

  std::string name;
  Tensor value;
  Tensor grad;
};

// Records a forward pass and replays it in reverse. One tape per pass:
// Backward() consumes the recording.
class Tape {
 public:
  using Var = int;

  Var Input(Tensor value);
  Var Param(Parameter& p);

  Var Conv2d(Var x, Var w, int stride);
  Var Dense(Var x, Var w);
  Var AddBias(Var x, Var b);
  Var Relu(Var x);
  Var GlobalAvgPool(Var x);
  Var Add(Var a, Var b);
  // Elementwise product with a constant of the same shape.
  Var Mul(Var x, const Tensor& mask);
  // x [N, C, ...] times mask [N, C], broadcast over trailing axes.
  Var MulChannelMask(Var x, const Tensor& mask);
  // Keeps channels [0, keep) of x and zero-pads to `total` channels.
  Var PadChannels(Var x, int keep, int total);
  // Channels [begin, end) of x.
  Var SliceChannels(Var x, int begin, int end);
  Var ConcatChannels(Var a, Var b);
  // Mean softmax cross entropy; scalar [1].
  Var SoftmaxCrossEntropy(Var logits, std::span<const int> labels);
  // sum((pred - target)^2); scalar [1].
  Var SquaredError(Var pred, const Tensor& target);

  const Tensor& value(Var v) const;

  // Reverse pass from a scalar loss. Throws StateError when nothing has been
  // recorded (or the recording was already consumed).
  void Backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    std::vector<Var> parents;
    bool needs_grad = false;
    std::function<void(Tape&, Node&)> backward;
  };

  Var Push(Tensor value, std::vector<Var> parents,
           std::function<void(Tape&, Node&)> backward);
  Node& node(Var v);
  Tensor& GradOf(Var v);

  std::vector<Node> nodes_;
};

}  // namespace cdnas

#endif  // CDNAS_TAPE_H_
