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

#ifndef CDNAS_OPS_H_
#define CDNAS_OPS_H_

#include <span>

#include "cdnas/tensor.h"

// Stateless forward and backward kernels. Backward kernels accumulate into
// the gradient tensors they are handed (+=), never overwrite.
namespace cdnas::ops {

// Same-padded convolution. input [N, C, H, W], weights [F, C, k, k], k odd.
// Output [N, F, ceil(H / stride), ceil(W / stride)], zero padding (k - 1) / 2.
Tensor Conv2d(const Tensor& input, const Tensor& weights, int stride);
void Conv2dBackward(const Tensor& input, const Tensor& weights, int stride,
                    const Tensor& grad_out, Tensor* grad_input,
                    Tensor* grad_weights);

// input [N, D], weights [O, D] -> [N, O].
Tensor Dense(const Tensor& input, const Tensor& weights);
void DenseBackward(const Tensor& input, const Tensor& weights,
                   const Tensor& grad_out, Tensor* grad_input,
                   Tensor* grad_weights);

// Adds bias[c] to every element of channel c (axis 1) of an NCHW or ND tensor.
Tensor AddBias(const Tensor& input, const Tensor& bias);
void AddBiasBackward(const Tensor& grad_out, Tensor* grad_bias);

Tensor Relu(const Tensor& input);
// Gradient passes where the forward output was positive.
void ReluBackward(const Tensor& output, const Tensor& grad_out,
                  Tensor* grad_input);

// [N, C, H, W] -> [N, C].
Tensor GlobalAvgPool(const Tensor& input);
void GlobalAvgPoolBackward(const Tensor& grad_out, Tensor* grad_input);

// Channels [begin, end) of an NCHW or ND tensor.
Tensor SliceChannels(const Tensor& input, int begin, int end);
// Concatenation along the channel axis.
Tensor ConcatChannels(const Tensor& a, const Tensor& b);

// Row-wise softmax of [N, O] logits.
Tensor Softmax(const Tensor& logits);

struct LossWithGrad {
  float loss = 0.0f;
  Tensor grad;  // d(loss) / d(logits)
};

// Mean cross entropy over the batch. Throws DomainError for labels outside
// [0, classes).
LossWithGrad SoftmaxCrossEntropy(const Tensor& logits,
                                 std::span<const int> labels);

}  // namespace cdnas::ops

#endif  // CDNAS_OPS_H_
