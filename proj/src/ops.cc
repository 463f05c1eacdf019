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

#include "cdnas/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdnas/errors.h"

namespace cdnas::ops {
namespace {

void RequireRank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError("rank", std::string(what) + " must have rank " +
                                     std::to_string(rank) + ", got " +
                                     t.ShapeString());
  }
}

int OutExtent(int in, int stride) { return (in + stride - 1) / stride; }

void CheckConvShapes(const Tensor& input, const Tensor& weights, int stride) {
  RequireRank(input, 4, "conv input");
  RequireRank(weights, 4, "conv weights");
  if (stride < 1) throw DomainError("conv stride must be positive");
  if (input.dim(1) != weights.dim(1)) {
    throw DimensionError(
        "channels", "conv input has " + std::to_string(input.dim(1)) +
                        " channels but weights expect " +
                        std::to_string(weights.dim(1)));
  }
  if (weights.dim(2) != weights.dim(3) || weights.dim(2) % 2 == 0) {
    throw DimensionError("kernel", "conv kernel must be square and odd, got " +
                                       weights.ShapeString());
  }
}

}  // namespace

Tensor Conv2d(const Tensor& input, const Tensor& weights, int stride) {
  CheckConvShapes(input, weights, stride);
  const int n_batch = input.dim(0), chans = input.dim(1), h = input.dim(2),
            w = input.dim(3);
  const int filters = weights.dim(0), k = weights.dim(2), pad = (k - 1) / 2;
  const int oh = OutExtent(h, stride), ow = OutExtent(w, stride);
  Tensor out({n_batch, filters, oh, ow});
  for (int n = 0; n < n_batch; ++n) {
    for (int f = 0; f < filters; ++f) {
      float* dst = &out.at(n, f, 0, 0);
      for (int c = 0; c < chans; ++c) {
        const float* src = &input.at(n, c, 0, 0);
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const float wv = weights.at(f, c, ky, kx);
            if (wv == 0.0f) continue;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              const float* row = src + static_cast<std::size_t>(iy) * w;
              float* orow = dst + static_cast<std::size_t>(oy) * ow;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= w) continue;
                orow[ox] += wv * row[ix];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

void Conv2dBackward(const Tensor& input, const Tensor& weights, int stride,
                    const Tensor& grad_out, Tensor* grad_input,
                    Tensor* grad_weights) {
  CheckConvShapes(input, weights, stride);
  const int n_batch = input.dim(0), chans = input.dim(1), h = input.dim(2),
            w = input.dim(3);
  const int filters = weights.dim(0), k = weights.dim(2), pad = (k - 1) / 2;
  const int oh = OutExtent(h, stride), ow = OutExtent(w, stride);
  if (grad_out.shape() != std::vector<int>{n_batch, filters, oh, ow}) {
    throw DimensionError("grad", "conv grad_out shape " +
                                     grad_out.ShapeString() + " mismatch");
  }
  for (int n = 0; n < n_batch; ++n) {
    for (int f = 0; f < filters; ++f) {
      const float* g = &grad_out.at(n, f, 0, 0);
      for (int c = 0; c < chans; ++c) {
        const float* src = &input.at(n, c, 0, 0);
        float* gsrc = grad_input ? &grad_input->at(n, c, 0, 0) : nullptr;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const float wv = weights.at(f, c, ky, kx);
            float acc = 0.0f;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              const std::size_t irow = static_cast<std::size_t>(iy) * w;
              const float* grow = g + static_cast<std::size_t>(oy) * ow;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= w) continue;
                acc += grow[ox] * src[irow + ix];
                if (gsrc) gsrc[irow + ix] += grow[ox] * wv;
              }
            }
            if (grad_weights) grad_weights->at(f, c, ky, kx) += acc;
          }
        }
      }
    }
  }
}

Tensor Dense(const Tensor& input, const Tensor& weights) {
  RequireRank(input, 2, "dense input");
  RequireRank(weights, 2, "dense weights");
  if (input.dim(1) != weights.dim(1)) {
    throw DimensionError("inner", "dense input width " +
                                      std::to_string(input.dim(1)) +
                                      " != weight width " +
                                      std::to_string(weights.dim(1)));
  }
  const int n_batch = input.dim(0), d = input.dim(1), o = weights.dim(0);
  Tensor out({n_batch, o});
  for (int n = 0; n < n_batch; ++n) {
    for (int j = 0; j < o; ++j) {
      float acc = 0.0f;
      for (int i = 0; i < d; ++i) acc += input.at(n, i) * weights.at(j, i);
      out.at(n, j) = acc;
    }
  }
  return out;
}

void DenseBackward(const Tensor& input, const Tensor& weights,
                   const Tensor& grad_out, Tensor* grad_input,
                   Tensor* grad_weights) {
  const int n_batch = input.dim(0), d = input.dim(1), o = weights.dim(0);
  for (int n = 0; n < n_batch; ++n) {
    for (int j = 0; j < o; ++j) {
      const float g = grad_out.at(n, j);
      for (int i = 0; i < d; ++i) {
        if (grad_input) grad_input->at(n, i) += g * weights.at(j, i);
        if (grad_weights) grad_weights->at(j, i) += g * input.at(n, i);
      }
    }
  }
}

Tensor AddBias(const Tensor& input, const Tensor& bias) {
  if (input.rank() < 2 || bias.rank() != 1 || bias.dim(0) != input.dim(1)) {
    throw DimensionError("channels", "bias " + bias.ShapeString() +
                                         " does not match input " +
                                         input.ShapeString());
  }
  Tensor out = input;
  const int n_batch = input.dim(0), chans = input.dim(1);
  const std::size_t plane = input.size() / (static_cast<std::size_t>(n_batch) * chans);
  float* p = out.data();
  for (int n = 0; n < n_batch; ++n) {
    for (int c = 0; c < chans; ++c) {
      const float b = bias[c];
      for (std::size_t i = 0; i < plane; ++i) *p++ += b;
    }
  }
  return out;
}

void AddBiasBackward(const Tensor& grad_out, Tensor* grad_bias) {
  const int n_batch = grad_out.dim(0), chans = grad_out.dim(1);
  const std::size_t plane =
      grad_out.size() / (static_cast<std::size_t>(n_batch) * chans);
  const float* g = grad_out.data();
  for (int n = 0; n < n_batch; ++n) {
    for (int c = 0; c < chans; ++c) {
      float acc = 0.0f;
      for (std::size_t i = 0; i < plane; ++i) acc += *g++;
      (*grad_bias)[c] += acc;
    }
  }
}

Tensor Relu(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.values()) v = v > 0.0f ? v : 0.0f;
  return out;
}

void ReluBackward(const Tensor& output, const Tensor& grad_out,
                  Tensor* grad_input) {
  for (std::size_t i = 0; i < output.size(); ++i) {
    if (output[i] > 0.0f) (*grad_input)[i] += grad_out[i];
  }
}

Tensor GlobalAvgPool(const Tensor& input) {
  RequireRank(input, 4, "pool input");
  const int n_batch = input.dim(0), chans = input.dim(1);
  const int plane = input.dim(2) * input.dim(3);
  Tensor out({n_batch, chans});
  for (int n = 0; n < n_batch; ++n) {
    for (int c = 0; c < chans; ++c) {
      const float* src = &input.at(n, c, 0, 0);
      float acc = 0.0f;
      for (int i = 0; i < plane; ++i) acc += src[i];
      out.at(n, c) = acc / static_cast<float>(plane);
    }
  }
  return out;
}

void GlobalAvgPoolBackward(const Tensor& grad_out, Tensor* grad_input) {
  const int n_batch = grad_input->dim(0), chans = grad_input->dim(1);
  const int plane = grad_input->dim(2) * grad_input->dim(3);
  for (int n = 0; n < n_batch; ++n) {
    for (int c = 0; c < chans; ++c) {
      const float g = grad_out.at(n, c) / static_cast<float>(plane);
      float* dst = &grad_input->at(n, c, 0, 0);
      for (int i = 0; i < plane; ++i) dst[i] += g;
    }
  }
}

Tensor SliceChannels(const Tensor& input, int begin, int end) {
  if (input.rank() < 2 || begin < 0 || end > input.dim(1) || begin >= end) {
    throw DimensionError("channels", "bad channel slice [" +
                                         std::to_string(begin) + ", " +
                                         std::to_string(end) + ") of " +
                                         input.ShapeString());
  }
  std::vector<int> shape = input.shape();
  shape[1] = end - begin;
  Tensor out(shape);
  const std::size_t plane =
      input.size() / (static_cast<std::size_t>(input.dim(0)) * input.dim(1));
  for (int n = 0; n < input.dim(0); ++n) {
    const float* src =
        input.data() +
        (static_cast<std::size_t>(n) * input.dim(1) + begin) * plane;
    std::copy(src, src + plane * (end - begin),
              out.data() + static_cast<std::size_t>(n) * shape[1] * plane);
  }
  return out;
}

Tensor ConcatChannels(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() < 2 || a.dim(0) != b.dim(0) ||
      a.size() / a.dim(1) != b.size() / b.dim(1)) {
    throw DimensionError("spatial", "cannot concatenate " + a.ShapeString() +
                                        " with " + b.ShapeString());
  }
  std::vector<int> shape = a.shape();
  shape[1] = a.dim(1) + b.dim(1);
  Tensor out(shape);
  const std::size_t pa = a.size() / a.dim(0), pb = b.size() / b.dim(0);
  float* dst = out.data();
  for (int n = 0; n < a.dim(0); ++n) {
    dst = std::copy(a.data() + n * pa, a.data() + (n + 1) * pa, dst);
    dst = std::copy(b.data() + n * pb, b.data() + (n + 1) * pb, dst);
  }
  return out;
}

Tensor Softmax(const Tensor& logits) {
  RequireRank(logits, 2, "logits");
  Tensor out = logits;
  const int n_batch = logits.dim(0), classes = logits.dim(1);
  for (int n = 0; n < n_batch; ++n) {
    float mx = logits.at(n, 0);
    for (int j = 1; j < classes; ++j) mx = std::max(mx, logits.at(n, j));
    double sum = 0.0;
    for (int j = 0; j < classes; ++j) {
      out.at(n, j) = std::exp(logits.at(n, j) - mx);
      sum += out.at(n, j);
    }
    for (int j = 0; j < classes; ++j) {
      out.at(n, j) = static_cast<float>(out.at(n, j) / sum);
    }
  }
  return out;
}

LossWithGrad SoftmaxCrossEntropy(const Tensor& logits,
                                 std::span<const int> labels) {
  RequireRank(logits, 2, "logits");
  const int n_batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<int>(labels.size()) != n_batch) {
    throw DimensionError("batch", "got " + std::to_string(labels.size()) +
                                      " labels for " +
                                      std::to_string(n_batch) + " logits rows");
  }
  LossWithGrad result;
  result.grad = Tensor(logits.shape());
  double total = 0.0;
  for (int n = 0; n < n_batch; ++n) {
    const int y = labels[n];
    if (y < 0 || y >= classes) {
      throw DomainError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(classes) + ")");
    }
    double mx = logits.at(n, 0);
    for (int j = 1; j < classes; ++j) mx = std::max<double>(mx, logits.at(n, j));
    double sum = 0.0;
    for (int j = 0; j < classes; ++j) sum += std::exp(logits.at(n, j) - mx);
    const double log_z = mx + std::log(sum);
    total += log_z - logits.at(n, y);
    for (int j = 0; j < classes; ++j) {
      const double p = std::exp(logits.at(n, j) - log_z);
      result.grad.at(n, j) =
          static_cast<float>((p - (j == y ? 1.0 : 0.0)) / n_batch);
    }
  }
  result.loss = static_cast<float>(std::max(0.0, total / n_batch));
  return result;
}

}  // namespace cdnas::ops
