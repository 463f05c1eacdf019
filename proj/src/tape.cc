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

#include "cdnas/tape.h"

#include <string>

#include "cdnas/errors.h"
#include "cdnas/ops.h"

namespace cdnas {

Tape::Node& Tape::node(Var v) {
  if (v < 0 || v >= static_cast<Var>(nodes_.size())) {
    throw StateError("tape variable " + std::to_string(v) + " not recorded");
  }
  return nodes_[v];
}

const Tensor& Tape::value(Var v) const {
  if (v < 0 || v >= static_cast<Var>(nodes_.size())) {
    throw StateError("tape variable " + std::to_string(v) + " not recorded");
  }
  return nodes_[v].value;
}

Tensor& Tape::GradOf(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Tape::Var Tape::Push(Tensor value, std::vector<Var> parents,
                     std::function<void(Tape&, Node&)> backward) {
  Node n;
  n.value = std::move(value);
  for (Var p : parents) n.needs_grad = n.needs_grad || node(p).needs_grad;
  n.parents = std::move(parents);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size()) - 1;
}

Tape::Var Tape::Input(Tensor value) { return Push(std::move(value), {}, {}); }

Tape::Var Tape::Param(Parameter& p) {
  Var v = Push(p.value, {}, {});
  nodes_[v].param = &p;
  nodes_[v].needs_grad = true;
  return v;
}

Tape::Var Tape::Conv2d(Var x, Var w, int stride) {
  Tensor out = ops::Conv2d(value(x), value(w), stride);
  return Push(std::move(out), {x, w}, [x, w, stride](Tape& t, Node& self) {
    const bool gx = t.node(x).needs_grad, gw = t.node(w).needs_grad;
    ops::Conv2dBackward(t.value(x), t.value(w), stride, self.grad,
                        gx ? &t.GradOf(x) : nullptr,
                        gw ? &t.GradOf(w) : nullptr);
  });
}

Tape::Var Tape::Dense(Var x, Var w) {
  Tensor out = ops::Dense(value(x), value(w));
  return Push(std::move(out), {x, w}, [x, w](Tape& t, Node& self) {
    const bool gx = t.node(x).needs_grad, gw = t.node(w).needs_grad;
    ops::DenseBackward(t.value(x), t.value(w), self.grad,
                       gx ? &t.GradOf(x) : nullptr,
                       gw ? &t.GradOf(w) : nullptr);
  });
}

Tape::Var Tape::AddBias(Var x, Var b) {
  Tensor out = ops::AddBias(value(x), value(b));
  return Push(std::move(out), {x, b}, [x, b](Tape& t, Node& self) {
    if (t.node(x).needs_grad) t.GradOf(x).Accumulate(self.grad);
    if (t.node(b).needs_grad) ops::AddBiasBackward(self.grad, &t.GradOf(b));
  });
}

Tape::Var Tape::Relu(Var x) {
  Tensor out = ops::Relu(value(x));
  return Push(std::move(out), {x}, [x](Tape& t, Node& self) {
    ops::ReluBackward(self.value, self.grad, &t.GradOf(x));
  });
}

Tape::Var Tape::GlobalAvgPool(Var x) {
  Tensor out = ops::GlobalAvgPool(value(x));
  return Push(std::move(out), {x}, [x](Tape& t, Node& self) {
    ops::GlobalAvgPoolBackward(self.grad, &t.GradOf(x));
  });
}

Tape::Var Tape::Add(Var a, Var b) {
  Tensor out = value(a);
  out.Accumulate(value(b));
  return Push(std::move(out), {a, b}, [a, b](Tape& t, Node& self) {
    if (t.node(a).needs_grad) t.GradOf(a).Accumulate(self.grad);
    if (t.node(b).needs_grad) t.GradOf(b).Accumulate(self.grad);
  });
}

Tape::Var Tape::Mul(Var x, const Tensor& mask) {
  const Tensor& in = value(x);
  if (!in.SameShape(mask)) {
    throw DimensionError("shape", "mask " + mask.ShapeString() +
                                      " does not match " + in.ShapeString());
  }
  Tensor out = in;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return Push(std::move(out), {x}, [x, mask](Tape& t, Node& self) {
    Tensor& g = t.GradOf(x);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

Tape::Var Tape::MulChannelMask(Var x, const Tensor& mask) {
  const Tensor& in = value(x);
  if (mask.rank() != 2 || mask.dim(0) != in.dim(0) ||
      mask.dim(1) != in.dim(1)) {
    throw DimensionError("channels", "channel mask " + mask.ShapeString() +
                                         " does not match " +
                                         in.ShapeString());
  }
  const std::size_t plane =
      in.size() / (static_cast<std::size_t>(in.dim(0)) * in.dim(1));
  Tensor out = in;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i / plane];
  return Push(std::move(out), {x}, [x, mask, plane](Tape& t, Node& self) {
    Tensor& g = t.GradOf(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * mask[i / plane];
    }
  });
}

namespace {

// Copies channels [src_begin, src_begin + count) of `src` into channels
// [dst_begin, ...) of `dst`. Both rank >= 2 with matching batch and trailing
// extents.
void CopyChannels(const Tensor& src, int src_begin, Tensor& dst, int dst_begin,
                  int count, bool accumulate) {
  const int n_batch = src.dim(0);
  const std::size_t plane =
      src.size() / (static_cast<std::size_t>(n_batch) * src.dim(1));
  for (int n = 0; n < n_batch; ++n) {
    const float* s =
        src.data() + (static_cast<std::size_t>(n) * src.dim(1) + src_begin) * plane;
    float* d =
        dst.data() + (static_cast<std::size_t>(n) * dst.dim(1) + dst_begin) * plane;
    const std::size_t len = plane * count;
    if (accumulate) {
      for (std::size_t i = 0; i < len; ++i) d[i] += s[i];
    } else {
      std::copy(s, s + len, d);
    }
  }
}

std::vector<int> WithChannels(const std::vector<int>& shape, int channels) {
  std::vector<int> s = shape;
  s[1] = channels;
  return s;
}

}  // namespace

Tape::Var Tape::PadChannels(Var x, int keep, int total) {
  const Tensor& in = value(x);
  if (keep < 0 || keep > in.dim(1) || keep > total) {
    throw DimensionError("channels", "cannot keep " + std::to_string(keep) +
                                         " of " + in.ShapeString() +
                                         " into " + std::to_string(total));
  }
  Tensor out(WithChannels(in.shape(), total));
  CopyChannels(in, 0, out, 0, keep, false);
  return Push(std::move(out), {x}, [x, keep](Tape& t, Node& self) {
    CopyChannels(self.grad, 0, t.GradOf(x), 0, keep, true);
  });
}

Tape::Var Tape::SliceChannels(Var x, int begin, int end) {
  const Tensor& in = value(x);
  if (begin < 0 || end > in.dim(1) || begin >= end) {
    throw DimensionError("channels", "bad channel slice [" +
                                         std::to_string(begin) + ", " +
                                         std::to_string(end) + ") of " +
                                         in.ShapeString());
  }
  Tensor out(WithChannels(in.shape(), end - begin));
  CopyChannels(in, begin, out, 0, end - begin, false);
  return Push(std::move(out), {x}, [x, begin, end](Tape& t, Node& self) {
    CopyChannels(self.grad, 0, t.GradOf(x), begin, end - begin, true);
  });
}

Tape::Var Tape::ConcatChannels(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.rank() != tb.rank() || ta.dim(0) != tb.dim(0) ||
      ta.size() / ta.dim(1) != tb.size() / tb.dim(1)) {
    throw DimensionError("spatial", "cannot concatenate " + ta.ShapeString() +
                                        " with " + tb.ShapeString());
  }
  const int ca = ta.dim(1), cb = tb.dim(1);
  Tensor out(WithChannels(ta.shape(), ca + cb));
  CopyChannels(ta, 0, out, 0, ca, false);
  CopyChannels(tb, 0, out, ca, cb, false);
  return Push(std::move(out), {a, b}, [a, b, ca, cb](Tape& t, Node& self) {
    if (t.node(a).needs_grad) CopyChannels(self.grad, 0, t.GradOf(a), 0, ca, true);
    if (t.node(b).needs_grad) CopyChannels(self.grad, ca, t.GradOf(b), 0, cb, true);
  });
}

Tape::Var Tape::SoftmaxCrossEntropy(Var logits, std::span<const int> labels) {
  ops::LossWithGrad lg = ops::SoftmaxCrossEntropy(value(logits), labels);
  Tensor grad = std::move(lg.grad);
  return Push(Tensor({1}, {lg.loss}), {logits},
              [logits, grad](Tape& t, Node& self) {
                Tensor& g = t.GradOf(logits);
                for (std::size_t i = 0; i < g.size(); ++i) {
                  g[i] += self.grad[0] * grad[i];
                }
              });
}

Tape::Var Tape::SquaredError(Var pred, const Tensor& target) {
  const Tensor& p = value(pred);
  if (!p.SameShape(target)) {
    throw DimensionError("shape", "target " + target.ShapeString() +
                                      " does not match " + p.ShapeString());
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - target[i];
    sum += d * d;
  }
  return Push(Tensor({1}, {static_cast<float>(sum)}), {pred},
              [pred, target](Tape& t, Node& self) {
                Tensor& g = t.GradOf(pred);
                const Tensor& pv = t.value(pred);
                for (std::size_t i = 0; i < g.size(); ++i) {
                  g[i] += self.grad[0] * 2.0f * (pv[i] - target[i]);
                }
              });
}

void Tape::Backward(Var loss) {
  if (nodes_.empty()) {
    throw StateError("backward called without a recorded forward pass");
  }
  Node& root = node(loss);
  if (root.value.size() != 1) {
    throw DimensionError("loss", "backward needs a scalar loss, got " +
                                     root.value.ShapeString());
  }
  GradOf(loss).Fill(1.0f);
  for (Var v = loss; v >= 0; --v) {
    Node& n = nodes_[v];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n);
    if (n.param) n.param->grad.Accumulate(n.grad);
  }
  nodes_.clear();
}

}  // namespace cdnas
