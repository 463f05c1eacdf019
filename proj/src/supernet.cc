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

#include "cdnas/supernet.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdnas/errors.h"
#include "cdnas/ops.h"

namespace cdnas {

using nlohmann::json;

const char* LayerKindName(LayerKind kind) {
  return kind == LayerKind::kConv ? "conv" : "dense";
}

std::vector<int> DefaultWidthGrid(int filters, int stride, int points) {
  std::vector<int> grid;
  if (points < 2) {
    grid.push_back(filters);
  } else {
    for (int i = 0; i < points; ++i) {
      grid.push_back(static_cast<int>(
          std::lround(static_cast<double>(filters) * i / (points - 1))));
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (stride != 1) std::erase(grid, 0);
  return grid;
}

std::vector<int> DefaultKernelGrid(int max_kernel) {
  if (max_kernel == 1) return {1};
  std::vector<int> grid;
  for (int k = 3; k <= max_kernel; k += 2) grid.push_back(k);
  return grid;
}

void ValidateLayerSpec(const LayerSpec& s) {
  const std::string at = "layers[" + std::to_string(s.index) + "].";
  if (s.kind != LayerKind::kConv) {
    throw ConfigError(at + "kind", "only conv layers are searchable");
  }
  if (s.in_channels < 1) throw ConfigError(at + "C", "must be >= 1");
  if (s.filters < 1) throw ConfigError(at + "T", "must be >= 1");
  if (s.max_kernel < 1 || s.max_kernel % 2 == 0) {
    throw ConfigError(at + "K", "must be a positive odd number");
  }
  if (s.stride != 1 && s.stride != 2) {
    throw ConfigError(at + "stride", "must be 1 or 2");
  }
  const auto& wg = s.width_grid;
  if (wg.empty()) throw ConfigError(at + "width_grid", "is empty");
  if (!std::is_sorted(wg.begin(), wg.end()) ||
      std::adjacent_find(wg.begin(), wg.end()) != wg.end()) {
    throw ConfigError(at + "width_grid", "must be strictly increasing");
  }
  if (wg.front() < 0 || wg.back() != s.filters) {
    throw ConfigError(at + "width_grid", "must lie in [0, T] and contain T");
  }
  if (wg.front() == 0 && !s.bypass()) {
    // Bypass across a spatial downsample is undefined.
    throw ConfigError(at + "width_grid",
                      "width 0 needs a bypass path, which stride " +
                          std::to_string(s.stride) + " layers do not have");
  }
  const auto& kg = s.kernel_grid;
  if (kg.empty()) throw ConfigError(at + "kernel_grid", "is empty");
  if (!std::is_sorted(kg.begin(), kg.end()) ||
      std::adjacent_find(kg.begin(), kg.end()) != kg.end()) {
    throw ConfigError(at + "kernel_grid", "must be strictly increasing");
  }
  for (int k : kg) {
    const bool ok = k % 2 == 1 && k <= s.max_kernel &&
                    (k >= 3 || s.max_kernel == 1);
    if (!ok) {
      throw ConfigError(at + "kernel_grid",
                        "kernel " + std::to_string(k) +
                            " is not an odd size in [3, K]");
    }
  }
  if (kg.back() != s.max_kernel) {
    throw ConfigError(at + "kernel_grid", "must contain K");
  }
}

void ValidateNetworkSpec(const NetworkSpec& spec) {
  if (spec.in_channels < 1) throw ConfigError("input.channels", "must be >= 1");
  if (spec.height < 1 || spec.width < 1) {
    throw ConfigError("input.height", "spatial extents must be >= 1");
  }
  if (spec.classes < 2) throw ConfigError("classes", "must be >= 2");
  if (spec.layers.empty()) throw ConfigError("layers", "network has no layers");
  int c = spec.in_channels;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (l.index != static_cast<int>(i)) {
      throw ConfigError("layers[" + std::to_string(i) + "].index",
                        "must equal the layer position");
    }
    ValidateLayerSpec(l);
    if (l.in_channels != c) {
      throw ConfigError("layers[" + std::to_string(i) + "].C",
                        "expected " + std::to_string(c) +
                            " (previous layer's T)");
    }
    c = l.filters;
  }
}

std::vector<SpatialExtent> LayerOutputExtents(const NetworkSpec& spec) {
  std::vector<SpatialExtent> out;
  int h = spec.height, w = spec.width;
  for (const LayerSpec& l : spec.layers) {
    h = (h + l.stride - 1) / l.stride;
    w = (w + l.stride - 1) / l.stride;
    out.push_back({h, w});
  }
  return out;
}

std::string SubNetChoice::Key() const {
  std::string key;
  for (const LayerChoice& c : layers) {
    if (!key.empty()) key += ',';
    key += std::to_string(c.width);
    if (c.width > 0) key += 'k' + std::to_string(c.kernel);
  }
  return key;
}

void ValidateChoice(const NetworkSpec& spec, const SubNetChoice& choice) {
  if (choice.layers.size() != spec.layers.size()) {
    throw ConfigError("choice", "has " + std::to_string(choice.layers.size()) +
                                    " layers, network has " +
                                    std::to_string(spec.layers.size()));
  }
  for (std::size_t i = 0; i < choice.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const LayerChoice& c = choice.layers[i];
    const std::string at = "choice[" + std::to_string(i) + "]";
    if (!std::binary_search(l.width_grid.begin(), l.width_grid.end(),
                            c.width)) {
      throw ConfigError(at + ".M", std::to_string(c.width) +
                                       " is not on the width grid");
    }
    if (c.width > 0 && !std::binary_search(l.kernel_grid.begin(),
                                           l.kernel_grid.end(), c.kernel)) {
      throw ConfigError(at + ".k", std::to_string(c.kernel) +
                                       " is not on the kernel grid");
    }
  }
}

SubNetChoice FullChoice(const NetworkSpec& spec) {
  SubNetChoice c;
  for (const LayerSpec& l : spec.layers) c.layers.push_back({l.filters, l.max_kernel});
  return c;
}

SubNetChoice MinimalChoice(const NetworkSpec& spec) {
  SubNetChoice c;
  for (const LayerSpec& l : spec.layers) {
    c.layers.push_back({l.min_width(), l.min_kernel()});
  }
  return c;
}

int CbcOutputChannels(int in_channels, int filters, int width) {
  if (in_channels < 1 || filters < 1) {
    throw DomainError("C and T must be >= 1");
  }
  if (width < 0 || width > filters) {
    throw DomainError("M = " + std::to_string(width) + " outside [0, T = " +
                      std::to_string(filters) + "]");
  }
  return std::max(std::min(in_channels, filters), width);
}

std::vector<ChannelSource> BypassChannelMap(int in_channels, int filters,
                                            int width) {
  const int z = CbcOutputChannels(in_channels, filters, width);
  std::vector<ChannelSource> map;
  map.reserve(z);
  for (int j = 0; j < z; ++j) {
    map.push_back(j < width ? ChannelSource{ChannelSource::Kind::kFilter, j}
                            : ChannelSource{ChannelSource::Kind::kInput, j});
  }
  return map;
}

int LayerOutputChannels(const LayerSpec& spec, int actual_in_channels,
                        int width) {
  if (spec.bypass()) {
    return CbcOutputChannels(actual_in_channels, spec.filters, width);
  }
  if (width < 1 || width > spec.filters) {
    throw ConfigError("layers[" + std::to_string(spec.index) + "].M",
                      "stride " + std::to_string(spec.stride) +
                          " layer needs 1 <= M <= T, got " +
                          std::to_string(width));
  }
  return width;
}

std::vector<int> ChannelFlow(const NetworkSpec& spec,
                             const SubNetChoice& choice) {
  std::vector<int> flow;
  int c = spec.in_channels;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    c = LayerOutputChannels(spec.layers[i], c, choice.layers[i].width);
    flow.push_back(c);
  }
  return flow;
}

ChannelMask::ChannelMask(int length, int ones_prefix)
    : length_(length), ones_prefix_(ones_prefix) {
  if (length < 0 || ones_prefix < 0 || ones_prefix > length) {
    throw DomainError("mask prefix " + std::to_string(ones_prefix) +
                      " outside [0, " + std::to_string(length) + "]");
  }
}

std::vector<int> ChannelMask::Bits() const {
  std::vector<int> bits(length_);
  for (int i = 0; i < length_; ++i) bits[i] = kept(i) ? 1 : 0;
  return bits;
}

std::vector<int> ChannelMask::ComplementBits() const {
  std::vector<int> bits(length_);
  for (int i = 0; i < length_; ++i) bits[i] = complement(i) ? 1 : 0;
  return bits;
}

ChannelMask OrderedDropoutMask(int width, int total) {
  return ChannelMask(total, width);
}

std::vector<int> SampleWidthAssignments(int batch, std::span<const int> grid,
                                        std::mt19937_64& rng) {
  if (batch < 1) throw DomainError("batch must be >= 1");
  if (grid.empty()) throw DomainError("width grid is empty");
  const int g = static_cast<int>(grid.size());
  std::vector<int> out;
  out.reserve(batch);
  for (int r = 0; r < batch / g; ++r) out.insert(out.end(), grid.begin(), grid.end());
  std::vector<int> rest(grid.begin(), grid.end());
  std::shuffle(rest.begin(), rest.end(), rng);
  out.insert(out.end(), rest.begin(), rest.begin() + batch % g);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

namespace {

void CheckKernel(int kernel, int max_kernel) {
  if (kernel < 1 || kernel % 2 == 0 || kernel > max_kernel ||
      (kernel < 3 && max_kernel != 1)) {
    throw DomainError("kernel " + std::to_string(kernel) +
                      " must be odd and within [3, " +
                      std::to_string(max_kernel) + "]");
  }
}

}  // namespace

Tensor SuperkernelWindow(const std::vector<int>& shape, int kernel) {
  if (shape.size() != 4 || shape[2] != shape[3]) {
    throw DimensionError("kernel", "superkernel needs [F, C, K, K] weights");
  }
  const int big = shape[2];
  CheckKernel(kernel, big);
  Tensor window(shape);
  const int off = (big - kernel) / 2;
  for (int f = 0; f < shape[0]; ++f) {
    for (int c = 0; c < shape[1]; ++c) {
      for (int y = off; y < off + kernel; ++y) {
        for (int x = off; x < off + kernel; ++x) window.at(f, c, y, x) = 1.0f;
      }
    }
  }
  return window;
}

Tensor SuperkernelMask(const Tensor& weights, int kernel) {
  Tensor window = SuperkernelWindow(weights.shape(), kernel);
  for (std::size_t i = 0; i < window.size(); ++i) window[i] *= weights[i];
  return window;
}

Tensor SliceConvWeights(const Tensor& weights, int filters, int channels,
                        int kernel) {
  if (weights.rank() != 4) {
    throw DimensionError("rank", "conv weights must be rank 4");
  }
  const int big = weights.dim(2);
  CheckKernel(kernel, big);
  if (filters < 1 || filters > weights.dim(0)) {
    throw DimensionError("filters", "cannot take " + std::to_string(filters) +
                                        " filters of " +
                                        weights.ShapeString());
  }
  if (channels < 1 || channels > weights.dim(1)) {
    throw DimensionError("channels", "cannot take " + std::to_string(channels) +
                                         " channels of " +
                                         weights.ShapeString());
  }
  Tensor out({filters, channels, kernel, kernel});
  const int off = (big - kernel) / 2;
  for (int f = 0; f < filters; ++f) {
    for (int c = 0; c < channels; ++c) {
      for (int y = 0; y < kernel; ++y) {
        for (int x = 0; x < kernel; ++x) {
          out.at(f, c, y, x) = weights.at(f, c, y + off, x + off);
        }
      }
    }
  }
  return out;
}

Tape::Var RecordCbcLayer(Tape& tape, const LayerSpec& spec, Tape::Var weights,
                         Tape::Var bias, Tape::Var input,
                         std::span<const int> widths, int kernel) {
  const Tensor& in = tape.value(input);
  const int batch = in.dim(0), c = in.dim(1), t = spec.filters;
  if (c != spec.in_channels) {
    throw DimensionError("channels", "training-mode layer " +
                                         std::to_string(spec.index) +
                                         " expects " +
                                         std::to_string(spec.in_channels) +
                                         " input channels, got " +
                                         std::to_string(c));
  }
  if (static_cast<int>(widths.size()) != batch) {
    throw DimensionError("batch", "need one width per image");
  }
  const int min_width = spec.bypass() ? 0 : 1;
  int narrowest = t;
  for (int m : widths) {
    if (m < min_width || m > t) {
      throw ConfigError("layers[" + std::to_string(spec.index) + "].M",
                        "width " + std::to_string(m) + " out of range");
    }
    narrowest = std::min(narrowest, m);
  }

  Tape::Var w = weights;
  if (kernel != spec.max_kernel) {
    w = tape.Mul(weights, SuperkernelWindow(tape.value(weights).shape(), kernel));
  }
  Tape::Var y = tape.Conv2d(input, w, spec.stride);
  y = tape.Relu(tape.AddBias(y, bias));

  Tensor keep({batch, t});
  for (int n = 0; n < batch; ++n) {
    for (int j = 0; j < widths[n]; ++j) keep.at(n, j) = 1.0f;
  }
  y = tape.MulChannelMask(y, keep);

  const int bypassable = std::min(c, t);
  if (spec.bypass() && narrowest < bypassable) {
    Tensor complement({batch, t});
    for (int n = 0; n < batch; ++n) {
      for (int j = widths[n]; j < t; ++j) complement.at(n, j) = 1.0f;
    }
    Tape::Var passed = tape.PadChannels(input, bypassable, t);
    y = tape.Add(y, tape.MulChannelMask(passed, complement));
  }
  return y;
}

Tensor CbcForward(const LayerSpec& spec, const Tensor& weights,
                  const Tensor& bias, const Tensor& input, int width,
                  int kernel, Mode mode) {
  if (mode == Mode::kTraining) {
    Tape tape;
    Tape::Var x = tape.Input(input);
    Tape::Var w = tape.Input(weights);
    Tape::Var b = tape.Input(bias);
    std::vector<int> widths(input.dim(0), width);
    return tape.value(RecordCbcLayer(tape, spec, w, b, x, widths, kernel));
  }

  const int c = input.dim(1);
  if (c < 1 || c > spec.in_channels) {
    throw DimensionError("channels", "layer " + std::to_string(spec.index) +
                                         " accepts at most " +
                                         std::to_string(spec.in_channels) +
                                         " input channels, got " +
                                         std::to_string(c));
  }
  const int z = LayerOutputChannels(spec, c, width);
  if (width == 0) return ops::SliceChannels(input, 0, z);

  Tensor sliced = SliceConvWeights(weights, width, c, kernel);
  Tensor b({width}, std::vector<float>(bias.data(), bias.data() + width));
  Tensor y = ops::Relu(ops::AddBias(ops::Conv2d(input, sliced, spec.stride), b));
  if (z > width) {
    if (spec.stride != 1) {
      throw ConfigError("layers[" + std::to_string(spec.index) + "].stride",
                        "bypass and conv paths differ in spatial extent");
    }
    y = ops::ConcatChannels(y, ops::SliceChannels(input, width, z));
  }
  return y;
}

TrainingPlan TrainingPlan::Uniform(const SubNetChoice& choice, int batch) {
  TrainingPlan plan;
  for (const LayerChoice& c : choice.layers) {
    plan.widths.emplace_back(batch, c.width);
    plan.kernels.push_back(c.kernel);
  }
  return plan;
}

// ---------------------------------------------------------------------------

namespace {

std::string WeightName(int i) { return "layers." + std::to_string(i) + ".weight"; }
std::string BiasName(int i) { return "layers." + std::to_string(i) + ".bias"; }

Tensor HeadSlice(const Tensor& head, int columns) {
  Tensor out({head.dim(0), columns});
  for (int o = 0; o < head.dim(0); ++o) {
    for (int i = 0; i < columns; ++i) out.at(o, i) = head.at(o, i);
  }
  return out;
}

Tensor Prefix(const Tensor& v, int n) {
  return Tensor({n}, std::vector<float>(v.data(), v.data() + n));
}

}  // namespace

SuperNetwork::SuperNetwork(NetworkSpec spec, std::mt19937_64& rng)
    : spec_(std::move(spec)) {
  ValidateNetworkSpec(spec_);
  for (const LayerSpec& l : spec_.layers) {
    const float fan_in =
        static_cast<float>(l.in_channels * l.max_kernel * l.max_kernel);
    weights_.emplace_back(
        WeightName(l.index),
        Tensor::RandomNormal({l.filters, l.in_channels, l.max_kernel, l.max_kernel},
                             std::sqrt(2.0f / fan_in), rng));
    biases_.emplace_back(BiasName(l.index), Tensor({l.filters}));
  }
  const int last = spec_.layers.back().filters;
  head_weight_ = Parameter(
      "head.weight",
      Tensor::RandomNormal({spec_.classes, last},
                           std::sqrt(1.0f / static_cast<float>(last)), rng));
  head_bias_ = Parameter("head.bias", Tensor({spec_.classes}));
}

std::vector<Parameter*> SuperNetwork::parameters() {
  std::vector<Parameter*> ps;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    ps.push_back(&weights_[i]);
    ps.push_back(&biases_[i]);
  }
  ps.push_back(&head_weight_);
  ps.push_back(&head_bias_);
  return ps;
}

std::vector<const Parameter*> SuperNetwork::parameters() const {
  std::vector<const Parameter*> ps;
  for (Parameter* p : const_cast<SuperNetwork*>(this)->parameters()) ps.push_back(p);
  return ps;
}

void SuperNetwork::ZeroGrad() {
  for (Parameter* p : parameters()) p->ZeroGrad();
}

Tape::Var SuperNetwork::ForwardTraining(Tape& tape, Tape::Var input,
                                        const TrainingPlan& plan) {
  if (plan.widths.size() != spec_.layers.size() ||
      plan.kernels.size() != spec_.layers.size()) {
    throw ConfigError("plan", "needs one width vector and kernel per layer");
  }
  Tape::Var x = input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    x = RecordCbcLayer(tape, spec_.layers[i], tape.Param(weights_[i]),
                       tape.Param(biases_[i]), x, plan.widths[i],
                       plan.kernels[i]);
  }
  Tape::Var pooled = tape.GlobalAvgPool(x);
  return tape.AddBias(tape.Dense(pooled, tape.Param(head_weight_)),
                      tape.Param(head_bias_));
}

Tensor SuperNetwork::ForwardTraining(const Tensor& input,
                                     const TrainingPlan& plan) {
  Tape tape;
  return tape.value(ForwardTraining(tape, tape.Input(input), plan));
}

Tensor SuperNetwork::Forward(const Tensor& input,
                             const SubNetChoice& choice) const {
  ValidateChoice(spec_, choice);
  Tensor x = input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    x = CbcForward(spec_.layers[i], weights_[i].value, biases_[i].value, x,
                   choice.layers[i].width, choice.layers[i].kernel,
                   Mode::kEvaluation);
  }
  Tensor pooled = ops::GlobalAvgPool(x);
  return ops::AddBias(ops::Dense(pooled, HeadSlice(head_weight_.value, x.dim(1))),
                      head_bias_.value);
}

StandaloneNetwork SuperNetwork::Extract(const SubNetChoice& choice) const {
  ValidateChoice(spec_, choice);
  StandaloneNetwork net;
  net.spec_ = spec_;
  net.choice_ = choice;
  int c = spec_.in_channels;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const LayerChoice& pick = choice.layers[i];
    const int z = LayerOutputChannels(l, c, pick.width);
    if (pick.width == 0 && z == c) continue;  // removed layer
    StandaloneNetwork::Layer layer;
    layer.index = l.index;
    layer.in_channels = c;
    layer.filters = pick.width;
    layer.kernel = pick.width > 0 ? pick.kernel : 0;
    layer.stride = l.stride;
    layer.bypass = z - pick.width;
    if (pick.width > 0) {
      layer.weight = Parameter(
          WeightName(l.index),
          SliceConvWeights(weights_[i].value, pick.width, c, pick.kernel));
      layer.bias = Parameter(BiasName(l.index),
                             Prefix(biases_[i].value, pick.width));
    }
    net.layers_.push_back(std::move(layer));
    c = z;
  }
  net.head_weight_ = Parameter("head.weight", HeadSlice(head_weight_.value, c));
  net.head_bias_ = Parameter("head.bias", head_bias_.value);
  return net;
}

std::uint64_t SuperNetwork::Checksum() const {
  std::uint64_t h = 0;
  for (const Parameter* p : parameters()) h = h * 1315423911u ^ p->value.Checksum();
  return h;
}

// ---------------------------------------------------------------------------

StandaloneNetwork StandaloneNetwork::Build(const NetworkSpec& spec,
                                           const SubNetChoice& choice,
                                           std::mt19937_64& rng) {
  SuperNetwork fresh(spec, rng);
  return fresh.Extract(choice);
}

std::vector<Parameter*> StandaloneNetwork::parameters() {
  std::vector<Parameter*> ps;
  for (Layer& l : layers_) {
    if (l.filters == 0) continue;
    ps.push_back(&l.weight);
    ps.push_back(&l.bias);
  }
  ps.push_back(&head_weight_);
  ps.push_back(&head_bias_);
  return ps;
}

std::vector<const Parameter*> StandaloneNetwork::parameters() const {
  std::vector<const Parameter*> ps;
  for (Parameter* p : const_cast<StandaloneNetwork*>(this)->parameters()) {
    ps.push_back(p);
  }
  return ps;
}

void StandaloneNetwork::ZeroGrad() {
  for (Parameter* p : parameters()) p->ZeroGrad();
}

Tape::Var StandaloneNetwork::Forward(Tape& tape, Tape::Var input) {
  Tape::Var x = input;
  for (Layer& l : layers_) {
    if (l.filters == 0) {
      x = tape.SliceChannels(x, 0, l.bypass);
      continue;
    }
    Tape::Var y = tape.Conv2d(x, tape.Param(l.weight), l.stride);
    y = tape.Relu(tape.AddBias(y, tape.Param(l.bias)));
    if (l.bypass > 0) {
      y = tape.ConcatChannels(
          y, tape.SliceChannels(x, l.filters, l.filters + l.bypass));
    }
    x = y;
  }
  Tape::Var pooled = tape.GlobalAvgPool(x);
  return tape.AddBias(tape.Dense(pooled, tape.Param(head_weight_)),
                      tape.Param(head_bias_));
}

Tensor StandaloneNetwork::Forward(const Tensor& input) const {
  Tensor x = input;
  for (const Layer& l : layers_) {
    if (l.filters == 0) {
      x = ops::SliceChannels(x, 0, l.bypass);
      continue;
    }
    Tensor y = ops::Relu(
        ops::AddBias(ops::Conv2d(x, l.weight.value, l.stride), l.bias.value));
    if (l.bypass > 0) {
      y = ops::ConcatChannels(
          y, ops::SliceChannels(x, l.filters, l.filters + l.bypass));
    }
    x = std::move(y);
  }
  return ops::AddBias(ops::Dense(ops::GlobalAvgPool(x), head_weight_.value),
                      head_bias_.value);
}

StandaloneNetwork StandaloneNetwork::Shrink(const SubNetChoice& smaller) const {
  ValidateChoice(spec_, smaller);
  StandaloneNetwork net;
  net.spec_ = spec_;
  net.choice_ = smaller;
  int c = spec_.in_channels;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const LayerChoice& pick = smaller.layers[i];
    const LayerChoice& had = choice_.layers[i];
    const int z = LayerOutputChannels(l, c, pick.width);
    if (pick.width == 0 && z == c) continue;
    Layer layer;
    layer.index = l.index;
    layer.in_channels = c;
    layer.filters = pick.width;
    layer.kernel = pick.width > 0 ? pick.kernel : 0;
    layer.stride = l.stride;
    layer.bypass = z - pick.width;
    if (pick.width > 0) {
      auto it = std::find_if(layers_.begin(), layers_.end(),
                             [&](const Layer& o) { return o.index == l.index; });
      if (it == layers_.end() || it->filters < pick.width ||
          had.kernel < pick.kernel || it->in_channels < c) {
        throw DimensionError(
            "layers[" + std::to_string(l.index) + "]",
            "cannot grow a layer while shrinking (" + choice_.Key() + " -> " +
                smaller.Key() + ")");
      }
      layer.weight = Parameter(
          it->weight.name,
          SliceConvWeights(it->weight.value, pick.width, c, pick.kernel));
      layer.bias = Parameter(it->bias.name, Prefix(it->bias.value, pick.width));
    }
    net.layers_.push_back(std::move(layer));
    c = z;
  }
  if (c > head_weight_.value.dim(1)) {
    throw DimensionError("head", "cannot grow the classifier input");
  }
  net.head_weight_ = Parameter("head.weight", HeadSlice(head_weight_.value, c));
  net.head_bias_ = Parameter("head.bias", head_bias_.value);
  return net;
}

// ---------------------------------------------------------------------------

json ArchitectureToJson(const NetworkSpec& spec, const SubNetChoice& choice) {
  ValidateChoice(spec, choice);
  json arch;
  arch["format"] = "cdnas-architecture";
  arch["version"] = kArchitectureVersion;
  arch["input"] = {{"channels", spec.in_channels},
                   {"height", spec.height},
                   {"width", spec.width}};
  arch["classes"] = spec.classes;
  json layers = json::array();
  int c = spec.in_channels;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const LayerChoice& pick = choice.layers[i];
    const int z = LayerOutputChannels(l, c, pick.width);
    layers.push_back({{"index", l.index},
                      {"kind", LayerKindName(l.kind)},
                      {"C", c},
                      {"T", l.filters},
                      {"M", pick.width},
                      {"k", pick.kernel},
                      {"stride", l.stride},
                      {"Z", z}});
    c = z;
  }
  layers.push_back({{"index", static_cast<int>(spec.layers.size())},
                    {"kind", LayerKindName(LayerKind::kDense)},
                    {"C", c},
                    {"T", spec.classes},
                    {"M", spec.classes},
                    {"k", 1},
                    {"stride", 1},
                    {"Z", spec.classes}});
  arch["layers"] = std::move(layers);
  return arch;
}

SubNetChoice ChoiceFromArchitecture(const NetworkSpec& spec, const json& arch) {
  if (arch.value("format", "") != "cdnas-architecture") {
    throw ConfigError("format", "not a cdnas architecture");
  }
  if (arch.value("version", 0) != kArchitectureVersion) {
    throw ConfigError("version", "unsupported architecture version");
  }
  SubNetChoice choice;
  for (const json& l : arch.at("layers")) {
    if (l.at("kind").get<std::string>() != "conv") continue;
    const int idx = l.at("index").get<int>();
    if (idx != static_cast<int>(choice.layers.size()) ||
        idx >= static_cast<int>(spec.layers.size())) {
      throw ConfigError("layers[" + std::to_string(idx) + "].index",
                        "does not match the network spec");
    }
    const LayerSpec& s = spec.layers[idx];
    if (l.at("T").get<int>() != s.filters || l.at("stride").get<int>() != s.stride) {
      throw ConfigError("layers[" + std::to_string(idx) + "]",
                        "T/stride differ from the network spec");
    }
    choice.layers.push_back({l.at("M").get<int>(), l.at("k").get<int>()});
  }
  ValidateChoice(spec, choice);
  return choice;
}

}  // namespace cdnas
