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

#ifndef CDNAS_SUPERNET_H_
#define CDNAS_SUPERNET_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cdnas/tape.h"
#include "cdnas/tensor.h"
#include "json.hpp"

namespace cdnas {

enum class LayerKind { kConv, kDense };

const char* LayerKindName(LayerKind kind);

// Static description of one searchable layer.
//
//   in_channels  C, input channels of the full network
//   filters      T, initial filter count; also caps how many input channels
//                may be bypassed
//   max_kernel   K, odd
//   width_grid   allowed filter counts M, sorted, contains T
//   kernel_grid  allowed odd kernel sizes, sorted, contains K
//
// Only stride-1 layers carry channel-level bypass connections. A stride-2
// layer behaves as an ordinary prunable convolution (Z = M, M >= 1).
struct LayerSpec {
  int index = 0;
  LayerKind kind = LayerKind::kConv;
  int in_channels = 1;
  int filters = 1;
  int max_kernel = 3;
  int stride = 1;
  std::vector<int> width_grid;
  std::vector<int> kernel_grid;

  bool bypass() const { return stride == 1; }
  int min_width() const { return width_grid.front(); }
  int min_kernel() const { return kernel_grid.front(); }
};

// 9 uniformly spaced widths over [0, T] by default, rounded, de-duplicated.
// Zero is dropped for layers without bypass.
std::vector<int> DefaultWidthGrid(int filters, int stride, int points = 9);
// Odd sizes 3, 5, ..., K (just {1} when K == 1).
std::vector<int> DefaultKernelGrid(int max_kernel);

// Throws ConfigError naming the field on violation.
void ValidateLayerSpec(const LayerSpec& spec);

struct NetworkSpec {
  int in_channels = 1;
  int height = 1;
  int width = 1;
  int classes = 2;
  std::vector<LayerSpec> layers;
};

// Checks every layer and that layer i's C equals layer i-1's T.
void ValidateNetworkSpec(const NetworkSpec& spec);

struct SpatialExtent {
  int height;
  int width;
};
// Output extent of every layer (ceil division by the stride chain).
std::vector<SpatialExtent> LayerOutputExtents(const NetworkSpec& spec);

struct LayerChoice {
  int width = 0;   // M
  int kernel = 0;  // k, ignored when width == 0

  friend bool operator==(const LayerChoice& a, const LayerChoice& b) {
    return a.width == b.width && (a.width == 0 || a.kernel == b.kernel);
  }
};

// One (M, k) per searchable layer. The search's decision variable.
struct SubNetChoice {
  std::vector<LayerChoice> layers;

  // Canonical text key; removed layers print without a kernel.
  std::string Key() const;

  friend bool operator==(const SubNetChoice& a, const SubNetChoice& b) {
    return a.layers == b.layers;
  }
};

// Throws ConfigError when a (M, k) pair is not on the layer's grids.
void ValidateChoice(const NetworkSpec& spec, const SubNetChoice& choice);
SubNetChoice FullChoice(const NetworkSpec& spec);
SubNetChoice MinimalChoice(const NetworkSpec& spec);

// ---------------------------------------------------------------------------
// Channel-level bypass arithmetic.

// Z = max(min(C, T), M). Throws DomainError unless C >= 1, T >= 1 and
// 0 <= M <= T.
int CbcOutputChannels(int in_channels, int filters, int width);

struct ChannelSource {
  enum class Kind { kFilter, kInput };
  Kind kind;
  int index;

  friend bool operator==(const ChannelSource&, const ChannelSource&) = default;
};

// Where each of the Z output channels comes from: filter j for j < M, input
// channel j for M <= j < min(C, T).
std::vector<ChannelSource> BypassChannelMap(int in_channels, int filters,
                                            int width);

// Output channels of a layer given its actual input channel count.
int LayerOutputChannels(const LayerSpec& spec, int actual_in_channels,
                        int width);

// Output channel count of every layer under `choice`.
std::vector<int> ChannelFlow(const NetworkSpec& spec,
                             const SubNetChoice& choice);

// Prefix mask: element i is kept iff i < ones_prefix.
class ChannelMask {
 public:
  ChannelMask(int length, int ones_prefix);

  int length() const { return length_; }
  int ones_prefix() const { return ones_prefix_; }
  bool kept(int i) const { return i < ones_prefix_; }
  bool complement(int i) const { return i >= ones_prefix_; }
  std::vector<int> Bits() const;
  std::vector<int> ComplementBits() const;

 private:
  int length_;
  int ones_prefix_;
};

// Ordered dropout: keep the first `width` of `total` channels.
ChannelMask OrderedDropoutMask(int width, int total);

// Per-image widths for one layer. Every grid value is used floor(N / |grid|)
// or ceil(N / |grid|) times; order is shuffled.
std::vector<int> SampleWidthAssignments(int batch, std::span<const int> grid,
                                        std::mt19937_64& rng);

// 0/1 tensor [F, C, K, K] selecting the centered k x k window.
Tensor SuperkernelWindow(const std::vector<int>& weight_shape, int kernel);
// Weights with every tap outside the centered k x k window zeroed.
Tensor SuperkernelMask(const Tensor& weights, int kernel);
// First `filters` filters, first `channels` channels, centered k x k window.
Tensor SliceConvWeights(const Tensor& weights, int filters, int channels,
                        int kernel);

// ---------------------------------------------------------------------------
// Layer forward with bypass.

enum class Mode { kTraining, kEvaluation };

// One CBC layer: relu(conv(x) + bias) on the kept filters, bypassed input
// channels after them.
//
// kTraining: input has the full C channels; output has T channels computed
//   as conv * OD(M) + pad(input) * complement(OD(M)), with zeros at channels
//   >= Z. Kernel size realized by superkernel masking.
// kEvaluation: input has c <= C channels; weights are sliced to
//   [M, c, k, k] and the output has exactly Z = LayerOutputChannels(c, M)
//   channels.
Tensor CbcForward(const LayerSpec& spec, const Tensor& weights,
                  const Tensor& bias, const Tensor& input, int width,
                  int kernel, Mode mode);

// Records the training-mode layer on `tape` with a width per image.
Tape::Var RecordCbcLayer(Tape& tape, const LayerSpec& spec, Tape::Var weights,
                         Tape::Var bias, Tape::Var input,
                         std::span<const int> widths, int kernel);

// ---------------------------------------------------------------------------

class StandaloneNetwork;

// Per-image widths and per-layer kernel sizes for one training batch.
struct TrainingPlan {
  std::vector<std::vector<int>> widths;  // [layer][image]
  std::vector<int> kernels;              // [layer]

  // Every image of a batch of `batch` uses `choice`.
  static TrainingPlan Uniform(const SubNetChoice& choice, int batch);
};

// Shared full-size weights. Every sub-network is a prefix slice of these.
class SuperNetwork {
 public:
  SuperNetwork(NetworkSpec spec, std::mt19937_64& rng);

  const NetworkSpec& spec() const { return spec_; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void ZeroGrad();

  Parameter& layer_weight(int i) { return weights_[i]; }
  const Parameter& layer_weight(int i) const { return weights_[i]; }
  Parameter& layer_bias(int i) { return biases_[i]; }
  const Parameter& layer_bias(int i) const { return biases_[i]; }
  const Parameter& head_weight() const { return head_weight_; }
  const Parameter& head_bias() const { return head_bias_; }

  // Training-mode graph (ordered dropout, bypass complement masks,
  // superkernel masks). Returns logits [N, classes].
  Tape::Var ForwardTraining(Tape& tape, Tape::Var input,
                            const TrainingPlan& plan);
  Tensor ForwardTraining(const Tensor& input, const TrainingPlan& plan);

  // Evaluation: slices weights for `choice` on the fly. Never mutates.
  Tensor Forward(const Tensor& input, const SubNetChoice& choice) const;

  // Standalone copy of the slices `choice` selects.
  StandaloneNetwork Extract(const SubNetChoice& choice) const;

  std::uint64_t Checksum() const;

 private:
  NetworkSpec spec_;
  std::vector<Parameter> weights_;
  std::vector<Parameter> biases_;
  Parameter head_weight_;
  Parameter head_bias_;
};

// A concrete sub-network with its own weights. Layers whose filters were all
// removed are dropped; if such a layer also narrowed the channel count
// (T < C) a weightless truncation step remains in its place.
class StandaloneNetwork {
 public:
  struct Layer {
    int index = 0;
    int in_channels = 0;
    int filters = 0;
    int kernel = 0;
    int stride = 1;
    int bypass = 0;  // input channels [filters, filters + bypass) pass through
    Parameter weight;
    Parameter bias;

    int out_channels() const { return filters + bypass; }
  };

  // Fresh random initialization of the architecture `choice` selects.
  static StandaloneNetwork Build(const NetworkSpec& spec,
                                 const SubNetChoice& choice,
                                 std::mt19937_64& rng);

  const NetworkSpec& spec() const { return spec_; }
  const SubNetChoice& choice() const { return choice_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const Parameter& head_weight() const { return head_weight_; }
  const Parameter& head_bias() const { return head_bias_; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void ZeroGrad();

  Tape::Var Forward(Tape& tape, Tape::Var input);
  Tensor Forward(const Tensor& input) const;

  // Reuses the overlapping slices of this network's weights for a smaller
  // choice. Throws DimensionError if any layer would grow.
  StandaloneNetwork Shrink(const SubNetChoice& smaller) const;

 private:
  friend class SuperNetwork;
  StandaloneNetwork() = default;

  NetworkSpec spec_;
  SubNetChoice choice_;
  std::vector<Layer> layers_;
  Parameter head_weight_;
  Parameter head_bias_;
};

// ---------------------------------------------------------------------------
// Architecture JSON:
//   {"format": "cdnas-architecture", "version": 1,
//    "input": {"channels", "height", "width"}, "classes": n,
//    "layers": [{"index", "kind", "C", "T", "M", "k", "stride", "Z"}, ...]}
// C is the layer's actual input channel count under the choice. The last
// entry is the dense classifier head (kind "dense", M = classes).

inline constexpr int kArchitectureVersion = 1;

nlohmann::json ArchitectureToJson(const NetworkSpec& spec,
                                  const SubNetChoice& choice);
// Reads the (M, k) per searchable layer and checks it against `spec`.
SubNetChoice ChoiceFromArchitecture(const NetworkSpec& spec,
                                    const nlohmann::json& arch);

}  // namespace cdnas

#endif  // CDNAS_SUPERNET_H_
