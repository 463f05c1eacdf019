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

#ifndef CDNAS_TRAINING_H_
#define CDNAS_TRAINING_H_

#include <functional>
#include <random>
#include <span>
#include <vector>

#include "cdnas/data.h"
#include "cdnas/supernet.h"

namespace cdnas {

struct TrainOptions {
  int epochs = 10;
  int batch_size = 64;
  float learning_rate = 0.05f;
  float weight_decay = 1e-5f;
  // Verify after every backward pass that filters beyond the batch's widest
  // sampled width got exactly zero gradient. Throws StateError otherwise.
  bool check_isolation = false;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Fraction of rows whose argmax equals the label (first maximum wins).
double Accuracy(const Tensor& logits, std::span<const int> labels);

// Per-image ordered-dropout widths from each layer's grid, one kernel per
// layer drawn uniformly from its kernel grid.
TrainingPlan SampleTrainingPlan(const NetworkSpec& spec, int batch,
                                std::mt19937_64& rng);

// True when every filter j >= max(widths of layer l) of every layer has an
// all-zero weight and bias gradient.
bool GradientIsolated(const SuperNetwork& net, const TrainingPlan& plan);

// Joint training: each batch is one forward-backward pass over many
// sub-networks at once.
std::vector<EpochStats> TrainSupernetwork(SuperNetwork& net,
                                          const Dataset& train,
                                          const TrainOptions& options,
                                          std::mt19937_64& rng,
                                          const EpochCallback& on_epoch = {});

std::vector<EpochStats> TrainStandalone(StandaloneNetwork& net,
                                        const Dataset& train,
                                        const TrainOptions& options,
                                        std::mt19937_64& rng,
                                        const EpochCallback& on_epoch = {});

double EvaluateAccuracy(const StandaloneNetwork& net, const Dataset& data,
                        int batch_size = 256);
double EvaluateAccuracy(const SuperNetwork& net, const SubNetChoice& choice,
                        const Dataset& data, int batch_size = 256);

}  // namespace cdnas

#endif  // CDNAS_TRAINING_H_
