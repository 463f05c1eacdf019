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

#include "cdnas/training.h"

#include <algorithm>
#include <numeric>

#include "cdnas/errors.h"
#include "cdnas/optim.h"

namespace cdnas {

double Accuracy(const Tensor& logits, std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  int correct = 0;
  for (int n = 0; n < logits.dim(0); ++n) {
    int best = 0;
    for (int j = 1; j < logits.dim(1); ++j) {
      if (logits.at(n, j) > logits.at(n, best)) best = j;
    }
    if (best == labels[n]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

TrainingPlan SampleTrainingPlan(const NetworkSpec& spec, int batch,
                                std::mt19937_64& rng) {
  TrainingPlan plan;
  for (const LayerSpec& l : spec.layers) {
    plan.widths.push_back(SampleWidthAssignments(batch, l.width_grid, rng));
    std::uniform_int_distribution<std::size_t> pick(0, l.kernel_grid.size() - 1);
    plan.kernels.push_back(l.kernel_grid[pick(rng)]);
  }
  return plan;
}

bool GradientIsolated(const SuperNetwork& net, const TrainingPlan& plan) {
  const NetworkSpec& spec = net.spec();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const int widest =
        *std::max_element(plan.widths[i].begin(), plan.widths[i].end());
    const Tensor& gw = net.layer_weight(static_cast<int>(i)).grad;
    const Tensor& gb = net.layer_bias(static_cast<int>(i)).grad;
    const std::size_t per_filter = gw.size() / gw.dim(0);
    for (int f = widest; f < spec.layers[i].filters; ++f) {
      if (gb[f] != 0.0f) return false;
      for (std::size_t j = 0; j < per_filter; ++j) {
        if (gw[f * per_filter + j] != 0.0f) return false;
      }
    }
  }
  return true;
}

namespace {

template <typename StepFn>
std::vector<EpochStats> RunEpochs(const Dataset& train,
                                  const TrainOptions& options,
                                  std::mt19937_64& rng,
                                  const EpochCallback& on_epoch, StepFn step) {
  if (options.epochs < 0) throw DomainError("epochs must be >= 0");
  if (options.batch_size < 1) throw DomainError("batch size must be >= 1");
  std::vector<EpochStats> history;
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0, correct = 0.0;
    for (int start = 0; start < train.size(); start += options.batch_size) {
      const int end = std::min(train.size(), start + options.batch_size);
      std::span<const int> idx(order.data() + start, end - start);
      const Tensor images = train.Gather(idx);
      const std::vector<int> labels = train.GatherLabels(idx);
      auto [loss, acc] = step(images, labels);
      loss_sum += static_cast<double>(loss) * idx.size();
      correct += acc * idx.size();
    }
    EpochStats stats{epoch + 1, loss_sum / train.size(), correct / train.size()};
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

}  // namespace

std::vector<EpochStats> TrainSupernetwork(SuperNetwork& net,
                                          const Dataset& train,
                                          const TrainOptions& options,
                                          std::mt19937_64& rng,
                                          const EpochCallback& on_epoch) {
  std::vector<Parameter*> params = net.parameters();
  return RunEpochs(
      train, options, rng, on_epoch,
      [&](const Tensor& images, const std::vector<int>& labels) {
        const TrainingPlan plan =
            SampleTrainingPlan(net.spec(), images.dim(0), rng);
        Tape tape;
        Tape::Var logits = net.ForwardTraining(tape, tape.Input(images), plan);
        const double acc = Accuracy(tape.value(logits), labels);
        Tape::Var loss = tape.SoftmaxCrossEntropy(logits, labels);
        const float loss_value = tape.value(loss)[0];
        net.ZeroGrad();
        tape.Backward(loss);
        if (options.check_isolation && !GradientIsolated(net, plan)) {
          throw StateError("gradient reached a filter outside every sampled width");
        }
        SgdStep(params, options.learning_rate, options.weight_decay);
        return std::pair{loss_value, acc};
      });
}

std::vector<EpochStats> TrainStandalone(StandaloneNetwork& net,
                                        const Dataset& train,
                                        const TrainOptions& options,
                                        std::mt19937_64& rng,
                                        const EpochCallback& on_epoch) {
  std::vector<Parameter*> params = net.parameters();
  return RunEpochs(train, options, rng, on_epoch,
                   [&](const Tensor& images, const std::vector<int>& labels) {
                     Tape tape;
                     Tape::Var logits = net.Forward(tape, tape.Input(images));
                     const double acc = Accuracy(tape.value(logits), labels);
                     Tape::Var loss = tape.SoftmaxCrossEntropy(logits, labels);
                     const float loss_value = tape.value(loss)[0];
                     net.ZeroGrad();
                     tape.Backward(loss);
                     SgdStep(params, options.learning_rate,
                             options.weight_decay);
                     return std::pair{loss_value, acc};
                   });
}

namespace {

template <typename ForwardFn>
double BatchedAccuracy(const Dataset& data, int batch_size, ForwardFn forward) {
  if (data.size() == 0) return 0.0;
  int correct = 0;
  std::vector<int> idx;
  for (int start = 0; start < data.size(); start += batch_size) {
    const int end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor logits = forward(data.Gather(idx));
    const std::vector<int> labels = data.GatherLabels(idx);
    correct += static_cast<int>(std::lround(Accuracy(logits, labels) * idx.size()));
  }
  return static_cast<double>(correct) / data.size();
}

}  // namespace

double EvaluateAccuracy(const StandaloneNetwork& net, const Dataset& data,
                        int batch_size) {
  return BatchedAccuracy(data, batch_size,
                         [&](const Tensor& x) { return net.Forward(x); });
}

double EvaluateAccuracy(const SuperNetwork& net, const SubNetChoice& choice,
                        const Dataset& data, int batch_size) {
  return BatchedAccuracy(data, batch_size, [&](const Tensor& x) {
    return net.Forward(x, choice);
  });
}

}  // namespace cdnas
