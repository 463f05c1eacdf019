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

#include <cmath>
#include <random>
#include <vector>

#include "cdnas/errors.h"
#include "cdnas/ops.h"
#include "cdnas/optim.h"
#include "cdnas/tape.h"
#include "cdnas/tensor.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace cdnas {
namespace {

using testing::RefArray;
using testing::RefConv;

TEST(TensorTest, RejectsZeroExtent) {
  EXPECT_THROW(Tensor({2, 0, 3}), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>(3)), DimensionError);
}

TEST(TensorTest, ChecksumTracksContent) {
  Tensor a({2, 3}, 1.0f);
  Tensor b({2, 3}, 1.0f);
  EXPECT_EQ(a.Checksum(), b.Checksum());
  b[4] = 2.0f;
  EXPECT_NE(a.Checksum(), b.Checksum());
  EXPECT_EQ(ShapeToString({2, 3}), a.ShapeString());
}

TEST(TensorTest, RelativeErrorUsesFloor) {
  Tensor a({1, 2}, std::vector<float>{1.0f, 0.0f});
  Tensor b({1, 2}, std::vector<float>{1.0f, 1e-6f});
  EXPECT_NEAR(MaxRelativeError(a, b, 1e-3), 1e-3, 1e-9);
  EXPECT_NEAR(MaxAbsoluteError(a, b), 1e-6, 1e-12);
}

class ConvOracleTest : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(ConvOracleTest, MatchesNestedLoops) {
  const auto [k, stride] = GetParam();
  std::mt19937_64 rng(k * 10 + stride);
  const Tensor x = Tensor::RandomNormal({2, 3, 7, 6}, 1.0f, rng);
  const Tensor w = Tensor::RandomNormal({4, 3, k, k}, 1.0f, rng);
  const Tensor y = ops::Conv2d(x, w, stride);
  const RefArray ref = RefConv(RefArray(x), RefArray(w), k, stride);
  ASSERT_EQ(y.shape(), ref.shape);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref.v[i], 1e-4);
}

// The convolution is linear in each argument, so the backward pass must be
// its exact adjoint: <grad_out, conv(dx, w)> == <grad_in, dx>.
TEST_P(ConvOracleTest, BackwardIsAdjoint) {
  const auto [k, stride] = GetParam();
  std::mt19937_64 rng(k * 100 + stride);
  const Tensor x = Tensor::RandomNormal({2, 2, 5, 5}, 1.0f, rng);
  const Tensor w = Tensor::RandomNormal({3, 2, k, k}, 1.0f, rng);
  const Tensor g = Tensor::RandomNormal(ops::Conv2d(x, w, stride).shape(), 1.0f, rng);
  Tensor gx(x.shape()), gw(w.shape());
  ops::Conv2dBackward(x, w, stride, g, &gx, &gw);
  const RefArray gref(g);
  for (std::size_t i = 0; i < x.size(); ++i) {
    RefArray e(x.shape());
    e.v[i] = 1.0;
    const RefArray y = RefConv(e, RefArray(w), k, stride);
    double dot = 0.0;
    for (std::size_t j = 0; j < y.v.size(); ++j) dot += y.v[j] * gref.v[j];
    EXPECT_NEAR(gx[i], dot, 1e-4) << "input element " << i;
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    RefArray e(w.shape());
    e.v[i] = 1.0;
    const RefArray y = RefConv(RefArray(x), e, k, stride);
    double dot = 0.0;
    for (std::size_t j = 0; j < y.v.size(); ++j) dot += y.v[j] * gref.v[j];
    EXPECT_NEAR(gw[i], dot, 1e-3) << "weight element " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Kernels, ConvOracleTest,
                         ::testing::Combine(::testing::Values(1, 3, 5),
                                            ::testing::Values(1, 2)));

TEST(OpsTest, ConvRejectsMismatchedChannels) {
  EXPECT_THROW(ops::Conv2d(Tensor({1, 3, 4, 4}), Tensor({2, 2, 3, 3}), 1), DimensionError);
  EXPECT_THROW(ops::Conv2d(Tensor({1, 2, 4, 4}), Tensor({2, 2, 2, 2}), 1), DimensionError);
}

TEST(OpsTest, DenseMatchesLoopsAndAdjoint) {
  std::mt19937_64 rng(3);
  const Tensor x = Tensor::RandomNormal({3, 5}, 1.0f, rng);
  const Tensor w = Tensor::RandomNormal({4, 5}, 1.0f, rng);
  const Tensor y = ops::Dense(x, w);
  for (int n = 0; n < 3; ++n)
    for (int o = 0; o < 4; ++o) {
      double acc = 0.0;
      for (int d = 0; d < 5; ++d) acc += x.at(n, d) * w.at(o, d);
      EXPECT_NEAR(y.at(n, o), acc, 1e-5);
    }
  const Tensor g = Tensor::RandomNormal({3, 4}, 1.0f, rng);
  Tensor gx(x.shape()), gw(w.shape());
  ops::DenseBackward(x, w, g, &gx, &gw);
  for (int n = 0; n < 3; ++n)
    for (int d = 0; d < 5; ++d) {
      double acc = 0.0;
      for (int o = 0; o < 4; ++o) acc += g.at(n, o) * w.at(o, d);
      EXPECT_NEAR(gx.at(n, d), acc, 1e-5);
    }
  for (int o = 0; o < 4; ++o)
    for (int d = 0; d < 5; ++d) {
      double acc = 0.0;
      for (int n = 0; n < 3; ++n) acc += g.at(n, o) * x.at(n, d);
      EXPECT_NEAR(gw.at(o, d), acc, 1e-5);
    }
}

TEST(OpsTest, BackwardAccumulates) {
  const Tensor g({2, 3}, 1.0f);
  Tensor gb({3}, 5.0f);
  ops::AddBiasBackward(g, &gb);
  for (int i = 0; i < 3; ++i) EXPECT_FLOAT_EQ(gb[i], 7.0f);
}

TEST(OpsTest, PoolAndRelu) {
  Tensor x({1, 2, 2, 2}, std::vector<float>{1, -2, 3, 4, -1, -1, -1, -1});
  const Tensor p = ops::GlobalAvgPool(x);
  EXPECT_FLOAT_EQ(p.at(0, 0), 1.5f);
  EXPECT_FLOAT_EQ(p.at(0, 1), -1.0f);
  const Tensor r = ops::Relu(x);
  EXPECT_FLOAT_EQ(r[1], 0.0f);
  EXPECT_FLOAT_EQ(r[3], 4.0f);
  Tensor gx(x.shape());
  ops::ReluBackward(r, Tensor(x.shape(), 1.0f), &gx);
  EXPECT_FLOAT_EQ(gx[0], 1.0f);
  EXPECT_FLOAT_EQ(gx[1], 0.0f);
  Tensor gp(x.shape());
  ops::GlobalAvgPoolBackward(Tensor({1, 2}, 4.0f), &gp);
  for (std::size_t i = 0; i < gp.size(); ++i) EXPECT_FLOAT_EQ(gp[i], 1.0f);
}

TEST(OpsTest, SliceAndConcatInvert) {
  std::mt19937_64 rng(4);
  const Tensor x = Tensor::RandomNormal({2, 5, 3, 3}, 1.0f, rng);
  const Tensor joined =
      ops::ConcatChannels(ops::SliceChannels(x, 0, 2), ops::SliceChannels(x, 2, 5));
  EXPECT_EQ(joined, x);
  EXPECT_THROW(ops::SliceChannels(x, 3, 6), DimensionError);
}

TEST(OpsTest, SoftmaxCrossEntropyClosedForm) {
  const Tensor z({2, 3}, std::vector<float>{1, 2, 3, 0, 0, 0});
  const std::vector<int> labels{2, 0};
  const ops::LossWithGrad l = ops::SoftmaxCrossEntropy(z, labels);
  const double s = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const double expect = (std::log(s) - 3.0 + std::log(3.0)) / 2.0;
  EXPECT_NEAR(l.loss, expect, 1e-6);
  EXPECT_NEAR(l.grad.at(0, 2), (std::exp(3.0) / s - 1.0) / 2.0, 1e-6);
  EXPECT_NEAR(l.grad.at(1, 1), (1.0 / 3.0) / 2.0, 1e-6);
  const std::vector<int> bad{0, 3};
  EXPECT_THROW(ops::SoftmaxCrossEntropy(z, bad), DomainError);
}

TEST(TapeTest, BackwardNeedsRecording) {
  Tape tape;
  EXPECT_THROW(tape.Backward(0), StateError);
  Parameter p("p", Tensor({1, 2}, 1.0f));
  Tape::Var loss = tape.SquaredError(tape.Param(p), Tensor({1, 2}, 0.0f));
  tape.Backward(loss);
  EXPECT_THROW(tape.Backward(loss), StateError);
}

TEST(TapeTest, GradientsAccumulateUntilZeroed) {
  Parameter p("p", Tensor({1, 2}, std::vector<float>{1.0f, -2.0f}));
  for (int pass = 0; pass < 2; ++pass) {
    Tape tape;
    tape.Backward(tape.SquaredError(tape.Param(p), Tensor({1, 2}, 0.0f)));
  }
  EXPECT_FLOAT_EQ(p.grad[0], 4.0f);
  EXPECT_FLOAT_EQ(p.grad[1], -8.0f);
  p.ZeroGrad();
  EXPECT_FLOAT_EQ(p.grad[0], 0.0f);
}

TEST(TapeTest, PadAndMaskRouteGradients) {
  Parameter p("p", Tensor({1, 3, 1, 1}, std::vector<float>{1, 2, 3}));
  Tape tape;
  Tape::Var padded = tape.PadChannels(tape.Param(p), 2, 4);
  EXPECT_EQ(tape.value(padded).shape(), (std::vector<int>{1, 4, 1, 1}));
  EXPECT_FLOAT_EQ(tape.value(padded)[2], 0.0f);
  Tape::Var masked = tape.MulChannelMask(padded, Tensor({1, 4}, std::vector<float>{0, 1, 1, 1}));
  tape.Backward(tape.SquaredError(masked, Tensor({1, 4, 1, 1}, 0.0f)));
  EXPECT_FLOAT_EQ(p.grad[0], 0.0f);
  EXPECT_FLOAT_EQ(p.grad[1], 4.0f);
  EXPECT_FLOAT_EQ(p.grad[2], 0.0f);
}

TEST(OptimTest, SgdWithDecay) {
  Parameter p("p", Tensor({2}, std::vector<float>{1.0f, -1.0f}));
  p.grad = Tensor({2}, std::vector<float>{0.5f, 0.5f});
  Parameter* ps[] = {&p};
  SgdStep(ps, 0.1f, 0.01f);
  EXPECT_FLOAT_EQ(p.value[0], 1.0f - 0.1f * (0.5f + 0.01f));
  EXPECT_FLOAT_EQ(p.value[1], -1.0f - 0.1f * (0.5f - 0.01f));
  EXPECT_THROW(SgdStep(ps, 0.0f, 0.0f), DomainError);
}

}  // namespace
}  // namespace cdnas
