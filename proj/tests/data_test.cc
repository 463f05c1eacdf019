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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <random>

#include "cdnas/data.h"
#include "cdnas/errors.h"
#include "gtest/gtest.h"

namespace cdnas {
namespace {

SynthOptions Small(double noise = 0.1) {
  SynthOptions o;
  o.classes = 3;
  o.per_class = 20;
  o.height = 6;
  o.width = 6;
  o.noise = noise;
  o.seed = 42;
  return o;
}

TEST(SynthTest, DeterministicAndBalanced) {
  const Dataset a = SynthClassification(Small());
  const Dataset b = SynthClassification(Small());
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.labels, b.labels);
  std::map<int, int> count;
  for (int l : a.labels) ++count[l];
  for (int c = 0; c < 3; ++c) EXPECT_EQ(count[c], 20);
  for (float v : a.images.values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  SynthOptions other = Small();
  other.seed = 43;
  EXPECT_NE(SynthClassification(other).images, a.images);
}

TEST(SynthTest, NoiselessIsNearestPrototypeSeparable) {
  const Dataset d = SynthClassification(Small(0.0));
  const std::size_t item = d.images.size() / d.size();
  std::vector<const float*> proto(d.classes);
  for (int i = 0; i < d.size(); ++i) proto[d.labels[i]] = d.images.data() + i * item;
  int correct = 0;
  for (int i = 0; i < d.size(); ++i) {
    const float* x = d.images.data() + i * item;
    int best = 0;
    double best_d = 1e300;
    for (int c = 0; c < d.classes; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < item; ++j) s += (x[j] - proto[c][j]) * (x[j] - proto[c][j]);
      if (s < best_d) {
        best_d = s;
        best = c;
      }
    }
    correct += best == d.labels[i];
  }
  EXPECT_EQ(correct, d.size());
}

TEST(SplitTest, SizesAndUnion) {
  SynthOptions o = Small();
  o.classes = 2;
  o.per_class = 50;
  const Dataset d = SynthClassification(o);
  const auto [train, hold] = Split(d, 0.1, 1);
  EXPECT_EQ(train.size(), 90);
  EXPECT_EQ(hold.size(), 10);
  std::multiset<std::uint64_t> all, parts;
  auto row_hash = [](const Dataset& s, int i) {
    const std::size_t item = s.images.size() / s.size();
    std::uint64_t h = static_cast<std::uint64_t>(s.labels[i]);
    for (std::size_t j = 0; j < item; ++j) {
      h = h * 1099511628211ull ^ static_cast<std::uint64_t>(s.images[i * item + j] * 1e6f);
    }
    return h;
  };
  for (int i = 0; i < d.size(); ++i) all.insert(row_hash(d, i));
  for (int i = 0; i < train.size(); ++i) parts.insert(row_hash(train, i));
  for (int i = 0; i < hold.size(); ++i) parts.insert(row_hash(hold, i));
  EXPECT_EQ(all, parts);
}

TEST(SplitTest, StratifiedWithinOne) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    SynthOptions o = Small();
    o.classes = 2 + trial % 4;
    o.per_class = 7 + trial;
    const Dataset d = SynthClassification(o);
    const double f = 0.1 + 0.04 * trial;
    const auto [train, hold] = Split(d, f, trial);
    std::map<int, int> count;
    for (int l : hold.labels) ++count[l];
    for (int c = 0; c < d.classes; ++c) {
      EXPECT_LE(std::fabs(count[c] - f * o.per_class), 1.0)
          << "class " << c << " fraction " << f;
    }
  }
}

TEST(SplitTest, DeterministicAndGuarded) {
  const Dataset d = SynthClassification(Small());
  EXPECT_EQ(Split(d, 0.3, 9).second.labels, Split(d, 0.3, 9).second.labels);
  EXPECT_EQ(Split(d, 0.3, 9).second.images, Split(d, 0.3, 9).second.images);
  EXPECT_THROW(Split(d, 0.0, 1), DomainError);
  EXPECT_THROW(Split(d, 1.0, 1), DomainError);
  EXPECT_THROW(Split(d, 0.001, 1), DomainError);
}

TEST(RasterTest, SingleImageRoundTrip) {
  Dataset d;
  d.classes = 3;
  d.images = Tensor({1, 1, 1, 2}, std::vector<float>{0.0f, 1.0f});
  d.labels = {2};
  const Dataset back = DecodeRaster(EncodeRaster(d));
  EXPECT_EQ(back.images, d.images);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.classes, 3);
  EXPECT_EQ(EncodeRaster(d).size(), kRasterHeaderBytes + 2 + 2);
}

TEST(RasterTest, SaveLoadSaveIsByteIdentical) {
  const Dataset d = SynthClassification(Small());
  const auto path = std::filesystem::temp_directory_path() / "cdnas_raster_test.cdr";
  SaveRaster(path, d);
  const Dataset loaded = LoadRaster(path);
  EXPECT_EQ(EncodeRaster(loaded), EncodeRaster(d));
  EXPECT_EQ(loaded.labels, d.labels);
  std::filesystem::remove(path);
}

TEST(RasterTest, Errors) {
  const Dataset d = SynthClassification(Small());
  auto bytes = EncodeRaster(d);
  auto bad = bytes;
  bad[0] = 'X';
  try {
    DecodeRaster(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  auto cut = bytes;
  cut.resize(bytes.size() - 1);
  try {
    DecodeRaster(cut);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), cut.size());
  }
  EXPECT_THROW(DecodeRaster(std::span(bytes.data(), 10)), ParseError);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(DecodeRaster(extra), ParseError);
  auto label = bytes;
  label[label.size() - 2] = 9;
  EXPECT_THROW(DecodeRaster(label), ParseError);
}

}  // namespace
}  // namespace cdnas
