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

#include "cdnas/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "cdnas/errors.h"

namespace cdnas {

Tensor Dataset::Gather(std::span<const int> indices) const {
  const std::size_t item = images.size() / images.dim(0);
  std::vector<int> shape = images.shape();
  shape[0] = static_cast<int>(indices.size());
  Tensor out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const float* src = images.data() + static_cast<std::size_t>(indices[i]) * item;
    std::copy(src, src + item, out.data() + i * item);
  }
  return out;
}

std::vector<int> Dataset::GatherLabels(std::span<const int> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(labels[i]);
  return out;
}

Dataset Dataset::Subset(std::span<const int> indices,
                        std::string split_name) const {
  Dataset d;
  d.images = Gather(indices);
  d.labels = GatherLabels(indices);
  d.classes = classes;
  d.split = std::move(split_name);
  return d;
}

Dataset SynthClassification(const SynthOptions& o) {
  if (o.classes < 2) throw DomainError("need at least 2 classes");
  if (o.per_class < 1) throw DomainError("per_class must be >= 1");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t plane = static_cast<std::size_t>(o.height) * o.width;
  const std::size_t item = plane * o.channels;
  std::vector<std::vector<float>> prototypes(o.classes,
                                             std::vector<float>(item, 0.0f));
  for (auto& proto : prototypes) {
    for (int c = 0; c < o.channels; ++c) {
      for (int b = 0; b < o.blobs_per_channel; ++b) {
        const double cy = unit(rng) * (o.height - 1);
        const double cx = unit(rng) * (o.width - 1);
        const double sigma = (0.1 + 0.25 * unit(rng)) * std::max(o.height, o.width);
        const double amp = 0.2 + 0.8 * unit(rng);
        for (int y = 0; y < o.height; ++y) {
          for (int x = 0; x < o.width; ++x) {
            const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
            proto[c * plane + y * o.width + x] +=
                static_cast<float>(amp * std::exp(-d2 / (2 * sigma * sigma)));
          }
        }
      }
    }
    for (float& v : proto) v = std::clamp(v, 0.0f, 1.0f);
  }

  Dataset d;
  d.classes = o.classes;
  d.images = Tensor({o.classes * o.per_class, o.channels, o.height, o.width});
  std::normal_distribution<double> noise(0.0, 1.0);
  float* dst = d.images.data();
  for (int cls = 0; cls < o.classes; ++cls) {
    for (int i = 0; i < o.per_class; ++i) {
      for (std::size_t p = 0; p < item; ++p) {
        const double v = prototypes[cls][p] + o.noise * noise(rng);
        *dst++ = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
      d.labels.push_back(cls);
    }
  }
  return d;
}

std::pair<Dataset, Dataset> Split(const Dataset& data, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DomainError("holdout fraction must lie in (0, 1)");
  }
  const int n = data.size();
  const int total_hold = static_cast<int>(std::lround(n * fraction));
  if (total_hold == 0 || total_hold == n) {
    throw DomainError("holdout fraction " + std::to_string(fraction) + " on " +
                      std::to_string(n) + " items leaves an empty split");
  }

  std::vector<std::vector<int>> by_class(data.classes);
  for (int i = 0; i < n; ++i) by_class.at(data.labels[i]).push_back(i);

  // Largest-remainder apportionment of the holdout across classes.
  std::vector<int> quota(data.classes);
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int c = 0; c < data.classes; ++c) {
    const double exact =
        static_cast<double>(by_class[c].size()) * total_hold / n;
    quota[c] = static_cast<int>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - quota[c], c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; assigned < total_hold; ++i, ++assigned) {
    ++quota[remainders[i].second];
  }

  std::mt19937_64 rng(seed);
  std::vector<int> train, hold;
  for (int c = 0; c < data.classes; ++c) {
    std::vector<int> idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    hold.insert(hold.end(), idx.begin(), idx.begin() + quota[c]);
    train.insert(train.end(), idx.begin() + quota[c], idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(hold.begin(), hold.end());
  return {data.Subset(train, "train"), data.Subset(hold, "holdout")};
}

namespace {

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t GetU32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> EncodeRaster(const Dataset& data) {
  if (data.classes < 1 || data.classes > 65536) {
    throw DomainError("raster labels are u16; classes out of range");
  }
  std::vector<std::uint8_t> out(std::begin(kRasterMagic), std::end(kRasterMagic));
  PutU32(out, static_cast<std::uint32_t>(data.size()));
  PutU32(out, static_cast<std::uint32_t>(data.channels()));
  PutU32(out, static_cast<std::uint32_t>(data.height()));
  PutU32(out, static_cast<std::uint32_t>(data.width()));
  PutU32(out, static_cast<std::uint32_t>(data.classes));
  out.reserve(out.size() + data.images.size() + 2 * data.labels.size());
  for (float v : data.images.values()) {
    out.push_back(static_cast<std::uint8_t>(
        std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  }
  for (int label : data.labels) {
    out.push_back(static_cast<std::uint8_t>(label & 0xff));
    out.push_back(static_cast<std::uint8_t>((label >> 8) & 0xff));
  }
  return out;
}

Dataset DecodeRaster(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kRasterHeaderBytes) {
    throw ParseError("raster header truncated", bytes.size());
  }
  if (!std::equal(std::begin(kRasterMagic), std::end(kRasterMagic),
                  bytes.begin())) {
    throw ParseError("bad raster magic", 0);
  }
  const std::uint32_t n = GetU32(bytes, 4), c = GetU32(bytes, 8),
                      h = GetU32(bytes, 12), w = GetU32(bytes, 16),
                      classes = GetU32(bytes, 20);
  if (n == 0 || c == 0 || h == 0 || w == 0) {
    throw ParseError("raster extents must be >= 1", 4);
  }
  if (classes == 0) throw ParseError("raster class count must be >= 1", 20);
  const std::uint64_t pixels = static_cast<std::uint64_t>(n) * c * h * w;
  const std::uint64_t need = kRasterHeaderBytes + pixels + 2ull * n;
  if (bytes.size() < need) {
    throw ParseError("raster body truncated: need " + std::to_string(need) +
                         " bytes, have " + std::to_string(bytes.size()),
                     bytes.size());
  }
  if (bytes.size() > need) {
    throw ParseError("trailing bytes after raster body", need);
  }
  Dataset d;
  d.classes = static_cast<int>(classes);
  d.images = Tensor({static_cast<int>(n), static_cast<int>(c),
                     static_cast<int>(h), static_cast<int>(w)});
  const std::uint8_t* p = bytes.data() + kRasterHeaderBytes;
  for (std::uint64_t i = 0; i < pixels; ++i) {
    d.images[i] = static_cast<float>(p[i]) / 255.0f;
  }
  p += pixels;
  for (std::uint32_t i = 0; i < n; ++i) {
    const int label = p[2 * i] | (p[2 * i + 1] << 8);
    if (label >= d.classes) {
      throw ParseError("label " + std::to_string(label) + " >= classes",
                       kRasterHeaderBytes + pixels + 2 * i);
    }
    d.labels.push_back(label);
  }
  return d;
}

void SaveRaster(const std::filesystem::path& path, const Dataset& data) {
  const auto bytes = EncodeRaster(data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Dataset LoadRaster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("data.path", "cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DecodeRaster(bytes);
}

}  // namespace cdnas
