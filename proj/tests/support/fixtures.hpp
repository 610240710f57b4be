// Copyright 2026 The frih Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "frih/refinement.hpp"
#include "frih/tensor.hpp"

namespace frih::testing {

// Composite whose pixels draw from a palette of `colors` random 8-bit RGB
// values, and a random nonempty binary mask covering about `coverage`.
struct PaletteScene {
  Tensor32 composite;
  Tensor32 mask;
};

// With `spread` > 0 the palette is drawn as tight groups: a few anchor colors
// and members within +-spread levels of them, so that groups fall inside
// typical cutoffs.
inline PaletteScene palette_scene(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t colors,
                                  double coverage, int spread = 0) {
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<std::array<int, 3>> palette(colors);
  if (spread == 0) {
    for (auto& c : palette) c = {byte(rng), byte(rng), byte(rng)};
  } else {
    std::vector<std::array<int, 3>> anchors(1 + rng() % 5);
    for (auto& a : anchors) a = {byte(rng), byte(rng), byte(rng)};
    std::uniform_int_distribution<int> off(-spread, spread);
    for (auto& c : palette) {
      const auto& a = anchors[rng() % anchors.size()];
      for (int k = 0; k < 3; ++k) c[k] = std::clamp(a[k] + off(rng), 0, 255);
    }
  }
  // Skewed palette use so that densities differ between colors.
  std::geometric_distribution<std::size_t> pick(0.15);
  std::bernoulli_distribution inside(coverage);
  PaletteScene s{Tensor32({3, h, w}), Tensor32({1, h, w})};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const auto& c = palette[pick(rng) % colors];
      for (std::size_t ch = 0; ch < 3; ++ch) s.composite.at(ch, y, x) = float(c[ch]) / 255.0f;
      s.mask.at(0, y, x) = inside(rng) ? 1.0f : 0.0f;
    }
  s.mask.at(0, rng() % h, rng() % w) = 1.0f;
  return s;
}

// A two-stage model small enough for finite differences.
inline ModelConfig tiny_model(std::size_t resolution, std::size_t depth) {
  ModelConfig m;
  m.base.resolution = resolution;
  m.base.encoder_channels.assign(depth, 3);
  m.cascade.encoder_channels.assign(depth, 2);
  m.cascade.fusion_channels = 3;
  return m;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf = {}) const { return (leaf.empty() ? path_ : path_ / leaf).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace frih::testing
