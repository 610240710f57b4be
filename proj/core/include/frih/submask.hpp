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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "frih/tensor.hpp"

namespace frih {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  // Lexicographic (r, g, b); the tie-break order used throughout clustering.
  auto operator<=>(const Rgb&) const = default;
};

inline constexpr double kDefaultCutoff = 0.1;
inline constexpr std::size_t kMaxClusters = 10;
// Candidates whose density does not exceed this are isolated outliers.
inline constexpr double kOutlierDensity = 10.0;
// Above this many distinct colors, channels are quantized to 5 bits.
inline constexpr std::size_t kMaxExactColors = 4096;

// Euclidean distance of the RGB vectors scaled into [0, 1]: 0 for equal
// colors, 1 between black and white.
double color_distance(Rgb a, Rgb b);

// One distinct foreground color with its pixel multiplicity.
struct ColorPoint {
  Rgb rgb;
  std::size_t count = 1;
  double rho = 0.0;
  double delta = 0.0;
};

// Pixel-level neighbour count within the cutoff, self excluded:
// rho_i = sum over other colors j with d_ij < d_c of count_j, plus count_i - 1.
std::vector<double> compute_density(std::span<const ColorPoint> points, double d_c);

// Distance to the nearest "higher" color, where higher means larger rho, or
// equal rho and lexicographically smaller RGB. The single highest color gets
// its largest distance to any color (0 when it is alone). Reads `rho`.
std::vector<double> compute_delta(std::span<const ColorPoint> points);

// Indices of the final centers, in candidate order: colors sorted by delta
// descending (then rho descending, then RGB ascending), the first ten taken
// as candidates, and those with rho > 10 kept. Falls back to the
// highest-density color when none passes.
std::vector<std::size_t> select_centers(std::span<const ColorPoint> points);

// Cluster id (index into `centers`) for every point. Points are visited by
// descending density; a non-center joins the cluster of its nearest already
// visited color (ties to the smaller RGB).
std::vector<std::size_t> assign_clusters(std::span<const ColorPoint> points, std::span<const std::size_t> centers);

struct SubmaskSet {
  std::vector<Tensor32> submasks;  // K masks, each 1 x H x W with values {0, 1}
  std::vector<Rgb> centers;
  double d_c = kDefaultCutoff;
  // Diagnostics: the clustered colors (after optional quantization) with
  // their rho / delta, and each color's cluster id.
  std::vector<ColorPoint> points;
  std::vector<std::size_t> point_cluster;
  bool quantized = false;

  std::size_t size() const noexcept { return submasks.size(); }
  // 0 for background, cluster id + 1 inside the foreground.
  Tensor<std::uint8_t> label_map() const;
};

// Converts a [0, 1] channel value to 8 bits (rounded, clamped).
std::uint8_t to_byte(float v);

// Foreground pixel count of a binary 1 x H x W mask.
std::size_t mask_area(const Tensor32& mask);

// composite: 3 x H x W in [0, 1]; mask: 1 x H x W with values {0, 1}.
// Throws InvalidArgument for shape or non-binary mask problems and
// EmptyForegroundError when the mask is all zero.
SubmaskSet extract_submasks(const Tensor32& composite, const Tensor32& mask, double d_c = kDefaultCutoff);

}  // namespace frih
