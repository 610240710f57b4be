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

#include "frih/submask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace frih {
namespace {

const double kDistanceScale = 255.0 * std::sqrt(3.0);

int squared_gap(Rgb a, Rgb b) {
  const int dr = int(a.r) - int(b.r);
  const int dg = int(a.g) - int(b.g);
  const int db = int(a.b) - int(b.b);
  return dr * dr + dg * dg + db * db;
}

double distance_from_squared(int sq) { return std::sqrt(static_cast<double>(sq)) / kDistanceScale; }

// Visiting order: rho descending, then RGB ascending.
std::vector<std::size_t> density_order(std::span<const ColorPoint> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].rho != points[b].rho) return points[a].rho > points[b].rho;
    return points[a].rgb < points[b].rgb;
  });
  return order;
}

std::uint32_t pack(Rgb c) { return (std::uint32_t(c.r) << 16) | (std::uint32_t(c.g) << 8) | c.b; }
Rgb unpack(std::uint32_t k) {
  return {static_cast<std::uint8_t>(k >> 16), static_cast<std::uint8_t>(k >> 8), static_cast<std::uint8_t>(k)};
}
std::uint8_t quantize_channel(std::uint8_t v) { return static_cast<std::uint8_t>((v & 0xF8) | 0x04); }
Rgb quantize(Rgb c) { return {quantize_channel(c.r), quantize_channel(c.g), quantize_channel(c.b)}; }

}  // namespace

double color_distance(Rgb a, Rgb b) { return distance_from_squared(squared_gap(a, b)); }

std::vector<double> compute_density(std::span<const ColorPoint> points, double d_c) {
  if (points.empty()) throw InvalidArgument("compute_density: no points");
  if (!(d_c > 0.0 && d_c <= 1.0)) throw InvalidArgument("compute_density: d_c must lie in (0, 1]");
  const std::size_t n = points.size();
  std::vector<double> rho(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) rho[i] += static_cast<double>(points[i].count) - 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance_from_squared(squared_gap(points[i].rgb, points[j].rgb)) < d_c) {
        rho[i] += static_cast<double>(points[j].count);
        rho[j] += static_cast<double>(points[i].count);
      }
    }
  }
  return rho;
}

std::vector<double> compute_delta(std::span<const ColorPoint> points) {
  const std::size_t n = points.size();
  std::vector<double> delta(n, 0.0);
  if (n == 0) return delta;
  const auto order = density_order(points);
  const std::size_t top = order.front();
  int farthest = 0;
  for (std::size_t j = 0; j < n; ++j) farthest = std::max(farthest, squared_gap(points[top].rgb, points[j].rgb));
  delta[top] = distance_from_squared(farthest);
  for (std::size_t r = 1; r < n; ++r) {
    const std::size_t i = order[r];
    int best = squared_gap(points[i].rgb, points[order[0]].rgb);
    for (std::size_t q = 1; q < r; ++q) best = std::min(best, squared_gap(points[i].rgb, points[order[q]].rgb));
    delta[i] = distance_from_squared(best);
  }
  return delta;
}

std::vector<std::size_t> select_centers(std::span<const ColorPoint> points) {
  if (points.empty()) return {};
  std::vector<std::size_t> by_delta(points.size());
  std::iota(by_delta.begin(), by_delta.end(), std::size_t{0});
  std::sort(by_delta.begin(), by_delta.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].delta != points[b].delta) return points[a].delta > points[b].delta;
    if (points[a].rho != points[b].rho) return points[a].rho > points[b].rho;
    return points[a].rgb < points[b].rgb;
  });
  // Points are distinct colors, so the first ten are ten distinct RGB values.
  const std::size_t candidates = std::min(kMaxClusters, by_delta.size());
  std::vector<std::size_t> centers;
  for (std::size_t k = 0; k < candidates; ++k) {
    if (points[by_delta[k]].rho > kOutlierDensity) centers.push_back(by_delta[k]);
  }
  if (centers.empty()) centers.push_back(density_order(points).front());
  return centers;
}

std::vector<std::size_t> assign_clusters(std::span<const ColorPoint> points, std::span<const std::size_t> centers) {
  const std::size_t n = points.size();
  constexpr auto kUnassigned = static_cast<std::size_t>(-1);
  std::vector<std::size_t> cluster(n, kUnassigned);
  for (std::size_t c = 0; c < centers.size(); ++c) cluster.at(centers[c]) = c;
  const auto order = density_order(points);
  if (n > 0 && cluster[order.front()] == kUnassigned) {
    throw InvalidArgument("assign_clusters: the highest-density color must be a center");
  }
  for (std::size_t r = 1; r < n; ++r) {
    const std::size_t i = order[r];
    if (cluster[i] != kUnassigned) continue;
    std::size_t nearest = order[0];
    int best = squared_gap(points[i].rgb, points[nearest].rgb);
    for (std::size_t q = 1; q < r; ++q) {
      const std::size_t j = order[q];
      const int d = squared_gap(points[i].rgb, points[j].rgb);
      if (d < best || (d == best && points[j].rgb < points[nearest].rgb)) {
        best = d;
        nearest = j;
      }
    }
    cluster[i] = cluster[nearest];
  }
  return cluster;
}

Tensor<std::uint8_t> SubmaskSet::label_map() const {
  if (submasks.empty()) throw InvalidArgument("label_map: empty submask set");
  Tensor<std::uint8_t> labels(submasks.front().shape());
  for (std::size_t k = 0; k < submasks.size(); ++k) {
    const auto& m = submasks[k];
    for (std::size_t i = 0; i < m.numel(); ++i) {
      if (m[i] != 0.0f) labels[i] = static_cast<std::uint8_t>(k + 1);
    }
  }
  return labels;
}

std::uint8_t to_byte(float v) {
  const float scaled = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f);
  return static_cast<std::uint8_t>(scaled);
}

std::size_t mask_area(const Tensor32& mask) {
  return static_cast<std::size_t>(std::count_if(mask.data().begin(), mask.data().end(), [](float v) { return v != 0.0f; }));
}

SubmaskSet extract_submasks(const Tensor32& composite, const Tensor32& mask, double d_c) {
  require_chw(composite, "extract_submasks");
  require_chw(mask, "extract_submasks");
  if (composite.channels() != 3) throw InvalidArgument("extract_submasks: composite must have 3 channels");
  if (mask.channels() != 1 || mask.height() != composite.height() || mask.width() != composite.width()) {
    throw InvalidArgument("extract_submasks: mask " + shape_to_string(mask.shape()) + " does not match composite " +
                          shape_to_string(composite.shape()));
  }
  if (!(d_c > 0.0 && d_c <= 1.0)) throw InvalidArgument("extract_submasks: d_c must lie in (0, 1]");
  for (float v : mask.data()) {
    if (v != 0.0f && v != 1.0f) throw InvalidArgument("extract_submasks: mask is not binary");
  }

  const std::size_t plane = mask.numel();
  std::vector<std::size_t> pixels;
  std::vector<Rgb> colors;
  for (std::size_t i = 0; i < plane; ++i) {
    if (mask[i] == 0.0f) continue;
    pixels.push_back(i);
    colors.push_back({to_byte(composite[i]), to_byte(composite[plane + i]), to_byte(composite[2 * plane + i])});
  }
  if (pixels.empty()) throw EmptyForegroundError("extract_submasks: mask has no foreground pixel");

  // Sorted, with repeats.
  auto sorted_keys = [](const std::vector<Rgb>& cs) {
    std::vector<std::uint32_t> keys(cs.size());
    std::transform(cs.begin(), cs.end(), keys.begin(), pack);
    std::sort(keys.begin(), keys.end());
    return keys;
  };
  auto keys = sorted_keys(colors);
  auto distinct = [](const std::vector<std::uint32_t>& sorted) {
    std::size_t n = sorted.empty() ? 0 : 1;
    for (std::size_t i = 1; i < sorted.size(); ++i) n += sorted[i] != sorted[i - 1];
    return n;
  };
  bool quantized = false;
  if (distinct(keys) > kMaxExactColors) {
    for (auto& c : colors) c = quantize(c);
    keys = sorted_keys(colors);
    quantized = true;
  }

  // Sorted keys give the points in lexicographic RGB order.
  std::vector<ColorPoint> points;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    points.push_back({unpack(keys[i]), j - i, 0.0, 0.0});
    i = j;
  }
  const auto rho = compute_density(points, d_c);
  for (std::size_t i = 0; i < points.size(); ++i) points[i].rho = rho[i];
  const auto delta = compute_delta(points);
  for (std::size_t i = 0; i < points.size(); ++i) points[i].delta = delta[i];
  const auto centers = select_centers(points);
  const auto cluster = assign_clusters(points, centers);

  SubmaskSet set;
  set.d_c = d_c;
  set.quantized = quantized;
  for (auto c : centers) set.centers.push_back(points[c].rgb);
  set.submasks.assign(centers.size(), Tensor32(mask.shape()));
  for (std::size_t p = 0; p < pixels.size(); ++p) {
    const std::uint32_t key = pack(colors[p]);
    const auto it = std::lower_bound(points.begin(), points.end(), key,
                                     [](const ColorPoint& cp, std::uint32_t k) { return pack(cp.rgb) < k; });
    set.submasks[cluster[static_cast<std::size_t>(it - points.begin())]][pixels[p]] = 1.0f;
  }
  set.points = std::move(points);
  set.point_cluster = cluster;
  return set;
}

}  // namespace frih
