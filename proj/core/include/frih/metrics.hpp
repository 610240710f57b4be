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

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "frih/tensor.hpp"

namespace frih {

// All metrics take [0, 1] tensors and report on the 0-255 scale (x255, no
// rounding).
inline constexpr double kPsnrCap = 100.0;

// Mean over every pixel and channel of the squared difference.
double mse(const Tensor32& pred, const Tensor32& target);

// 10 log10(255^2 / mse), capped at 100 dB.
double psnr_from_mse(double mse);
double psnr(const Tensor32& pred, const Tensor32& target);

// Squared channel differences summed over the foreground, divided by
// channels x foreground pixels. Throws EmptyForegroundError for an empty mask.
double fmse(const Tensor32& pred, const Tensor32& target, const Tensor32& mask);

struct MetricsRow {
  std::string id;
  std::string tag;
  double foreground_ratio = 0.0;
  double mse = 0.0;
  double psnr = 0.0;
  double fmse = 0.0;
};

MetricsRow evaluate_pair(const Tensor32& pred, const Tensor32& target, const Tensor32& mask, std::string id,
                         std::string tag);

// Foreground-ratio buckets: [0, 0.05), [0.05, 0.15), [0.15, 1].
inline constexpr std::array<std::string_view, 3> kRatioBuckets{"0%-5%", "5%-15%", "15%-100%"};
std::size_t ratio_bucket(double foreground_ratio);

// Arithmetic means over one group; NaN means when count == 0.
struct AggregateRow {
  std::string group;
  std::size_t count = 0;
  double mse = 0.0;
  double psnr = 0.0;
  double fmse = 0.0;
};

inline constexpr std::string_view kAllGroup = "All";

struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::vector<AggregateRow> by_dataset;  // tags in sorted order, then "All"
  std::vector<AggregateRow> by_ratio;    // the three buckets in order, then "All"
};

// Throws InvalidArgument for an empty row list.
MetricsReport aggregate_report(std::vector<MetricsRow> rows);

std::string report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);

}  // namespace frih
