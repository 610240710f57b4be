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

#include "frih/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "frih/submask.hpp"

namespace frih {
namespace {

void check_pair(const Tensor32& pred, const Tensor32& target, const char* what) {
  if (pred.shape() != target.shape()) {
    throw InvalidArgument(std::string(what) + ": shapes differ " + shape_to_string(pred.shape()) + " vs " +
                          shape_to_string(target.shape()));
  }
}

double squared_255(float a, float b) {
  const double d = (static_cast<double>(a) - static_cast<double>(b)) * 255.0;
  return d * d;
}

struct Accumulator {
  std::size_t count = 0;
  double mse = 0.0, psnr = 0.0, fmse = 0.0;

  void add(const MetricsRow& r) {
    ++count;
    mse += r.mse;
    psnr += r.psnr;
    fmse += r.fmse;
  }
  AggregateRow finish(std::string group) const {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(count);
    return {std::move(group), count, count ? mse / n : nan, count ? psnr / n : nan, count ? fmse / n : nan};
  }
};

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json aggregates(const std::vector<AggregateRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& a : rows) {
    arr.push_back({{"group", a.group}, {"count", a.count}, {"mse", number(a.mse)}, {"psnr", number(a.psnr)},
                   {"fmse", number(a.fmse)}});
  }
  return arr;
}

}  // namespace

double mse(const Tensor32& pred, const Tensor32& target) {
  check_pair(pred, target, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) s += squared_255(pred[i], target[i]);
  return s / static_cast<double>(pred.numel());
}

double psnr_from_mse(double m) {
  if (m < 255.0 * 255.0 * 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / m));
}

double psnr(const Tensor32& pred, const Tensor32& target) { return psnr_from_mse(mse(pred, target)); }

double fmse(const Tensor32& pred, const Tensor32& target, const Tensor32& mask) {
  check_pair(pred, target, "fmse");
  require_chw(pred, "fmse");
  const std::size_t plane = pred.height() * pred.width();
  if (mask.numel() != plane) throw InvalidArgument("fmse: mask does not match the image plane");
  // Same visiting order as mse, so a full mask reproduces it bit for bit.
  const std::size_t area = mask_area(mask);
  double s = 0.0;
  for (std::size_t c = 0; c < pred.channels(); ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (mask[i] != 0.0f) s += squared_255(pred[c * plane + i], target[c * plane + i]);
    }
  }
  if (area == 0) throw EmptyForegroundError("fmse: mask has no foreground pixel");
  return s / static_cast<double>(pred.channels() * area);
}

MetricsRow evaluate_pair(const Tensor32& pred, const Tensor32& target, const Tensor32& mask, std::string id,
                         std::string tag) {
  MetricsRow row;
  row.id = std::move(id);
  row.tag = std::move(tag);
  row.foreground_ratio = static_cast<double>(mask_area(mask)) / static_cast<double>(mask.numel());
  row.mse = mse(pred, target);
  row.psnr = psnr_from_mse(row.mse);
  row.fmse = fmse(pred, target, mask);
  return row;
}

std::size_t ratio_bucket(double r) {
  if (r < 0.05) return 0;
  if (r < 0.15) return 1;
  return 2;
}

MetricsReport aggregate_report(std::vector<MetricsRow> rows) {
  if (rows.empty()) throw InvalidArgument("aggregate_report: no rows");
  std::map<std::string, Accumulator> tags;
  std::array<Accumulator, kRatioBuckets.size()> buckets{};
  Accumulator all;
  for (const auto& r : rows) {
    tags[r.tag].add(r);
    buckets[ratio_bucket(r.foreground_ratio)].add(r);
    all.add(r);
  }
  MetricsReport report;
  for (const auto& [tag, acc] : tags) report.by_dataset.push_back(acc.finish(tag));
  report.by_dataset.push_back(all.finish(std::string(kAllGroup)));
  for (std::size_t b = 0; b < buckets.size(); ++b) report.by_ratio.push_back(buckets[b].finish(std::string(kRatioBuckets[b])));
  report.by_ratio.push_back(all.finish(std::string(kAllGroup)));
  report.rows = std::move(rows);
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  auto rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"id", r.id}, {"tag", r.tag}, {"foreground_ratio", r.foreground_ratio}, {"mse", number(r.mse)},
                    {"psnr", number(r.psnr)}, {"fmse", number(r.fmse)}});
  }
  j["rows"] = std::move(rows);
  j["by_dataset"] = aggregates(report.by_dataset);
  j["by_foreground_ratio"] = aggregates(report.by_ratio);
  return j.dump(2) + "\n";
}

std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "id,tag,foreground_ratio,mse,psnr,fmse\n";
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (const auto& r : report.rows) {
    out << field(r.id) << ',' << field(r.tag) << ',' << r.foreground_ratio << ',' << r.mse << ',' << r.psnr << ','
        << r.fmse << '\n';
  }
  return out.str();
}

}  // namespace frih
