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

#include <gtest/gtest.h>

#include <json.hpp>
#include <random>

#include "frih/metrics.hpp"
#include "oracles.hpp"

namespace frih {
namespace {

Tensor32 rnd(std::mt19937_64& rng, std::size_t n = 16) { return Tensor32::uniform({3, n, n}, rng, 0.0f, 1.0f); }

TEST(Mse, Examples) {
  std::mt19937_64 rng(1);
  const auto a = rnd(rng);
  EXPECT_EQ(mse(a, a), 0.0);
  Tensor32 lo({3, 4, 4}, 100.0f / 255.0f), hi({3, 4, 4}, 116.0f / 255.0f);
  EXPECT_NEAR(mse(lo, hi), 256.0, 1e-3);
  EXPECT_THROW(mse(a, Tensor32({3, 8, 8})), InvalidArgument);
}

TEST(Mse, MatchesDirectSum) {
  std::mt19937_64 rng(2);
  const auto a = rnd(rng, 20), b = rnd(rng, 20);
  long double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const long double d = (long double)a[i] * 255 - (long double)b[i] * 255;
    s += d * d;
  }
  const double expect = double(s / a.numel());
  EXPECT_NEAR(mse(a, b), expect, 1e-6 * expect);
}

TEST(Psnr, CapAndFormula) {
  std::mt19937_64 rng(3);
  const auto a = rnd(rng);
  EXPECT_EQ(psnr(a, a), 100.0);
  EXPECT_NEAR(psnr_from_mse(255.0 * 255.0), 0.0, 1e-12);
  EXPECT_NEAR(psnr_from_mse(172.47), 25.76, 0.005);
}

TEST(Psnr, ConstructedPairAtReferenceMse) {
  const float delta = float(std::sqrt(172.47) / 255.0);
  Tensor32 a({3, 8, 8}, 0.3f), b({3, 8, 8}, 0.3f + delta);
  EXPECT_NEAR(mse(a, b), 172.47, 1e-3);
  EXPECT_NEAR(psnr(a, b), 25.76, 0.005);
}

TEST(Psnr, DecreasesAsErrorGrows) {
  double prev = 101.0;
  for (int k = 0; k <= 40; ++k) {
    Tensor32 a({3, 4, 4}, 0.2f), b({3, 4, 4}, 0.2f + 0.015f * float(k));
    const double p = psnr(a, b);
    EXPECT_LT(p, prev);
    EXPECT_GT(p, 0.0);
    prev = p;
  }
}

TEST(Fmse, FullMaskEqualsMseExactly) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto a = rnd(rng, 8 + t), b = rnd(rng, 8 + t);
    EXPECT_EQ(fmse(a, b, Tensor32({1, 8u + t, 8u + t}, 1.0f)), mse(a, b));
  }
}

TEST(Fmse, OnlyTheForegroundCounts) {
  std::mt19937_64 rng(5);
  const auto target = rnd(rng, 8);
  auto pred = target;
  Tensor32 mask({1, 8, 8});
  for (std::size_t i = 0; i < 32; ++i) mask[i] = 1.0f;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 32; i < 64; ++i) pred[c * 64 + i] = 0.0f;
  EXPECT_EQ(fmse(pred, target, mask), 0.0);
  pred[5] += 0.1f;
  EXPECT_NEAR(fmse(pred, target, mask), (0.1 * 255) * (0.1 * 255) / (3 * 32), 1e-2);
  EXPECT_THROW(fmse(pred, target, Tensor32({1, 8, 8})), EmptyForegroundError);
}

TEST(Buckets, Edges) {
  EXPECT_EQ(ratio_bucket(0.0), 0u);
  EXPECT_EQ(ratio_bucket(0.0499), 0u);
  EXPECT_EQ(ratio_bucket(0.05), 1u);
  EXPECT_EQ(ratio_bucket(0.1499), 1u);
  EXPECT_EQ(ratio_bucket(0.15), 2u);
  EXPECT_EQ(ratio_bucket(1.0), 2u);
}

MetricsRow row(std::string tag, double ratio, double m, double p, double f) {
  return {tag + "/x", tag, ratio, m, p, f};
}

TEST(Aggregate, SingleRowAndTwoBuckets) {
  const auto one = aggregate_report({row("HAdobe5k", 0.1, 10, 30, 40)});
  ASSERT_EQ(one.by_dataset.size(), 2u);
  for (const auto& g : one.by_dataset) EXPECT_EQ(g.mse, 10.0);
  EXPECT_EQ(one.by_ratio[1].count, 1u);
  EXPECT_TRUE(std::isnan(one.by_ratio[0].mse));

  const auto two = aggregate_report({row("A", 0.01, 10, 30, 40), row("B", 0.5, 20, 20, 80)});
  EXPECT_EQ(two.by_ratio[0].fmse, 40.0);
  EXPECT_EQ(two.by_ratio[2].fmse, 80.0);
  EXPECT_EQ(two.by_ratio[3].group, "All");
  EXPECT_EQ(two.by_ratio[3].fmse, 60.0);
  EXPECT_EQ(two.by_dataset[0].group, "A");
  EXPECT_EQ(two.by_dataset[2].psnr, 25.0);
  EXPECT_THROW(aggregate_report({}), InvalidArgument);
}

TEST(Aggregate, MatchesGroupByOracleAndIgnoresRowOrder) {
  std::mt19937_64 rng(6);
  const std::vector<std::string> tags{"HCOCO", "HAdobe5k", "HFlickr", "Hday2night"};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MetricsRow> rows;
  std::vector<oracle::Row> plain;
  for (int i = 0; i < 1000; ++i) {
    const auto& tag = tags[rng() % tags.size()];
    const double r = u(rng) * u(rng), m = 500 * u(rng), p = 20 + 20 * u(rng), f = 2000 * u(rng);
    rows.push_back(row(tag, r, m, p, f));
    plain.push_back({tag, r, m, p, f});
  }
  const auto by_tag = oracle::group_means(plain, [](const oracle::Row& r) { return r.tag; });
  const auto by_ratio = oracle::group_means(plain, [](const oracle::Row& r) {
    return r.ratio < 0.05 ? std::string("0%-5%") : r.ratio < 0.15 ? std::string("5%-15%") : std::string("15%-100%");
  });
  const auto all = oracle::group_means(plain, [](const oracle::Row&) { return std::string("All"); });
  auto check = [](const AggregateRow& got, const oracle::GroupMean& want) {
    EXPECT_EQ(got.count, want.count) << got.group;
    EXPECT_NEAR(got.mse, want.mse, 1e-9 * want.mse) << got.group;
    EXPECT_NEAR(got.psnr, want.psnr, 1e-9 * want.psnr) << got.group;
    EXPECT_NEAR(got.fmse, want.fmse, 1e-9 * want.fmse) << got.group;
  };
  auto report = aggregate_report(rows);
  for (const auto& g : report.by_dataset) check(g, g.group == "All" ? all.at("All") : by_tag.at(g.group));
  for (const auto& g : report.by_ratio) check(g, g.group == "All" ? all.at("All") : by_ratio.at(g.group));

  std::shuffle(rows.begin(), rows.end(), rng);
  const auto shuffled = aggregate_report(rows);
  for (std::size_t i = 0; i < report.by_ratio.size(); ++i) {
    EXPECT_NEAR(shuffled.by_ratio[i].mse, report.by_ratio[i].mse, 1e-9 * report.by_ratio[i].mse);
  }
}

TEST(Report, JsonAndCsvShapes) {
  const auto rep = aggregate_report({row("A", 0.01, 10, 30, 40), row("B", 0.02, 20, 20, 80)});
  const auto j = nlohmann::json::parse(report_to_json(rep));
  EXPECT_EQ(j.at("rows").size(), 2u);
  EXPECT_EQ(j.at("by_dataset").size(), 3u);
  EXPECT_TRUE(j.at("by_foreground_ratio")[1].at("mse").is_null());
  const auto csv = report_to_csv(rep);
  EXPECT_NE(csv.find("A/x"), std::string::npos);
}

TEST(EvaluatePair, IdentityPredictorReportsCompositeMse) {
  std::mt19937_64 rng(7);
  const auto c = rnd(rng), t = rnd(rng);
  Tensor32 mask({1, 16, 16});
  for (std::size_t i = 0; i < 40; ++i) mask[i] = 1.0f;
  const auto r = evaluate_pair(c, t, mask, "x", "tag");
  EXPECT_EQ(r.mse, mse(c, t));
  EXPECT_EQ(r.fmse, fmse(c, t, mask));
  EXPECT_DOUBLE_EQ(r.foreground_ratio, 40.0 / 256.0);
}

}  // namespace
}  // namespace frih
