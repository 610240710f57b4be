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

#include <random>

#include "frih/kernels.hpp"
#include "oracles.hpp"

namespace frih {
namespace {

Tensor64 rand_tensor(Shape s, std::mt19937_64& rng) { return Tensor64::uniform(std::move(s), rng, -1.0, 1.0); }

double max_abs_diff(const Tensor64& a, const Tensor64& b) {
  EXPECT_EQ(a.shape(), b.shape());
  double m = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(Tensor, RejectsZeroExtentAndMismatchedData) {
  EXPECT_THROW(Tensor32({3, 0, 2}), InvalidArgument);
  EXPECT_THROW(Tensor32(Shape{}), InvalidArgument);
  EXPECT_THROW(Tensor32({2, 2}, std::vector<float>(3)), InvalidArgument);
  EXPECT_THROW(Tensor32({2}).item(), InvalidArgument);
}

TEST(Tensor, ChwIndexingIsRowMajor) {
  Tensor32 t({2, 3, 4});
  t.at(1, 2, 3) = 7.0f;
  EXPECT_EQ(t[23], 7.0f);
  EXPECT_EQ(t.channels(), 2u);
  EXPECT_EQ(t.height(), 3u);
  EXPECT_EQ(t.width(), 4u);
}

TEST(Kernels, OutputExtents) {
  EXPECT_EQ(kernels::conv_output_extent(256, {4, 2, 1}), 128u);
  EXPECT_EQ(kernels::conv_output_extent(2, {4, 2, 1}), 1u);
  EXPECT_EQ(kernels::conv_output_extent(5, {3, 1, 1}), 5u);
  EXPECT_EQ(kernels::conv_transpose_output_extent(1, {4, 2, 1}), 2u);
  EXPECT_EQ(kernels::conv_transpose_output_extent(64, {4, 2, 1}), 128u);
  EXPECT_THROW(kernels::conv_output_extent(1, {4, 1, 0}), InvalidArgument);
}

struct Geometry {
  std::size_t ci, co, h, w, k, s, p;
};

std::vector<Geometry> geometries() {
  return {{1, 1, 5, 5, 3, 1, 1}, {3, 4, 8, 8, 4, 2, 1}, {2, 3, 7, 6, 3, 2, 0},
          {4, 2, 4, 4, 1, 1, 0}, {5, 3, 9, 9, 4, 2, 1}, {2, 2, 2, 2, 4, 2, 1}};
}

TEST(Kernels, Conv2dMatchesDirectSummation) {
  std::mt19937_64 rng(1);
  for (const auto& g : geometries()) {
    const auto x = rand_tensor({g.ci, g.h, g.w}, rng);
    const auto w = rand_tensor({g.co, g.ci, g.k, g.k}, rng);
    const auto b = rand_tensor({g.co}, rng);
    EXPECT_LT(max_abs_diff(kernels::conv2d(x, w, b, g.s, g.p), oracle::direct_conv2d(x, w, b, g.s, g.p)), 1e-12);
  }
}

TEST(Kernels, Conv2dLargeInputUsesSeveralTiles) {
  std::mt19937_64 rng(2);
  const auto x = rand_tensor({8, 96, 96}, rng);
  const auto w = rand_tensor({6, 8, 3, 3}, rng);
  const auto b = rand_tensor({6}, rng);
  EXPECT_LT(max_abs_diff(kernels::conv2d(x, w, b, 1, 1), oracle::direct_conv2d(x, w, b, 1, 1)), 1e-11);
}

TEST(Kernels, ConvTransposeMatchesScatterForm) {
  std::mt19937_64 rng(3);
  for (const auto& g : geometries()) {
    if (g.k <= 2 * g.p && g.h == 1) continue;
    const auto x = rand_tensor({g.ci, g.h, g.w}, rng);
    const auto w = rand_tensor({g.ci, g.co, g.k, g.k}, rng);
    const auto b = rand_tensor({g.co}, rng);
    EXPECT_LT(max_abs_diff(kernels::conv_transpose2d(x, w, b, g.s, g.p),
                           oracle::direct_conv_transpose2d(x, w, b, g.s, g.p)),
              1e-12);
  }
}

// <conv(x), y> == <x, conv_transpose(y)> with the same weight and zero bias.
TEST(Kernels, ConvTransposeIsTheAdjointOfConv) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> ch(1, 4), ext(4, 12), kk(1, 4), ss(1, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t ci = ch(rng), co = ch(rng), k = kk(rng), s = ss(rng);
    const std::size_t p = std::uniform_int_distribution<std::size_t>(0, (k - 1) / 2)(rng);
    // Extents the transpose restores exactly: (n + 2p - k) divisible by s.
    std::size_t h = ext(rng), w = ext(rng);
    while ((h + 2 * p - k) % s) ++h;
    while ((w + 2 * p - k) % s) ++w;
    const auto x = rand_tensor({ci, h, w}, rng);
    const auto wt = rand_tensor({co, ci, k, k}, rng);
    const auto y_conv = kernels::conv2d(x, wt, Tensor64({co}), s, p);
    const auto y = rand_tensor(y_conv.shape(), rng);
    const auto back = kernels::conv_transpose2d(y, wt, Tensor64({ci}), s, p);
    ASSERT_EQ(back.shape(), x.shape());
    const double rhs = oracle::inner(x, back);
    const double lhs = oracle::inner(y_conv, y);
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs))) << "trial " << trial;
  }
}

TEST(Kernels, BilinearMatchesHalfPixelFormula) {
  std::mt19937_64 rng(5);
  const auto x = rand_tensor({2, 5, 7}, rng);
  for (auto [oh, ow] : {std::pair<std::size_t, std::size_t>{10, 14}, {5, 7}, {16, 9}, {3, 3}}) {
    const auto y = kernels::resize_bilinear(x, oh, ow);
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) EXPECT_NEAR(y.at(c, i, j), oracle::bilinear_at(x, c, i, j, oh, ow), 1e-12);
  }
}

TEST(Kernels, BilinearBackwardIsTheAdjoint) {
  std::mt19937_64 rng(6);
  const auto x = rand_tensor({3, 6, 4}, rng);
  const auto y = rand_tensor({3, 13, 11}, rng);
  const double lhs = oracle::inner(kernels::resize_bilinear(x, 13, 11), y);
  const double rhs = oracle::inner(x, kernels::resize_bilinear_backward(y, 6, 4));
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(Kernels, NearestPicksFloorOfScaledCenter) {
  Tensor32 x({1, 1, 4});
  for (std::size_t i = 0; i < 4; ++i) x[i] = float(i);
  const auto up = kernels::resize_nearest(x, 1, 8);
  EXPECT_EQ(up.storage(), (std::vector<float>{0, 0, 1, 1, 2, 2, 3, 3}));
  const auto down = kernels::resize_nearest(x, 1, 2);
  EXPECT_EQ(down.storage(), (std::vector<float>{1, 3}));
}

TEST(Kernels, FloatAndDoubleAgree) {
  std::mt19937_64 rng(7);
  const auto x = rand_tensor({3, 16, 16}, rng);
  const auto w = rand_tensor({4, 3, 4, 4}, rng);
  const auto b = rand_tensor({4}, rng);
  const auto y64 = kernels::conv2d(x, w, b, 2, 1);
  const auto y32 = kernels::conv2d(x.cast<float>(), w.cast<float>(), b.cast<float>(), 2, 1);
  EXPECT_LT(max_abs_diff(y64, y32.cast<double>()), 1e-4);
}

TEST(Kernels, RepeatedCallsAreBitIdentical) {
  std::mt19937_64 rng(8);
  const auto x = Tensor32::uniform({5, 32, 32}, rng, -1.0f, 1.0f);
  const auto w = Tensor32::uniform({7, 5, 4, 4}, rng, -1.0f, 1.0f);
  const auto b = Tensor32::uniform({7}, rng, -1.0f, 1.0f);
  EXPECT_EQ(kernels::conv2d(x, w, b, 2, 1), kernels::conv2d(x, w, b, 2, 1));
}

TEST(Kernels, RejectsMismatchedChannels) {
  EXPECT_THROW(kernels::conv2d(Tensor32({3, 8, 8}), Tensor32({4, 2, 3, 3}), Tensor32({4}), 1, 1), InvalidArgument);
  EXPECT_THROW(kernels::conv2d(Tensor32({3, 8, 8}), Tensor32({4, 3, 3, 3}), Tensor32({3}), 1, 1), InvalidArgument);
}

}  // namespace
}  // namespace frih
