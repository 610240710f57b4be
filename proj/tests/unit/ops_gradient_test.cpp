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

#include "fixtures.hpp"
#include "frih/ops.hpp"
#include "frih/refinement.hpp"
#include "gradcheck.hpp"

namespace frih {
namespace {

using testing::gradient_error;
using testing::signed_away_from_zero;
using V = Var<double>;
using Vs = std::vector<V>;

constexpr double kTol = 1e-4;

Tensor64 rnd(Shape s, std::mt19937_64& rng) { return Tensor64::uniform(std::move(s), rng, -1.0, 1.0); }

TEST(OpsGradient, Conv2d) {
  std::mt19937_64 rng(1);
  for (auto [s, p] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 1}, {2, 0}}) {
    const double err = gradient_error({rnd({3, 8, 8}, rng), rnd({4, 3, 4, 4}, rng), rnd({4}, rng)},
                                      [s = s, p = p](Graph<double>&, const Vs& v) { return ops::conv2d(v[0], v[1], v[2], s, p); });
    EXPECT_LT(err, kTol);
  }
}

TEST(OpsGradient, ConvTranspose2d) {
  std::mt19937_64 rng(2);
  const double err = gradient_error({rnd({3, 4, 4}, rng), rnd({3, 2, 4, 4}, rng), rnd({2}, rng)},
                                    [](Graph<double>&, const Vs& v) { return ops::conv_transpose2d(v[0], v[1], v[2], 2, 1); });
  EXPECT_LT(err, kTol);
}

TEST(OpsGradient, ConcatUpsampleAndElementwise) {
  std::mt19937_64 rng(3);
  EXPECT_LT(gradient_error({rnd({2, 3, 3}, rng), rnd({1, 3, 3}, rng)},
                           [](Graph<double>&, const Vs& v) { return ops::concat<double>({v[0], v[1], v[0]}); }),
            kTol);
  EXPECT_LT(gradient_error({rnd({2, 3, 5}, rng)},
                           [](Graph<double>&, const Vs& v) { return ops::upsample(v[0], 12, 10); }),
            kTol);
  EXPECT_LT(gradient_error({rnd({2, 4, 4}, rng), rnd({2, 4, 4}, rng)},
                           [](Graph<double>&, const Vs& v) { return ops::mul(ops::add(v[0], v[1]), v[1]); }),
            kTol);
  EXPECT_LT(gradient_error({rnd({2, 4, 4}, rng)},
                           [](Graph<double>&, const Vs& v) { return ops::scale(v[0], -2.5); }),
            kTol);
  EXPECT_LT(gradient_error({rnd({2, 4, 4}, rng)}, [](Graph<double>&, const Vs& v) { return ops::sum(v[0]); }), kTol);
}

TEST(OpsGradient, Activations) {
  std::mt19937_64 rng(4);
  EXPECT_LT(gradient_error({signed_away_from_zero({3, 5, 5}, rng)},
                           [](Graph<double>&, const Vs& v) { return ops::relu(v[0]); }),
            kTol);
  EXPECT_LT(gradient_error({signed_away_from_zero({3, 5, 5}, rng)},
                           [](Graph<double>&, const Vs& v) { return ops::leaky_relu(v[0], 0.2); }),
            kTol);
  EXPECT_LT(gradient_error({Tensor64::uniform({3, 5, 5}, rng, -6.0, 6.0)},
                           [](Graph<double>&, const Vs& v) { return ops::bounded_sigmoid(v[0]); }),
            kTol);
}

TEST(OpsGradient, MaskedAndWeightedError) {
  std::mt19937_64 rng(5);
  Tensor64 mask({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) mask[i] = i % 3 == 0 ? 1.0 : 0.0;
  const auto target = rnd({3, 4, 4}, rng);
  EXPECT_LT(gradient_error({rnd({3, 4, 4}, rng)},
                           [&](Graph<double>&, const Vs& v) { return ops::mask_mul(v[0], mask); }),
            kTol);
  EXPECT_LT(gradient_error({rnd({3, 4, 4}, rng)},
                           [&](Graph<double>&, const Vs& v) {
                             return ops::weighted_squared_error(v[0], target, mask, 0.37);
                           }),
            kTol);
}

TEST(OpsForward, BoundedSigmoidStaysInsideOpenInterval) {
  Graph<float> g;
  Tensor32 x({1, 1, 4}, std::vector<float>{-200.0f, -30.0f, 30.0f, 200.0f});
  const auto y = ops::bounded_sigmoid(g.constant(x)).value();
  for (float v : y.data()) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(OpsForward, WeightedErrorIsADirectSum) {
  std::mt19937_64 rng(6);
  Graph<double> g;
  const auto p = rnd({3, 5, 5}, rng), t = rnd({3, 5, 5}, rng), w = rnd({1, 5, 5}, rng);
  double expect = 0;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 25; ++i) expect += w[i] * (p[c * 25 + i] - t[c * 25 + i]) * (p[c * 25 + i] - t[c * 25 + i]);
  EXPECT_NEAR(ops::weighted_squared_error(g.constant(p), t, w, 0.5).value().item(), 0.5 * expect, 1e-12);
}

TEST(Graph, UnreachedNodesHaveZeroGradient) {
  Graph<double> g;
  const auto a = g.leaf(Tensor64({2}, std::vector<double>{1, 2}), true);
  const auto b = g.leaf(Tensor64({2}, std::vector<double>{3, 4}), true);
  g.backward(ops::sum(ops::scale(a, 3.0)));
  EXPECT_EQ(g.grad(a).storage(), (std::vector<double>{3, 3}));
  EXPECT_EQ(g.grad(b).storage(), (std::vector<double>{0, 0}));
}

TEST(Graph, BackwardRequiresAScalarLoss) {
  Graph<double> g;
  const auto a = g.leaf(Tensor64({2}), true);
  EXPECT_THROW(g.backward(a), InvalidArgument);
}

TEST(Graph, ConstantsDoNotRecordBackward) {
  Graph<double> g;
  const auto a = g.constant(Tensor64({1, 2, 2}, 1.0));
  const auto y = ops::relu(a);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Graph, SharedInputAccumulates) {
  Graph<double> g;
  const auto a = g.leaf(Tensor64({1}, std::vector<double>{2.0}), true);
  g.backward(ops::sum(ops::mul(a, a)));
  EXPECT_DOUBLE_EQ(g.grad(a)[0], 4.0);
}

TEST(Graph, ValueReferencesSurviveGrowth) {
  Graph<double> g;
  const auto a = g.constant(Tensor64({1, 2, 2}, 1.5));
  const Tensor64& held = a.value();
  for (int i = 0; i < 1000; ++i) g.constant(Tensor64({1}, double(i)));
  EXPECT_EQ(held.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(held[3], 1.5);
}

TEST(TwoStage, HarmonizeMatchesCompositeShape) {
  const auto model = testing::tiny_model(16, 4);
  std::mt19937_64 rng(4);
  const auto s = testing::palette_scene(rng, 16, 16, 3, 0.7);
  const auto r = harmonize(s.composite, s.mask, build_model(model, 1), model);
  EXPECT_EQ(r.image.shape(), s.composite.shape());
}

}  // namespace
}  // namespace frih
