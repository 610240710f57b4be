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
#include "frih/training.hpp"

namespace frih {
namespace {

struct Inputs {
  Tensor32 composite, mask;
};

Inputs random_inputs(std::size_t res, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Inputs in{Tensor32::uniform({3, res, res}, rng, 0.0f, 1.0f), Tensor32({1, res, res})};
  for (std::size_t y = res / 4; y < 3 * res / 4; ++y)
    for (std::size_t x = res / 4; x < 3 * res / 4; ++x) in.mask.at(0, y, x) = 1.0f;
  return in;
}

TEST(BaseNetwork, ConfigValidation) {
  BaseNetConfig c;
  c.resolution = 128;
  EXPECT_NO_THROW(c.validate());
  c.resolution = 64;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.resolution = 96;
  c.encoder_channels = {4, 4};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.resolution = 64;
  c.encoder_channels = {4, 0};
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(BaseNetwork, BuildIsDeterministic) {
  BaseNetConfig c;
  EXPECT_EQ(build_base(c, 0), build_base(c, 0));
  EXPECT_NE(build_base(c, 0), build_base(c, 1));
}

TEST(BaseNetwork, ShapesAndBoundedOutput) {
  auto m = testing::tiny_model(32, 5);
  m.base.encoder_channels = {4, 6, 8, 8, 8};
  const auto params = build_base(m.base, 3);
  const auto in = random_inputs(32, 1);
  Graph<float> g;
  const auto bound = bind_parameters(g, params, false);
  const auto out = forward_coarse(g.constant(in.composite), g.constant(in.mask), bound, m.base);
  EXPECT_EQ(out.image.shape(), (Shape{3, 32, 32}));
  ASSERT_EQ(out.encoder_features.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(out.encoder_features[i].shape(), (Shape{m.base.encoder_channels[i], 32u >> (i + 1), 32u >> (i + 1)}));
  }
  for (float v : out.image.value().data()) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
  EXPECT_THROW(forward_coarse(g.constant(Tensor32({3, 16, 16})), g.constant(Tensor32({1, 16, 16})), bound, m.base),
               InvalidArgument);
}

TEST(BaseNetwork, DeepestLevelIsOnePixelAt128) {
  BaseNetConfig c;
  c.resolution = 128;
  c.encoder_channels.assign(7, 2);
  const auto params = build_base(c, 0);
  const auto in = random_inputs(128, 2);
  Graph<float> g;
  const auto out = forward_coarse(g.constant(in.composite), g.constant(in.mask), bind_parameters(g, params, false), c);
  EXPECT_EQ(out.encoder_features.back().shape(), (Shape{2, 1, 1}));
}

TEST(BaseNetwork, ForwardIsBitIdentical) {
  const auto m = testing::tiny_model(32, 5);
  const auto params = build_model(m, 4);
  const auto in = random_inputs(32, 3);
  auto run = [&] {
    Graph<float> g;
    return forward_coarse(g.constant(in.composite), g.constant(in.mask), bind_parameters(g, params, false), m.base)
        .image.value();
  };
  EXPECT_EQ(run(), run());
}

TEST(BaseNetwork, CoarseLossReachesEveryBaseParameter) {
  const auto m = testing::tiny_model(32, 5);
  const auto params = build_base(m.base, 5);
  const auto in = random_inputs(32, 4);
  std::mt19937_64 rng(9);
  const auto target = Tensor32::uniform({3, 32, 32}, rng, 0.0f, 1.0f);
  Graph<float> g;
  const auto bound = bind_parameters(g, params, true);
  const auto out = forward_coarse(g.constant(in.composite), g.constant(in.mask), bound, m.base);
  g.backward(loss_coarse(out.image, target, in.mask, 100.0));
  for (const auto& [name, v] : bound) {
    const auto grad = g.grad(v);
    EXPECT_TRUE(std::any_of(grad.data().begin(), grad.data().end(), [](float x) { return x != 0.0f; })) << name;
  }
}

TEST(Cascade, DecoderShapesAndFusionWidth) {
  ModelConfig m;
  m.base.resolution = 256;
  m.base.encoder_channels.assign(7, 2);
  m.cascade.encoder_channels = {2, 3, 4, 5, 5, 5, 5};
  m.cascade.fusion_channels = 2;
  const auto params = build_model(m, 0);
  const auto in = random_inputs(256, 5);
  Graph<float> g;
  const auto bound = bind_parameters(g, params, false);
  const auto coarse = forward_coarse(g.constant(in.composite), g.constant(in.mask), bound, m.base);
  const auto dc = forward_cascade(coarse.image, g.constant(in.mask), coarse.encoder_features, bound, m.cascade);
  ASSERT_EQ(dc.size(), 7u);
  EXPECT_EQ(dc.front().shape()[1], 4u);
  EXPECT_EQ(dc.back().shape()[1], 256u);
  std::size_t sum = 0;
  for (const auto& d : dc) sum += d.shape()[0];
  EXPECT_EQ(m.cascade.fusion_input_channels(), sum);
  EXPECT_EQ(params.at("fusion.a.w").dim(1), sum);
  const auto out = fusion_predict(dc, bound, m.cascade, 256);
  EXPECT_EQ(out.shape(), (Shape{3, 256, 256}));
}

TEST(Cascade, MismatchedSourcesAreRejected) {
  const auto m = testing::tiny_model(32, 5);
  const auto params = build_model(m, 0);
  const auto in = random_inputs(32, 6);
  Graph<float> g;
  const auto bound = bind_parameters(g, params, false);
  auto coarse = forward_coarse(g.constant(in.composite), g.constant(in.mask), bound, m.base);
  auto feats = coarse.encoder_features;
  std::swap(feats[1], feats[2]);
  EXPECT_THROW(forward_cascade(coarse.image, g.constant(in.mask), feats, bound, m.cascade), InvalidArgument);
  feats.pop_back();
  EXPECT_THROW(forward_cascade(coarse.image, g.constant(in.mask), feats, bound, m.cascade), InvalidArgument);
  auto dc = forward_cascade(coarse.image, g.constant(in.mask), coarse.encoder_features, bound, m.cascade);
  dc.pop_back();
  EXPECT_THROW(fusion_predict(dc, bound, m.cascade, 32), InvalidArgument);
}

TEST(Cascade, EveryDecoderLevelFeedsTheFusionHead) {
  const auto m = testing::tiny_model(32, 5);
  const auto params = build_model(m, 7);
  const auto in = random_inputs(32, 7);
  Graph<float> g;
  const auto bound = bind_parameters(g, params, false);
  const auto coarse = forward_coarse(g.constant(in.composite), g.constant(in.mask), bound, m.base);
  const auto dc = forward_cascade(coarse.image, g.constant(in.mask), coarse.encoder_features, bound, m.cascade);
  const auto reference = fusion_predict(dc, bound, m.cascade, 32).value();
  for (std::size_t i = 0; i < dc.size(); ++i) {
    auto probe = dc;
    probe[i] = g.constant(Tensor32(dc[i].shape()));
    bool all_zero = true;
    for (float v : dc[i].value().data()) all_zero &= v == 0.0f;
    if (all_zero) continue;  // a dead ReLU level cannot be probed this way
    EXPECT_NE(fusion_predict(probe, bound, m.cascade, 32).value(), reference) << "DC_" << i + 1;
  }
}

TEST(Cascade, RefineLossReachesBaseEncoder) {
  const auto m = testing::tiny_model(32, 5);
  const auto params = build_model(m, 8);
  const auto in = random_inputs(32, 8);
  std::mt19937_64 rng(10);
  const auto target = Tensor32::uniform({3, 32, 32}, rng, 0.0f, 1.0f);
  Graph<float> g;
  const auto bound = bind_parameters(g, params, true);
  const auto coarse = forward_coarse(g.constant(in.composite), g.constant(in.mask), bound, m.base);
  const auto dc = forward_cascade(coarse.image, g.constant(in.mask), coarse.encoder_features, bound, m.cascade);
  const auto refined = fusion_predict(dc, bound, m.cascade, 32);
  g.backward(loss_refine(refined, target, std::vector<Tensor32>{in.mask}, 100.0));
  for (std::size_t i = 1; i <= m.base.depth(); ++i) {
    const auto grad = g.grad(bound.at("base.enc." + std::to_string(i) + ".w"));
    EXPECT_TRUE(std::any_of(grad.data().begin(), grad.data().end(), [](float x) { return x != 0.0f; })) << i;
  }
}

TEST(Cascade, LightweightShareOfParameters) {
  ModelConfig defaults;
  auto ratio = [](const ModelParameters& p) {
    return double(count_parameters(p, "casc.") + count_parameters(p, "fusion.")) / double(count_parameters(p));
  };
  EXPECT_LT(ratio(build_model(defaults, 0)), 0.35);
  ModelConfig desk;
  desk.base.resolution = 128;
  desk.base.encoder_channels = {16, 32, 64, 128, 128, 128, 128};
  desk.cascade.encoder_channels = {8, 16, 32, 32, 32, 32, 32};
  desk.cascade.fusion_channels = 16;
  EXPECT_LT(ratio(build_model(desk, 0)), 0.35);
}

TEST(Cascade, ArchitectureIsRecoveredFromParameters) {
  auto m = testing::tiny_model(32, 5);
  m.base.encoder_channels = {3, 4, 5, 6, 7};
  m.cascade.encoder_channels = {2, 3, 4, 4, 4};
  for (bool fusion : {true, false}) {
    m.cascade.fusion = fusion;
    const auto back = infer_model_config(build_model(m, 0), 32);
    EXPECT_EQ(back.base.encoder_channels, m.base.encoder_channels);
    EXPECT_EQ(back.cascade.encoder_channels, m.cascade.encoder_channels);
    EXPECT_EQ(back.cascade.fusion_channels, m.cascade.fusion_channels);
    EXPECT_EQ(back.cascade.fusion, fusion);
  }
}

TEST(Combine, EveryPixelComesFromExactlyOneSource) {
  const std::size_t n = 12, plane = n * n;
  std::mt19937_64 rng(9);
  const auto composite = Tensor32::uniform({3, n, n}, rng, 0.0f, 1.0f);
  Tensor32 mask({1, n, n});
  std::vector<Tensor32> subs(3, Tensor32({1, n, n}));
  std::vector<int> owner(plane, -1);
  for (std::size_t i = 0; i < plane; ++i) {
    if (rng() % 4 == 0) continue;
    mask[i] = 1.0f;
    owner[i] = int(rng() % 3);
    subs[owner[i]][i] = 1.0f;
  }
  Graph<float> g;
  std::vector<Var<float>> refined;
  std::vector<Tensor32> sources;
  for (int k = 0; k < 3; ++k) {
    sources.push_back(Tensor32::uniform({3, n, n}, rng, 0.0f, 1.0f));
    refined.push_back(g.constant(sources.back()));
  }
  const auto out = combine_outputs(refined, subs, composite, mask).value();
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i) {
      const float expect = owner[i] < 0 ? composite[c * plane + i] : sources[owner[i]][c * plane + i];
      ASSERT_EQ(out[c * plane + i], expect);
    }
  refined.pop_back();
  EXPECT_THROW(combine_outputs(refined, subs, composite, mask), InvalidArgument);
}

TEST(Combine, PerfectRefinementReproducesTarget) {
  const std::size_t n = 8;
  std::mt19937_64 rng(10);
  const auto target = Tensor32::uniform({3, n, n}, rng, 0.0f, 1.0f);
  auto composite = target;
  Tensor32 mask({1, n, n});
  for (std::size_t i = 10; i < 40; ++i) {
    mask[i] = 1.0f;
    for (std::size_t c = 0; c < 3; ++c) composite[c * n * n + i] *= 0.5f;
  }
  Graph<float> g;
  EXPECT_EQ(combine_outputs({g.constant(target)}, {mask}, composite, mask).value(), target);
}

TEST(Harmonize, BackgroundIsCopiedAndOutputBounded) {
  const auto m = testing::tiny_model(32, 5);
  const auto params = build_model(m, 11);
  std::mt19937_64 rng(11);
  const auto s = testing::palette_scene(rng, 32, 32, 12, 0.3);
  const auto r = harmonize(s.composite, s.mask, params, m);
  EXPECT_EQ(r.image.shape(), (Shape{3, 32, 32}));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 1024; ++i) {
      const float v = r.image[c * 1024 + i];
      if (s.mask[i] == 0.0f) {
        ASSERT_EQ(v, s.composite[c * 1024 + i]);
      } else {
        ASSERT_GT(v, 0.0f);
        ASSERT_LT(v, 1.0f);
      }
    }
}

}  // namespace
}  // namespace frih
