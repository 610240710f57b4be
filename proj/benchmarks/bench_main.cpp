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

#include <benchmark/benchmark.h>

#include <random>

#include "frih/dataset.hpp"
#include "frih/kernels.hpp"
#include "frih/refinement.hpp"
#include "frih/submask.hpp"

namespace {

using frih::Tensor32;

// Args: channels in, channels out, spatial size. Stride 2, kernel 4, as in
// the encoder.
void BM_Conv2dForward(benchmark::State& state) {
  const auto cin = std::size_t(state.range(0)), cout = std::size_t(state.range(1)), n = std::size_t(state.range(2));
  std::mt19937_64 rng(0);
  const auto x = Tensor32::uniform({cin, n, n}, rng, -1.0f, 1.0f);
  const auto w = Tensor32::uniform({cout, cin, 4, 4}, rng, -0.1f, 0.1f);
  const Tensor32 b({cout});
  for (auto _ : state) benchmark::DoNotOptimize(frih::kernels::conv2d(x, w, b, 2, 1));
  state.SetItemsProcessed(state.iterations() * std::int64_t(cout * cin * 16 * (n / 2) * (n / 2)));
}
BENCHMARK(BM_Conv2dForward)->Args({3, 16, 128})->Args({16, 32, 64})->Args({64, 128, 16})->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto cin = std::size_t(state.range(0)), cout = std::size_t(state.range(1)), n = std::size_t(state.range(2));
  std::mt19937_64 rng(0);
  const auto x = Tensor32::uniform({cin, n, n}, rng, -1.0f, 1.0f);
  const auto w = Tensor32::uniform({cout, cin, 4, 4}, rng, -0.1f, 0.1f);
  const auto gy = Tensor32::uniform({cout, n / 2, n / 2}, rng, -1.0f, 1.0f);
  for (auto _ : state) {
    Tensor32 gx(x.shape()), gw(w.shape()), gb({cout});
    frih::kernels::conv2d_backward(x, w, gy, 2, 1, &gx, &gw, &gb);
    benchmark::DoNotOptimize(gw);
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({3, 16, 128})->Args({16, 32, 64})->Unit(benchmark::kMillisecond);

// Arg: resolution. Synthetic scenes carry a few hundred foreground colors.
void BM_ExtractSubmasks(benchmark::State& state) {
  const auto s = frih::synthetic_sample(std::size_t(state.range(0)), 0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(frih::extract_submasks(s.composite, s.mask));
}
BENCHMARK(BM_ExtractSubmasks)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

// Above the exact-color limit, so the quantized path runs.
void BM_ExtractSubmasksNoise(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto img = Tensor32::uniform({3, 128, 128}, rng, 0.0f, 1.0f);
  const Tensor32 mask({1, 128, 128}, 1.0f);
  for (auto _ : state) benchmark::DoNotOptimize(frih::extract_submasks(img, mask));
}
BENCHMARK(BM_ExtractSubmasksNoise)->Unit(benchmark::kMillisecond);

void BM_HarmonizeDesk(benchmark::State& state) {
  frih::ModelConfig m;
  m.base.resolution = 128;
  m.base.encoder_channels = {16, 32, 64, 128, 128, 128, 128};
  m.cascade.encoder_channels = {8, 16, 32, 32, 32, 32, 32};
  m.cascade.fusion_channels = 16;
  const auto params = frih::build_model(m, 0);
  const auto s = frih::synthetic_sample(128, 0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(frih::harmonize(s.composite, s.mask, params, m));
}
BENCHMARK(BM_HarmonizeDesk)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
