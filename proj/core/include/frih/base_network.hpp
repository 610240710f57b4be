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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "frih/parameters.hpp"

namespace frih {

// Stage one: a U-Net style encoder-decoder. Every encoder level is a 4x4,
// stride-2, pad-1 convolution; every decoder level a matching transposed
// convolution fed with the previous decoder output concatenated with the
// encoder features of the same size.
struct BaseNetConfig {
  std::size_t resolution = 256;
  std::vector<std::size_t> encoder_channels{32, 64, 128, 256, 512, 512, 512};

  std::size_t depth() const noexcept { return encoder_channels.size(); }
  // Throws InvalidArgument for a non power-of-two resolution, an empty
  // channel list, a zero width, or resolution / 2^depth < 1.
  void validate() const;
};

inline constexpr std::size_t kKernel = 4;
inline constexpr std::size_t kStride = 2;
inline constexpr std::size_t kPadding = 1;
inline constexpr float kEncoderSlope = 0.2f;

// base.enc.{1..depth}.{w,b} and base.dec.{1..depth}.{w,b}.
ModelParameters build_base(const BaseNetConfig& config, std::uint64_t seed);

// He-uniform bound for hidden layers; heads feeding the output map use the
// plain 1/sqrt(fan_in) bound.
void add_conv_params(ModelParameters& params, InitRng& rng, const std::string& prefix,
                     std::size_t c_out, std::size_t c_in, std::size_t kernel, bool head = false);
void add_conv_transpose_params(ModelParameters& params, InitRng& rng, const std::string& prefix,
                               std::size_t c_in, std::size_t c_out, std::size_t kernel,
                               std::size_t stride, bool head = false);

template <typename T>
struct CoarseResult {
  Var<T> image;                        // 3 x H x W in (0, 1)
  std::vector<Var<T>> encoder_features;  // E_1..E_depth, E_i at H / 2^i
};

// composite: 3 x H x W, mask: 1 x H x W, H == W == config.resolution.
template <typename T>
CoarseResult<T> forward_coarse(const Var<T>& composite, const Var<T>& mask, const BoundParams<T>& params,
                               const BaseNetConfig& config);

}  // namespace frih
