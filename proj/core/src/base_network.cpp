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

#include "frih/base_network.hpp"

#include <cmath>
#include <string>

#include "frih/ops.hpp"

namespace frih {

void BaseNetConfig::validate() const {
  if (encoder_channels.empty()) throw InvalidArgument("base network: encoder_channels is empty");
  for (auto c : encoder_channels) {
    if (c == 0) throw InvalidArgument("base network: encoder channel widths must be >= 1");
  }
  if (resolution == 0 || (resolution & (resolution - 1)) != 0) {
    throw InvalidArgument("base network: resolution " + std::to_string(resolution) + " is not a power of two");
  }
  if (depth() >= 64 || (resolution >> depth()) < 1) {
    throw InvalidArgument("base network: resolution " + std::to_string(resolution) + " cannot be downsampled " +
                          std::to_string(depth()) + " times");
  }
}

void add_conv_params(ModelParameters& params, InitRng& rng, const std::string& prefix, std::size_t c_out,
                     std::size_t c_in, std::size_t kernel, bool head) {
  const double fan_in = static_cast<double>(c_in * kernel * kernel);
  const double bound = head ? 1.0 / std::sqrt(fan_in) : std::sqrt(6.0 / fan_in);
  params[prefix + ".w"] = rng.uniform_tensor({c_out, c_in, kernel, kernel}, bound);
  params[prefix + ".b"] = Tensor32({c_out});
}

void add_conv_transpose_params(ModelParameters& params, InitRng& rng, const std::string& prefix,
                               std::size_t c_in, std::size_t c_out, std::size_t kernel, std::size_t stride,
                               bool head) {
  // Each output pixel of a strided transposed conv sees c_in * (k / s)^2 taps.
  const double fan_in = static_cast<double>(c_in * kernel * kernel) / static_cast<double>(stride * stride);
  const double bound = head ? 1.0 / std::sqrt(fan_in) : std::sqrt(6.0 / fan_in);
  params[prefix + ".w"] = rng.uniform_tensor({c_in, c_out, kernel, kernel}, bound);
  params[prefix + ".b"] = Tensor32({c_out});
}

ModelParameters build_base(const BaseNetConfig& config, std::uint64_t seed) {
  config.validate();
  const auto& ch = config.encoder_channels;
  const std::size_t depth = config.depth();
  InitRng rng(seed);
  ModelParameters params;
  for (std::size_t i = 1; i <= depth; ++i) {
    const std::size_t c_in = i == 1 ? 4 : ch[i - 2];
    add_conv_params(params, rng, "base.enc." + std::to_string(i), ch[i - 1], c_in, kKernel);
  }
  for (std::size_t i = 1; i <= depth; ++i) {
    // Level i reads E_{depth+1-i} (plus D_{i-1} when i > 1) and emits the
    // width of E_{depth-i}, or RGB at the last level.
    const std::size_t skip = ch[depth - i];
    const std::size_t c_in = i == 1 ? skip : 2 * skip;
    const bool last = i == depth;
    const std::size_t c_out = last ? 3 : ch[depth - i - 1];
    add_conv_transpose_params(params, rng, "base.dec." + std::to_string(i), c_in, c_out, kKernel, kStride, last);
  }
  return params;
}

template <typename T>
CoarseResult<T> forward_coarse(const Var<T>& composite, const Var<T>& mask, const BoundParams<T>& params,
                               const BaseNetConfig& config) {
  const auto& img = composite.value();
  const auto& m = mask.value();
  require_chw(img, "forward_coarse");
  require_chw(m, "forward_coarse");
  const std::size_t res = config.resolution;
  if (img.channels() != 3 || img.height() != res || img.width() != res) {
    throw InvalidArgument("forward_coarse: composite " + shape_to_string(img.shape()) +
                          " does not match 3x" + std::to_string(res) + "x" + std::to_string(res));
  }
  if (m.channels() != 1 || m.height() != res || m.width() != res) {
    throw InvalidArgument("forward_coarse: mask " + shape_to_string(m.shape()) + " does not match 1x" +
                          std::to_string(res) + "x" + std::to_string(res));
  }
  const std::size_t depth = config.depth();

  CoarseResult<T> out;
  Var<T> x = ops::concat<T>({composite, mask});
  for (std::size_t i = 1; i <= depth; ++i) {
    const std::string p = "base.enc." + std::to_string(i);
    x = ops::conv2d(x, param(params, p + ".w"), param(params, p + ".b"), kStride, kPadding);
    x = ops::leaky_relu(x, static_cast<T>(kEncoderSlope));
    out.encoder_features.push_back(x);
  }
  Var<T> d = out.encoder_features.back();
  for (std::size_t i = 1; i <= depth; ++i) {
    const std::string p = "base.dec." + std::to_string(i);
    if (i > 1) d = ops::concat<T>({d, out.encoder_features[depth - i]});
    d = ops::conv_transpose2d(d, param(params, p + ".w"), param(params, p + ".b"), kStride, kPadding);
    d = i == depth ? ops::bounded_sigmoid(d) : ops::relu(d);
  }
  out.image = d;
  return out;
}

template CoarseResult<float> forward_coarse(const Var<float>&, const Var<float>&, const BoundParams<float>&,
                                            const BaseNetConfig&);
template CoarseResult<double> forward_coarse(const Var<double>&, const Var<double>&, const BoundParams<double>&,
                                             const BaseNetConfig&);

}  // namespace frih
