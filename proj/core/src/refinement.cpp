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

#include "frih/refinement.hpp"

#include <string>

#include "frih/ops.hpp"

namespace frih {
namespace {

constexpr std::size_t kTransferKernel = 3;

std::string level(const char* prefix, std::size_t i) { return std::string(prefix) + "." + std::to_string(i); }

std::size_t dim_or_throw(const ModelParameters& params, const std::string& name, std::size_t axis) {
  auto it = params.find(name);
  if (it == params.end()) throw InvalidArgument("checkpoint is missing parameter '" + name + "'");
  return it->second.dim(axis);
}

}  // namespace

std::size_t CascadeConfig::decoder_channels(std::size_t lvl) const {
  const std::size_t d = depth();
  if (lvl < 1 || lvl > d) throw InvalidArgument("cascade: decoder level out of range");
  return lvl == d ? encoder_channels.front() : encoder_channels[d - lvl - 1];
}

std::size_t CascadeConfig::fusion_input_channels() const {
  if (!fusion) return decoder_channels(depth());
  std::size_t total = 0;
  for (std::size_t i = 1; i <= depth(); ++i) total += decoder_channels(i);
  return total;
}

void CascadeConfig::validate(const BaseNetConfig& base) const {
  if (encoder_channels.size() != base.depth()) {
    throw InvalidArgument("cascade: encoder_channels has " + std::to_string(encoder_channels.size()) +
                          " entries but the base network has depth " + std::to_string(base.depth()));
  }
  for (auto c : encoder_channels) {
    if (c == 0) throw InvalidArgument("cascade: encoder channel widths must be >= 1");
  }
  if (fusion_channels == 0) throw InvalidArgument("cascade: fusion_channels must be >= 1");
}

ModelParameters build_cascade(const CascadeConfig& cascade, const BaseNetConfig& base, std::uint64_t seed) {
  base.validate();
  cascade.validate(base);
  const auto& cc = cascade.encoder_channels;
  const auto& bc = base.encoder_channels;
  const std::size_t d = cascade.depth();
  InitRng rng(seed);
  ModelParameters params;
  for (std::size_t i = 1; i <= d; ++i) {
    add_conv_params(params, rng, level("casc.enc", i), cc[i - 1], i == 1 ? 4 : cc[i - 2], kKernel);
  }
  for (std::size_t i = 1; i <= d; ++i) {
    const std::size_t width = cc[d - i];
    add_conv_params(params, rng, level("casc.trans", i) + ".a", width, bc[d - i], kTransferKernel);
    add_conv_params(params, rng, level("casc.trans", i) + ".b", width, width, kTransferKernel);
    const std::size_t prev = i == 1 ? cc[d - 1] : cascade.decoder_channels(i - 1);
    add_conv_params(params, rng, level("casc.fuse", i), width, prev + 2 * width, 1);
    add_conv_transpose_params(params, rng, level("casc.up", i), width, cascade.decoder_channels(i), kKernel,
                              kStride);
  }
  const std::size_t fc = cascade.fusion_channels;
  add_conv_params(params, rng, "fusion.a", fc, cascade.fusion_input_channels(), kTransferKernel);
  add_conv_params(params, rng, "fusion.b", fc, fc, kTransferKernel);
  add_conv_params(params, rng, "fusion.out", 3, fc, 1, true);
  return params;
}

ModelParameters build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  auto params = build_base(config.base, seed);
  params.merge(build_cascade(config.cascade, config.base, seed + 1));
  return params;
}

ModelConfig infer_model_config(const ModelParameters& params, std::size_t resolution) {
  ModelConfig config;
  config.base.resolution = resolution;
  config.base.encoder_channels.clear();
  config.cascade.encoder_channels.clear();
  for (std::size_t i = 1; params.count(level("base.enc", i) + ".w"); ++i) {
    config.base.encoder_channels.push_back(params.at(level("base.enc", i) + ".w").dim(0));
  }
  for (std::size_t i = 1; params.count(level("casc.enc", i) + ".w"); ++i) {
    config.cascade.encoder_channels.push_back(params.at(level("casc.enc", i) + ".w").dim(0));
  }
  config.cascade.fusion_channels = dim_or_throw(params, "fusion.a.w", 0);
  const std::size_t head_in = dim_or_throw(params, "fusion.a.w", 1);
  config.cascade.fusion = true;
  if (!config.cascade.encoder_channels.empty() && head_in != config.cascade.fusion_input_channels()) {
    config.cascade.fusion = false;
  }
  config.validate();
  if (head_in != config.cascade.fusion_input_channels()) {
    throw InvalidArgument("checkpoint fusion head width does not match the cascade layout");
  }
  return config;
}

template <typename T>
std::vector<Var<T>> forward_cascade(const Var<T>& coarse_image, const Var<T>& submask,
                                    const std::vector<Var<T>>& base_features, const BoundParams<T>& params,
                                    const CascadeConfig& config) {
  const std::size_t d = config.depth();
  if (base_features.size() != d) {
    throw InvalidArgument("forward_cascade: expected " + std::to_string(d) + " base encoder features, got " +
                          std::to_string(base_features.size()));
  }
  const auto slope = static_cast<T>(kEncoderSlope);
  std::vector<Var<T>> ec;
  Var<T> x = ops::concat<T>({coarse_image, submask});
  for (std::size_t i = 1; i <= d; ++i) {
    const auto p = level("casc.enc", i);
    x = ops::leaky_relu(ops::conv2d(x, param(params, p + ".w"), param(params, p + ".b"), kStride, kPadding), slope);
    ec.push_back(x);
  }

  std::vector<Var<T>> dc;
  Var<T> prev = ec.back();
  for (std::size_t i = 1; i <= d; ++i) {
    const auto& e = base_features[d - i];
    const auto& skip = ec[d - i];
    const auto t = level("casc.trans", i);
    Var<T> et = ops::relu(ops::conv2d(e, param(params, t + ".a.w"), param(params, t + ".a.b"), 1, 1));
    et = ops::relu(ops::conv2d(et, param(params, t + ".b.w"), param(params, t + ".b.b"), 1, 1));

    const auto& ps = prev.shape();
    if (ps.size() != 3 || et.shape()[1] != ps[1] || et.shape()[2] != ps[2] || skip.shape()[1] != ps[1] ||
        skip.shape()[2] != ps[2]) {
      throw InvalidArgument("forward_cascade: fused sources disagree at level " + std::to_string(i) + ": " +
                            shape_to_string(ps) + ", " + shape_to_string(et.shape()) + ", " +
                            shape_to_string(skip.shape()));
    }
    const auto f = level("casc.fuse", i);
    Var<T> fused = ops::relu(ops::conv2d(ops::concat<T>({prev, et, skip}), param(params, f + ".w"),
                                         param(params, f + ".b"), 1, 0));
    const auto u = level("casc.up", i);
    prev = ops::relu(ops::conv_transpose2d(fused, param(params, u + ".w"), param(params, u + ".b"), kStride, kPadding));
    dc.push_back(prev);
  }
  return dc;
}

template <typename T>
Var<T> fusion_predict(const std::vector<Var<T>>& decoder_features, const BoundParams<T>& params,
                      const CascadeConfig& config, std::size_t resolution) {
  if (decoder_features.size() != config.depth()) {
    throw InvalidArgument("fusion_predict: expected " + std::to_string(config.depth()) +
                          " decoder feature maps, got " + std::to_string(decoder_features.size()));
  }
  Var<T> stack;
  if (config.fusion) {
    std::vector<Var<T>> up;
    for (const auto& f : decoder_features) up.push_back(ops::upsample(f, resolution, resolution));
    stack = ops::concat(up);
  } else {
    stack = ops::upsample(decoder_features.back(), resolution, resolution);
  }
  Var<T> y = ops::relu(ops::conv2d(stack, param(params, "fusion.a.w"), param(params, "fusion.a.b"), 1, 1));
  y = ops::relu(ops::conv2d(y, param(params, "fusion.b.w"), param(params, "fusion.b.b"), 1, 1));
  y = ops::conv2d(y, param(params, "fusion.out.w"), param(params, "fusion.out.b"), 1, 0);
  return ops::bounded_sigmoid(y);
}

template <typename T>
Var<T> combine_outputs(const std::vector<Var<T>>& refined, const std::vector<Tensor<T>>& submasks,
                       const Tensor<T>& composite, const Tensor<T>& mask) {
  if (refined.empty() || refined.size() != submasks.size()) {
    throw InvalidArgument("combine_outputs: " + std::to_string(refined.size()) + " refined images for " +
                          std::to_string(submasks.size()) + " submasks");
  }
  require_chw(composite, "combine_outputs");
  const std::size_t plane = composite.height() * composite.width();
  if (mask.numel() != plane) throw InvalidArgument("combine_outputs: mask does not match composite");
  Tensor<T> background = composite;
  for (std::size_t c = 0; c < composite.channels(); ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (mask[i] != T(0)) background[c * plane + i] = T(0);
    }
  }
  auto& g = *refined.front().graph;
  Var<T> out = g.constant(std::move(background));
  for (std::size_t k = 0; k < refined.size(); ++k) {
    if (refined[k].shape() != composite.shape()) {
      throw InvalidArgument("combine_outputs: refined image " + shape_to_string(refined[k].shape()) +
                            " does not match composite " + shape_to_string(composite.shape()));
    }
    out = ops::add(out, ops::mask_mul(refined[k], submasks[k]));
  }
  return out;
}

template <typename T>
HarmonizePass<T> forward_two_stage(const Var<T>& composite, const Var<T>& mask, const SubmaskSet& submasks,
                                   const BoundParams<T>& params, const ModelConfig& config) {
  HarmonizePass<T> pass;
  pass.coarse = forward_coarse(composite, mask, params, config.base);
  auto& g = *composite.graph;
  std::vector<Tensor<T>> masks;
  for (const auto& sm : submasks.submasks) {
    masks.push_back(sm.template cast<T>());
    const Var<T> sub = g.constant(masks.back());
    const auto dc = forward_cascade(pass.coarse.image, sub, pass.coarse.encoder_features, params, config.cascade);
    pass.refined.push_back(fusion_predict(dc, params, config.cascade, config.base.resolution));
  }
  pass.output = combine_outputs(pass.refined, masks, composite.value(), mask.value());
  return pass;
}

HarmonizeResult harmonize(const Tensor32& composite, const Tensor32& mask, const ModelParameters& params,
                          const ModelConfig& config, double d_c) {
  config.validate();
  HarmonizeResult result;
  result.submasks = extract_submasks(composite, mask, d_c);
  Graph<float> g;
  const auto bound = bind_parameters(g, params, false);
  const auto pass = forward_two_stage(g.constant(composite), g.constant(mask), result.submasks, bound, config);
  result.image = pass.output.value();
  result.coarse = pass.coarse.image.value();
  return result;
}

#define FRIH_INSTANTIATE_REFINEMENT(T)                                                                      \
  template std::vector<Var<T>> forward_cascade(const Var<T>&, const Var<T>&, const std::vector<Var<T>>&,   \
                                               const BoundParams<T>&, const CascadeConfig&);                \
  template Var<T> fusion_predict(const std::vector<Var<T>>&, const BoundParams<T>&, const CascadeConfig&,   \
                                 std::size_t);                                                              \
  template Var<T> combine_outputs(const std::vector<Var<T>>&, const std::vector<Tensor<T>>&,               \
                                  const Tensor<T>&, const Tensor<T>&);                                      \
  template HarmonizePass<T> forward_two_stage(const Var<T>&, const Var<T>&, const SubmaskSet&,             \
                                              const BoundParams<T>&, const ModelConfig&);

FRIH_INSTANTIATE_REFINEMENT(float)
FRIH_INSTANTIATE_REFINEMENT(double)

#undef FRIH_INSTANTIATE_REFINEMENT

}  // namespace frih
