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

#include "frih/base_network.hpp"
#include "frih/submask.hpp"

namespace frih {

// Stage two: the slim cascaded encoder-decoder run once per submask, with a
// fusion head over all of its decoder levels.
//
// Decoder level i (1..depth) fuses three sources at one spatial size:
//   ET_i = two 3x3 convs over base encoder features E_{depth+1-i}
//   F_i  = 1x1 conv over [DC_{i-1}, ET_i, EC_{depth+1-i}],  DC_0 = EC_depth
//   DC_i = 4x4 stride-2 transposed conv of F_i
struct CascadeConfig {
  std::vector<std::size_t> encoder_channels{16, 32, 64, 96, 96, 96, 96};
  std::size_t fusion_channels = 32;
  // false predicts from DC_depth alone (the cascade-without-fusion ablation).
  bool fusion = true;

  std::size_t depth() const noexcept { return encoder_channels.size(); }
  // Channel count of DC_i, i in 1..depth.
  std::size_t decoder_channels(std::size_t level) const;
  // Channels entering the prediction head.
  std::size_t fusion_input_channels() const;
  void validate(const BaseNetConfig& base) const;
};

struct ModelConfig {
  BaseNetConfig base;
  CascadeConfig cascade;

  void validate() const {
    base.validate();
    cascade.validate(base);
  }
};

// casc.enc.i, casc.trans.i.{a,b}, casc.fuse.i, casc.up.i and fusion.{a,b,out}.
ModelParameters build_cascade(const CascadeConfig& cascade, const BaseNetConfig& base, std::uint64_t seed);

// Base and cascade parameters; the cascade draws from seed + 1.
ModelParameters build_model(const ModelConfig& config, std::uint64_t seed);

// Recovers the architecture from parameter shapes (resolution is not stored
// in parameters and is taken from the argument).
ModelConfig infer_model_config(const ModelParameters& params, std::size_t resolution);

// DC_1..DC_depth for one submask. coarse_image: 3 x H x W, submask: 1 x H x W,
// base_features: E_1..E_depth from forward_coarse.
template <typename T>
std::vector<Var<T>> forward_cascade(const Var<T>& coarse_image, const Var<T>& submask,
                                    const std::vector<Var<T>>& base_features, const BoundParams<T>& params,
                                    const CascadeConfig& config);

// Upsamples every DC_i to full resolution, concatenates in order and maps the
// stack to RGB in (0, 1) with two 3x3 convs and one 1x1 conv.
template <typename T>
Var<T> fusion_predict(const std::vector<Var<T>>& decoder_features, const BoundParams<T>& params,
                      const CascadeConfig& config, std::size_t resolution);

// sum_i refined_i * Subm^i + (1 - M_f) * composite. Outside the foreground the
// result is the composite bit for bit.
template <typename T>
Var<T> combine_outputs(const std::vector<Var<T>>& refined, const std::vector<Tensor<T>>& submasks,
                       const Tensor<T>& composite, const Tensor<T>& mask);

// Graph of one full forward pass of the two-stage model.
template <typename T>
struct HarmonizePass {
  CoarseResult<T> coarse;
  std::vector<Var<T>> refined;  // one per submask
  Var<T> output;
};

template <typename T>
HarmonizePass<T> forward_two_stage(const Var<T>& composite, const Var<T>& mask, const SubmaskSet& submasks,
                                   const BoundParams<T>& params, const ModelConfig& config);

struct HarmonizeResult {
  Tensor32 image;
  Tensor32 coarse;
  SubmaskSet submasks;
};

// Inference: forward_coarse, extract_submasks on the composite, one cascade
// pass per submask with the shared cascade weights, then combine.
HarmonizeResult harmonize(const Tensor32& composite, const Tensor32& mask, const ModelParameters& params,
                          const ModelConfig& config, double d_c = kDefaultCutoff);

}  // namespace frih
