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
#include <vector>

#include "frih/graph.hpp"

// Differentiable ops over C x H x W graph values.
namespace frih::ops {

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, std::size_t stride,
              std::size_t padding);

template <typename T>
Var<T> conv_transpose2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias,
                        std::size_t stride, std::size_t padding);

// Channel concatenation in argument order.
template <typename T>
Var<T> concat(const std::vector<Var<T>>& inputs);

// Bilinear upsampling (half-pixel centers) to a target no smaller than the input.
template <typename T>
Var<T> upsample(const Var<T>& input, std::size_t out_h, std::size_t out_w);

template <typename T>
Var<T> leaky_relu(const Var<T>& input, T slope);

template <typename T>
Var<T> relu(const Var<T>& input);

// Logistic map kept strictly inside (0, 1) even where it saturates in T.
template <typename T>
Var<T> bounded_sigmoid(const Var<T>& input);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

// Elementwise product of two same-shaped values.
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> scale(const Var<T>& input, T factor);

template <typename T>
Var<T> sum(const Var<T>& input);

// Multiplies every channel by a constant 1 x H x W (or H x W) map.
template <typename T>
Var<T> mask_mul(const Var<T>& input, const Tensor<T>& mask);

// factor * sum_{c,h,w} weight[h,w] * (pred - target)^2, accumulated in double.
template <typename T>
Var<T> weighted_squared_error(const Var<T>& pred, const Tensor<T>& target, const Tensor<T>& weight,
                              double factor);

}  // namespace frih::ops
