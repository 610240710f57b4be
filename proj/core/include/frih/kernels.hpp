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

#include "frih/tensor.hpp"

// Graph-free compute kernels over C x H x W tensors. The autodiff ops in
// ops.hpp and the image resizing in the data pipeline both route here.
namespace frih::kernels {

struct ConvGeometry {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// floor((in + 2p - k) / s) + 1; throws if the kernel does not fit.
std::size_t conv_output_extent(std::size_t in, const ConvGeometry& g);
// (in - 1) * s - 2p + k; throws if non-positive.
std::size_t conv_transpose_output_extent(std::size_t in, const ConvGeometry& g);

// Cross-correlation. weight is C_out x C_in x k x k, bias has C_out entries.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding);

// Accumulates (+=) into the non-null gradient outputs.
template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                     std::size_t stride, std::size_t padding, Tensor<T>* grad_input,
                     Tensor<T>* grad_weight, Tensor<T>* grad_bias);

// Adjoint of conv2d in its input. weight is C_in x C_out x k x k, so the same
// weight tensor serves both a conv2d and its transpose.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                           std::size_t stride, std::size_t padding);

template <typename T>
void conv_transpose2d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                               const Tensor<T>& grad_out, std::size_t stride, std::size_t padding,
                               Tensor<T>* grad_input, Tensor<T>* grad_weight,
                               Tensor<T>* grad_bias);

// Bilinear resampling with half-pixel centers; source coordinates are
// clamped to the valid range, so shrinking works too (without antialiasing).
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& input, std::size_t out_h, std::size_t out_w);

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& grad_out, std::size_t in_h, std::size_t in_w);

// Nearest-neighbour resampling with half-pixel centers.
template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& input, std::size_t out_h, std::size_t out_w);

}  // namespace frih::kernels
