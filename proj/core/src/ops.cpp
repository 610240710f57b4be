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

#include "frih/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "frih/kernels.hpp"

namespace frih::ops {
namespace {

template <typename T>
void same_graph(const Var<T>& a, const Var<T>& b, const char* what) {
  if (a.graph != b.graph || a.graph == nullptr) {
    throw InvalidArgument(std::string(what) + ": operands belong to different graphs");
  }
}

template <typename T>
const Tensor<T>& out_grad(Graph<T>& g, std::size_t self) {
  return *g.node(self).grad;
}

// Receives the gradient buffer of input `in`, or nullptr when that input
// does not need one.
template <typename T>
Tensor<T>* grad_slot(Graph<T>& g, std::size_t in) {
  return g.requires_grad(in) ? &g.grad_buffer(in) : nullptr;
}

template <typename T>
void require_mask_plane(const Tensor<T>& mask, std::size_t h, std::size_t w, const char* what) {
  const bool plane = (mask.rank() == 3 && mask.dim(0) == 1 && mask.dim(1) == h && mask.dim(2) == w) ||
                     (mask.rank() == 2 && mask.dim(0) == h && mask.dim(1) == w);
  if (!plane) {
    throw InvalidArgument(std::string(what) + ": mask " + shape_to_string(mask.shape()) +
                          " does not match spatial extent " + std::to_string(h) + "x" + std::to_string(w));
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, std::size_t stride,
              std::size_t padding) {
  same_graph(input, weight, "conv2d");
  same_graph(input, bias, "conv2d");
  auto& g = *input.graph;
  auto out = kernels::conv2d(input.value(), weight.value(), bias.value(), stride, padding);
  const auto x = input.id, w = weight.id, b = bias.id;
  return g.record("conv2d", {x, w, b}, std::move(out), [=](Graph<T>& gr, std::size_t self) {
    kernels::conv2d_backward(gr.value(x), gr.value(w), out_grad(gr, self), stride, padding,
                             grad_slot(gr, x), grad_slot(gr, w), grad_slot(gr, b));
  });
}

template <typename T>
Var<T> conv_transpose2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias,
                        std::size_t stride, std::size_t padding) {
  same_graph(input, weight, "conv_transpose2d");
  same_graph(input, bias, "conv_transpose2d");
  auto& g = *input.graph;
  auto out = kernels::conv_transpose2d(input.value(), weight.value(), bias.value(), stride, padding);
  const auto x = input.id, w = weight.id, b = bias.id;
  return g.record("conv_transpose2d", {x, w, b}, std::move(out), [=](Graph<T>& gr, std::size_t self) {
    kernels::conv_transpose2d_backward(gr.value(x), gr.value(w), out_grad(gr, self), stride, padding,
                                       grad_slot(gr, x), grad_slot(gr, w), grad_slot(gr, b));
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& inputs) {
  if (inputs.empty()) throw InvalidArgument("concat: no inputs");
  auto& g = *inputs.front().graph;
  const auto& first = inputs.front().value();
  require_chw(first, "concat");
  const std::size_t h = first.height();
  const std::size_t w = first.width();
  std::size_t channels = 0;
  std::vector<std::size_t> ids;
  for (const auto& v : inputs) {
    same_graph(inputs.front(), v, "concat");
    const auto& t = v.value();
    require_chw(t, "concat");
    if (t.height() != h || t.width() != w) {
      throw InvalidArgument("concat: spatial mismatch " + shape_to_string(first.shape()) + " vs " +
                            shape_to_string(t.shape()));
    }
    channels += t.channels();
    ids.push_back(v.id);
  }
  Tensor<T> out({channels, h, w});
  std::size_t offset = 0;
  for (const auto& v : inputs) {
    const auto& t = v.value();
    std::copy(t.data().begin(), t.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += t.numel();
  }
  return g.record("concat", ids, std::move(out), [ids](Graph<T>& gr, std::size_t self) {
    const auto& gy = out_grad(gr, self);
    std::size_t off = 0;
    for (auto in : ids) {
      const std::size_t n = gr.value(in).numel();
      if (auto* dst = grad_slot(gr, in)) {
        for (std::size_t i = 0; i < n; ++i) (*dst)[i] += gy[off + i];
      }
      off += n;
    }
  });
}

template <typename T>
Var<T> upsample(const Var<T>& input, std::size_t out_h, std::size_t out_w) {
  const auto& x = input.value();
  require_chw(x, "upsample");
  if (out_h < x.height() || out_w < x.width()) {
    throw InvalidArgument("upsample: target " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                          " is smaller than input " + shape_to_string(x.shape()));
  }
  const std::size_t in_h = x.height();
  const std::size_t in_w = x.width();
  auto out = kernels::resize_bilinear(x, out_h, out_w);
  const auto id = input.id;
  return input.graph->record("upsample", {id}, std::move(out), [=](Graph<T>& gr, std::size_t self) {
    auto gx = kernels::resize_bilinear_backward(out_grad(gr, self), in_h, in_w);
    auto& dst = gr.grad_buffer(id);
    for (std::size_t i = 0; i < gx.numel(); ++i) dst[i] += gx[i];
  });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& input, T slope) {
  Tensor<T> out = input.value();
  for (auto& v : out.data()) v = v > T(0) ? v : v * slope;
  const auto id = input.id;
  return input.graph->record("leaky_relu", {id}, std::move(out), [=](Graph<T>& gr, std::size_t self) {
    const auto& x = gr.value(id);
    const auto& gy = out_grad(gr, self);
    auto& dst = gr.grad_buffer(id);
    for (std::size_t i = 0; i < x.numel(); ++i) dst[i] += x[i] > T(0) ? gy[i] : gy[i] * slope;
  });
}

template <typename T>
Var<T> relu(const Var<T>& input) {
  Tensor<T> out = input.value();
  for (auto& v : out.data()) v = v > T(0) ? v : T(0);
  const auto id = input.id;
  return input.graph->record("relu", {id}, std::move(out), [=](Graph<T>& gr, std::size_t self) {
    const auto& x = gr.value(id);
    const auto& gy = out_grad(gr, self);
    auto& dst = gr.grad_buffer(id);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      if (x[i] > T(0)) dst[i] += gy[i];
    }
  });
}

template <typename T>
Var<T> bounded_sigmoid(const Var<T>& input) {
  constexpr T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  Tensor<T> out = input.value();
  for (auto& v : out.data()) v = std::clamp(T(1) / (T(1) + std::exp(-v)), lo, hi);
  const auto id = input.id;
  return input.graph->record("bounded_sigmoid", {id}, std::move(out), [=](Graph<T>& gr, std::size_t self) {
    const auto& y = gr.value(self);
    const auto& gy = out_grad(gr, self);
    auto& dst = gr.grad_buffer(id);
    for (std::size_t i = 0; i < y.numel(); ++i) dst[i] += gy[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  same_graph(a, b, "add");
  if (a.shape() != b.shape()) {
    throw InvalidArgument("add: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
  const auto ia = a.id, ib = b.id;
  return a.graph->record("add", {ia, ib}, std::move(out), [=](Graph<T>& gr, std::size_t self) {
    const auto& gy = out_grad(gr, self);
    for (auto in : {ia, ib}) {
      if (auto* dst = grad_slot(gr, in)) {
        for (std::size_t i = 0; i < gy.numel(); ++i) (*dst)[i] += gy[i];
      }
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  same_graph(a, b, "mul");
  if (a.shape() != b.shape()) {
    throw InvalidArgument("mul: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
  const auto ia = a.id, ib = b.id;
  return a.graph->record("mul", {ia, ib}, std::move(out), [=](Graph<T>& gr, std::size_t self) {
    const auto& gy = out_grad(gr, self);
    const auto& av = gr.value(ia);
    const auto& bw = gr.value(ib);
    if (auto* da = grad_slot(gr, ia)) {
      for (std::size_t i = 0; i < gy.numel(); ++i) (*da)[i] += gy[i] * bw[i];
    }
    if (auto* db = grad_slot(gr, ib)) {
      for (std::size_t i = 0; i < gy.numel(); ++i) (*db)[i] += gy[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& input, T factor) {
  Tensor<T> out = input.value();
  for (auto& v : out.data()) v *= factor;
  const auto id = input.id;
  return input.graph->record("scale", {id}, std::move(out), [=](Graph<T>& gr, std::size_t self) {
    const auto& gy = out_grad(gr, self);
    auto& dst = gr.grad_buffer(id);
    for (std::size_t i = 0; i < gy.numel(); ++i) dst[i] += gy[i] * factor;
  });
}

template <typename T>
Var<T> sum(const Var<T>& input) {
  double acc = 0.0;
  for (auto v : input.value().data()) acc += v;
  const auto id = input.id;
  return input.graph->record("sum", {id}, Tensor<T>::scalar(static_cast<T>(acc)),
                             [=](Graph<T>& gr, std::size_t self) {
                               const T gy = out_grad(gr, self)[0];
                               auto& dst = gr.grad_buffer(id);
                               for (auto& v : dst.data()) v += gy;
                             });
}

template <typename T>
Var<T> mask_mul(const Var<T>& input, const Tensor<T>& mask) {
  const auto& x = input.value();
  require_chw(x, "mask_mul");
  require_mask_plane(mask, x.height(), x.width(), "mask_mul");
  const std::size_t plane = x.height() * x.width();
  Tensor<T> out = x;
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] *= mask[i];
  }
  const auto id = input.id;
  return input.graph->record("mask_mul", {id}, std::move(out), [=](Graph<T>& gr, std::size_t self) {
    const auto& gy = out_grad(gr, self);
    auto& dst = gr.grad_buffer(id);
    const std::size_t channels = gy.numel() / plane;
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t i = 0; i < plane; ++i) dst[c * plane + i] += gy[c * plane + i] * mask[i];
    }
  });
}

template <typename T>
Var<T> weighted_squared_error(const Var<T>& pred, const Tensor<T>& target, const Tensor<T>& weight,
                              double factor) {
  const auto& p = pred.value();
  require_chw(p, "weighted_squared_error");
  if (p.shape() != target.shape()) {
    throw InvalidArgument("weighted_squared_error: prediction " + shape_to_string(p.shape()) +
                          " vs target " + shape_to_string(target.shape()));
  }
  require_mask_plane(weight, p.height(), p.width(), "weighted_squared_error");
  const std::size_t plane = p.height() * p.width();
  double acc = 0.0;
  for (std::size_t c = 0; c < p.channels(); ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = static_cast<double>(p[c * plane + i]) - static_cast<double>(target[c * plane + i]);
      acc += static_cast<double>(weight[i]) * d * d;
    }
  }
  const auto id = pred.id;
  return pred.graph->record(
      "weighted_squared_error", {id}, Tensor<T>::scalar(static_cast<T>(factor * acc)),
      [=](Graph<T>& gr, std::size_t self) {
        const double gy = out_grad(gr, self)[0];
        const auto& pv = gr.value(id);
        auto& dst = gr.grad_buffer(id);
        const std::size_t channels = pv.numel() / plane;
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t i = 0; i < plane; ++i) {
            const double d = static_cast<double>(pv[c * plane + i]) - static_cast<double>(target[c * plane + i]);
            dst[c * plane + i] += static_cast<T>(2.0 * factor * gy * static_cast<double>(weight[i]) * d);
          }
        }
      });
}

#define FRIH_INSTANTIATE_OPS(T)                                                                   \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, std::size_t, std::size_t);  \
  template Var<T> conv_transpose2d(const Var<T>&, const Var<T>&, const Var<T>&, std::size_t,      \
                                   std::size_t);                                                  \
  template Var<T> concat(const std::vector<Var<T>>&);                                             \
  template Var<T> upsample(const Var<T>&, std::size_t, std::size_t);                              \
  template Var<T> leaky_relu(const Var<T>&, T);                                                   \
  template Var<T> relu(const Var<T>&);                                                            \
  template Var<T> bounded_sigmoid(const Var<T>&);                                                 \
  template Var<T> add(const Var<T>&, const Var<T>&);                                              \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                              \
  template Var<T> scale(const Var<T>&, T);                                                        \
  template Var<T> sum(const Var<T>&);                                                             \
  template Var<T> mask_mul(const Var<T>&, const Tensor<T>&);                                      \
  template Var<T> weighted_squared_error(const Var<T>&, const Tensor<T>&, const Tensor<T>&, double);

FRIH_INSTANTIATE_OPS(float)
FRIH_INSTANTIATE_OPS(double)

#undef FRIH_INSTANTIATE_OPS

}  // namespace frih::ops
