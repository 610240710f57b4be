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

#include "frih/kernels.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

namespace frih {

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace frih

namespace frih::kernels {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

// Unfolds output columns [p0, p1) of a C x H x W image into a
// (C*k*k) x (p1 - p0) row-major block. Columns index output pixels.
template <typename T>
void im2col(const T* src, std::size_t channels, std::size_t h, std::size_t w, const ConvGeometry& g,
            std::size_t out_w, std::size_t p0, std::size_t p1, T* col) {
  const auto k = g.kernel;
  const auto s = static_cast<std::ptrdiff_t>(g.stride);
  const auto p = static_cast<std::ptrdiff_t>(g.padding);
  const auto ih_max = static_cast<std::ptrdiff_t>(h);
  const auto iw_max = static_cast<std::ptrdiff_t>(w);
  const std::size_t n = p1 - p0;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = src + c * h * w;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        T* row = col + ((c * k + ki) * k + kj) * n;
        std::size_t q = p0;
        while (q < p1) {
          const std::size_t oh = q / out_w;
          const std::size_t ow0 = q % out_w;
          const std::size_t ow1 = std::min(out_w, ow0 + (p1 - q));
          T* dst = row + (q - p0);
          const auto ih = static_cast<std::ptrdiff_t>(oh) * s - p + static_cast<std::ptrdiff_t>(ki);
          if (ih < 0 || ih >= ih_max) {
            std::fill(dst, dst + (ow1 - ow0), T(0));
          } else {
            const T* line = plane + ih * iw_max;
            for (std::size_t ow = ow0; ow < ow1; ++ow) {
              const auto iw = static_cast<std::ptrdiff_t>(ow) * s - p + static_cast<std::ptrdiff_t>(kj);
              dst[ow - ow0] = (iw < 0 || iw >= iw_max) ? T(0) : line[iw];
            }
          }
          q += ow1 - ow0;
        }
      }
    }
  }
}

// Adjoint of im2col: adds the column block back into the image.
template <typename T>
void col2im(const T* col, std::size_t channels, std::size_t h, std::size_t w, const ConvGeometry& g,
            std::size_t out_w, std::size_t p0, std::size_t p1, T* dst) {
  const auto k = g.kernel;
  const auto s = static_cast<std::ptrdiff_t>(g.stride);
  const auto p = static_cast<std::ptrdiff_t>(g.padding);
  const auto ih_max = static_cast<std::ptrdiff_t>(h);
  const auto iw_max = static_cast<std::ptrdiff_t>(w);
  const std::size_t n = p1 - p0;
  for (std::size_t c = 0; c < channels; ++c) {
    T* plane = dst + c * h * w;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const T* row = col + ((c * k + ki) * k + kj) * n;
        std::size_t q = p0;
        while (q < p1) {
          const std::size_t oh = q / out_w;
          const std::size_t ow0 = q % out_w;
          const std::size_t ow1 = std::min(out_w, ow0 + (p1 - q));
          const auto ih = static_cast<std::ptrdiff_t>(oh) * s - p + static_cast<std::ptrdiff_t>(ki);
          if (ih >= 0 && ih < ih_max) {
            const T* srcrow = row + (q - p0);
            T* line = plane + ih * iw_max;
            for (std::size_t ow = ow0; ow < ow1; ++ow) {
              const auto iw = static_cast<std::ptrdiff_t>(ow) * s - p + static_cast<std::ptrdiff_t>(kj);
              if (iw >= 0 && iw < iw_max) line[iw] += srcrow[ow - ow0];
            }
          }
          q += ow1 - ow0;
        }
      }
    }
  }
}

// Output columns per tile so that one unfolded tile stays around 512 KiB.
template <typename T>
std::size_t tile_columns(std::size_t rows, std::size_t cols) {
  constexpr std::size_t kTileBytes = 512 * 1024;
  const std::size_t t = std::max<std::size_t>(64, kTileBytes / (sizeof(T) * std::max<std::size_t>(rows, 1)));
  return std::min(t, cols);
}

template <typename T>
using StridedMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1 && g.padding == 0; }

void check_weight(const Shape& w, const char* what) {
  if (w.size() != 4 || w[2] != w[3]) {
    throw InvalidArgument(std::string(what) + ": weight must be rank 4 with a square kernel, got " +
                          shape_to_string(w));
  }
}

template <typename T>
void check_bias(const Tensor<T>& bias, std::size_t channels, const char* what) {
  if (bias.numel() != channels) {
    throw InvalidArgument(std::string(what) + ": bias has " + std::to_string(bias.numel()) +
                          " entries, expected " + std::to_string(channels));
  }
}

template <typename T>
void add_bias(Tensor<T>& out, const Tensor<T>& bias) {
  const std::size_t plane = out.height() * out.width();
  T* d = out.data().data();
  for (std::size_t c = 0; c < out.channels(); ++c) {
    const T b = bias[c];
    for (std::size_t i = 0; i < plane; ++i) d[c * plane + i] += b;
  }
}

template <typename T>
void accumulate_bias_grad(const Tensor<T>& grad_out, Tensor<T>& grad_bias) {
  const std::size_t plane = grad_out.height() * grad_out.width();
  const T* d = grad_out.data().data();
  for (std::size_t c = 0; c < grad_out.channels(); ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += d[c * plane + i];
    grad_bias[c] += static_cast<T>(acc);
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t in, const ConvGeometry& g) {
  if (g.stride < 1) throw InvalidArgument("conv2d: stride must be >= 1");
  if (g.kernel > in + 2 * g.padding) {
    throw InvalidArgument("conv2d: kernel " + std::to_string(g.kernel) + " exceeds padded extent " +
                          std::to_string(in + 2 * g.padding));
  }
  return (in + 2 * g.padding - g.kernel) / g.stride + 1;
}

std::size_t conv_transpose_output_extent(std::size_t in, const ConvGeometry& g) {
  if (g.stride < 1) throw InvalidArgument("conv_transpose2d: stride must be >= 1");
  const auto grown = (in - 1) * g.stride + g.kernel;
  if (grown <= 2 * g.padding) throw InvalidArgument("conv_transpose2d: padding leaves an empty output");
  return grown - 2 * g.padding;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding) {
  require_chw(input, "conv2d");
  check_weight(weight.shape(), "conv2d");
  const std::size_t c_in = input.channels();
  const std::size_t c_out = weight.dim(0);
  if (weight.dim(1) != c_in) {
    throw InvalidArgument("conv2d: input has " + std::to_string(c_in) + " channels but weight " +
                          shape_to_string(weight.shape()) + " expects " + std::to_string(weight.dim(1)));
  }
  check_bias(bias, c_out, "conv2d");
  const ConvGeometry g{weight.dim(2), stride, padding};
  const std::size_t oh = conv_output_extent(input.height(), g);
  const std::size_t ow = conv_output_extent(input.width(), g);
  const std::size_t rows = c_in * g.kernel * g.kernel;
  const std::size_t cols = oh * ow;
  const auto r = static_cast<Eigen::Index>(rows);
  const auto co = static_cast<Eigen::Index>(c_out);
  const auto n = static_cast<Eigen::Index>(cols);

  Tensor<T> out({c_out, oh, ow});
  ConstMatMap<T> w(weight.data().data(), co, r);
  if (is_pointwise(g)) {
    ConstMatMap<T> x(input.data().data(), r, n);
    MatMap<T> y(out.data().data(), co, n);
    y.noalias() = w * x;
  } else {
    const std::size_t tile = tile_columns<T>(rows, cols);
    std::vector<T> col(rows * tile);
    for (std::size_t p0 = 0; p0 < cols; p0 += tile) {
      const std::size_t p1 = std::min(cols, p0 + tile);
      const auto m = static_cast<Eigen::Index>(p1 - p0);
      im2col(input.data().data(), c_in, input.height(), input.width(), g, ow, p0, p1, col.data());
      ConstMatMap<T> x(col.data(), r, m);
      StridedMap<T> y(out.data().data() + p0, co, m, Eigen::OuterStride<>(n));
      y.noalias() = w * x;
    }
  }
  add_bias(out, bias);
  return out;
}

template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                     std::size_t stride, std::size_t padding, Tensor<T>* grad_input,
                     Tensor<T>* grad_weight, Tensor<T>* grad_bias) {
  const std::size_t c_in = input.channels();
  const std::size_t c_out = weight.dim(0);
  const ConvGeometry g{weight.dim(2), stride, padding};
  const std::size_t ow = grad_out.width();
  const std::size_t rows = c_in * g.kernel * g.kernel;
  const std::size_t cols = grad_out.height() * ow;
  const auto r = static_cast<Eigen::Index>(rows);
  const auto n = static_cast<Eigen::Index>(cols);
  const auto co = static_cast<Eigen::Index>(c_out);

  ConstMatMap<T> w(weight.data().data(), co, r);
  if (grad_bias) accumulate_bias_grad(grad_out, *grad_bias);

  if (is_pointwise(g)) {
    ConstMatMap<T> dy(grad_out.data().data(), co, n);
    if (grad_weight) {
      ConstMatMap<T> x(input.data().data(), r, n);
      MatMap<T> dw(grad_weight->data().data(), co, r);
      dw.noalias() += dy * x.transpose();
    }
    if (grad_input) {
      MatMap<T> dx(grad_input->data().data(), r, n);
      dx.noalias() += w.transpose() * dy;
    }
    return;
  }
  if (!grad_weight && !grad_input) return;
  const std::size_t tile = tile_columns<T>(rows, cols);
  std::vector<T> col(rows * tile);
  for (std::size_t p0 = 0; p0 < cols; p0 += tile) {
    const std::size_t p1 = std::min(cols, p0 + tile);
    const auto m = static_cast<Eigen::Index>(p1 - p0);
    ConstStridedMap<T> dy(grad_out.data().data() + p0, co, m, Eigen::OuterStride<>(n));
    MatMap<T> c(col.data(), r, m);
    if (grad_weight) {
      im2col(input.data().data(), c_in, input.height(), input.width(), g, ow, p0, p1, col.data());
      MatMap<T> dw(grad_weight->data().data(), co, r);
      dw.noalias() += dy * c.transpose();
    }
    if (grad_input) {
      c.noalias() = w.transpose() * dy;
      col2im(col.data(), c_in, input.height(), input.width(), g, ow, p0, p1, grad_input->data().data());
    }
  }
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                           std::size_t stride, std::size_t padding) {
  require_chw(input, "conv_transpose2d");
  check_weight(weight.shape(), "conv_transpose2d");
  const std::size_t c_in = input.channels();
  if (weight.dim(0) != c_in) {
    throw InvalidArgument("conv_transpose2d: input has " + std::to_string(c_in) +
                          " channels but weight " + shape_to_string(weight.shape()) + " expects " +
                          std::to_string(weight.dim(0)));
  }
  const std::size_t c_out = weight.dim(1);
  check_bias(bias, c_out, "conv_transpose2d");
  const ConvGeometry g{weight.dim(2), stride, padding};
  const std::size_t oh = conv_transpose_output_extent(input.height(), g);
  const std::size_t ow = conv_transpose_output_extent(input.width(), g);
  // The forward pass of a transposed conv is the input-gradient pass of a
  // conv2d from (oh, ow) down to the input grid.
  if (conv_output_extent(oh, g) != input.height() || conv_output_extent(ow, g) != input.width()) {
    throw InvalidArgument("conv_transpose2d: inconsistent geometry");
  }
  const std::size_t rows = c_out * g.kernel * g.kernel;
  const std::size_t cols = input.height() * input.width();
  const auto r = static_cast<Eigen::Index>(rows);
  const auto n = static_cast<Eigen::Index>(cols);
  const auto ci = static_cast<Eigen::Index>(c_in);

  ConstMatMap<T> w(weight.data().data(), ci, r);
  Tensor<T> out({c_out, oh, ow});
  if (is_pointwise(g)) {
    ConstMatMap<T> x(input.data().data(), ci, n);
    MatMap<T> y(out.data().data(), r, n);
    y.noalias() = w.transpose() * x;
  } else {
    const std::size_t tile = tile_columns<T>(rows, cols);
    std::vector<T> col(rows * tile);
    for (std::size_t p0 = 0; p0 < cols; p0 += tile) {
      const std::size_t p1 = std::min(cols, p0 + tile);
      const auto m = static_cast<Eigen::Index>(p1 - p0);
      ConstStridedMap<T> x(input.data().data() + p0, ci, m, Eigen::OuterStride<>(n));
      MatMap<T> c(col.data(), r, m);
      c.noalias() = w.transpose() * x;
      col2im(col.data(), c_out, oh, ow, g, input.width(), p0, p1, out.data().data());
    }
  }
  add_bias(out, bias);
  return out;
}

template <typename T>
void conv_transpose2d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                               const Tensor<T>& grad_out, std::size_t stride, std::size_t padding,
                               Tensor<T>* grad_input, Tensor<T>* grad_weight,
                               Tensor<T>* grad_bias) {
  const std::size_t c_in = input.channels();
  const std::size_t c_out = weight.dim(1);
  const ConvGeometry g{weight.dim(2), stride, padding};
  const std::size_t rows = c_out * g.kernel * g.kernel;
  const std::size_t cols = input.height() * input.width();
  const auto r = static_cast<Eigen::Index>(rows);
  const auto n = static_cast<Eigen::Index>(cols);
  const auto ci = static_cast<Eigen::Index>(c_in);

  if (grad_bias) accumulate_bias_grad(grad_out, *grad_bias);
  ConstMatMap<T> w(weight.data().data(), ci, r);

  if (is_pointwise(g)) {
    ConstMatMap<T> dcol(grad_out.data().data(), r, n);
    if (grad_weight) {
      ConstMatMap<T> x(input.data().data(), ci, n);
      MatMap<T> dw(grad_weight->data().data(), ci, r);
      dw.noalias() += x * dcol.transpose();
    }
    if (grad_input) {
      MatMap<T> dx(grad_input->data().data(), ci, n);
      dx.noalias() += w * dcol;
    }
    return;
  }
  if (!grad_weight && !grad_input) return;
  const std::size_t tile = tile_columns<T>(rows, cols);
  std::vector<T> col(rows * tile);
  for (std::size_t p0 = 0; p0 < cols; p0 += tile) {
    const std::size_t p1 = std::min(cols, p0 + tile);
    const auto m = static_cast<Eigen::Index>(p1 - p0);
    im2col(grad_out.data().data(), c_out, grad_out.height(), grad_out.width(), g, input.width(), p0, p1,
           col.data());
    ConstMatMap<T> dcol(col.data(), r, m);
    if (grad_weight) {
      ConstStridedMap<T> x(input.data().data() + p0, ci, m, Eigen::OuterStride<>(n));
      MatMap<T> dw(grad_weight->data().data(), ci, r);
      dw.noalias() += x * dcol.transpose();
    }
    if (grad_input) {
      StridedMap<T> dx(grad_input->data().data() + p0, ci, m, Eigen::OuterStride<>(n));
      dx.noalias() += w * dcol;
    }
  }
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;  // weight of hi
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    auto lo = static_cast<std::size_t>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[o] = {lo, hi, hi == lo ? 0.0 : src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& input, std::size_t out_h, std::size_t out_w) {
  require_chw(input, "resize_bilinear");
  if (out_h < 1 || out_w < 1) throw InvalidArgument("resize_bilinear: empty target");
  const std::size_t c = input.channels();
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  if (out_h == h && out_w == w) return input;
  const auto ty = bilinear_taps(h, out_h);
  const auto tx = bilinear_taps(w, out_w);
  Tensor<T> out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < out_h; ++y) {
      const auto& a = ty[y];
      for (std::size_t x = 0; x < out_w; ++x) {
        const auto& b = tx[x];
        const double top = (1.0 - b.frac) * input.at(ch, a.lo, b.lo) + b.frac * input.at(ch, a.lo, b.hi);
        const double bot = (1.0 - b.frac) * input.at(ch, a.hi, b.lo) + b.frac * input.at(ch, a.hi, b.hi);
        out.at(ch, y, x) = static_cast<T>((1.0 - a.frac) * top + a.frac * bot);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& grad_out, std::size_t in_h, std::size_t in_w) {
  const std::size_t c = grad_out.channels();
  const std::size_t out_h = grad_out.height();
  const std::size_t out_w = grad_out.width();
  if (out_h == in_h && out_w == in_w) return grad_out;
  const auto ty = bilinear_taps(in_h, out_h);
  const auto tx = bilinear_taps(in_w, out_w);
  Tensor<T> grad({c, in_h, in_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < out_h; ++y) {
      const auto& a = ty[y];
      for (std::size_t x = 0; x < out_w; ++x) {
        const auto& b = tx[x];
        const double g = grad_out.at(ch, y, x);
        grad.at(ch, a.lo, b.lo) += static_cast<T>(g * (1.0 - a.frac) * (1.0 - b.frac));
        grad.at(ch, a.lo, b.hi) += static_cast<T>(g * (1.0 - a.frac) * b.frac);
        grad.at(ch, a.hi, b.lo) += static_cast<T>(g * a.frac * (1.0 - b.frac));
        grad.at(ch, a.hi, b.hi) += static_cast<T>(g * a.frac * b.frac);
      }
    }
  }
  return grad;
}

template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& input, std::size_t out_h, std::size_t out_w) {
  require_chw(input, "resize_nearest");
  if (out_h < 1 || out_w < 1) throw InvalidArgument("resize_nearest: empty target");
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  auto src_index = [](std::size_t o, std::size_t in, std::size_t out) {
    const auto s = static_cast<std::size_t>(std::floor((static_cast<double>(o) + 0.5) *
                                                       static_cast<double>(in) / static_cast<double>(out)));
    return std::min(s, in - 1);
  };
  Tensor<T> out({input.channels(), out_h, out_w});
  for (std::size_t ch = 0; ch < input.channels(); ++ch) {
    for (std::size_t y = 0; y < out_h; ++y) {
      const std::size_t sy = src_index(y, h, out_h);
      for (std::size_t x = 0; x < out_w; ++x) out.at(ch, y, x) = input.at(ch, sy, src_index(x, w, out_w));
    }
  }
  return out;
}

#define FRIH_INSTANTIATE_KERNELS(T)                                                               \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,    \
                            std::size_t);                                                         \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, \
                                std::size_t, Tensor<T>*, Tensor<T>*, Tensor<T>*);                 \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                      std::size_t, std::size_t);                                  \
  template void conv_transpose2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                          std::size_t, std::size_t, Tensor<T>*, Tensor<T>*,       \
                                          Tensor<T>*);                                            \
  template Tensor<T> resize_bilinear(const Tensor<T>&, std::size_t, std::size_t);                 \
  template Tensor<T> resize_bilinear_backward(const Tensor<T>&, std::size_t, std::size_t);        \
  template Tensor<T> resize_nearest(const Tensor<T>&, std::size_t, std::size_t);

FRIH_INSTANTIATE_KERNELS(float)
FRIH_INSTANTIATE_KERNELS(double)

#undef FRIH_INSTANTIATE_KERNELS

}  // namespace frih::kernels
