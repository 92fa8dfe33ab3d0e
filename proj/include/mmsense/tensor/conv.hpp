#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmsense/tensor/tensor.hpp"

namespace mmsense::ad {

enum class Padding { same, valid };

/// Output extent and leading zero-pad for one spatial axis.
///
/// Same padding produces ceil(in / stride) outputs; the total pad is split with
/// the smaller half before and the larger half after, so an even kernel at
/// stride 1 pads floor((k-1)/2) before and ceil((k-1)/2) after.
struct AxisGeometry {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::ptrdiff_t pad_before = 0;
};

inline AxisGeometry axis_geometry(std::size_t in, std::size_t kernel, int stride, int dilation, Padding padding) {
  if (stride < 1 || dilation < 1) throw ShapeError("convolution stride and dilation must be >= 1");
  AxisGeometry g;
  g.in = in;
  g.kernel = kernel;
  g.stride = static_cast<std::size_t>(stride);
  g.dilation = static_cast<std::size_t>(dilation);
  const std::size_t span = (kernel - 1) * g.dilation + 1;
  if (padding == Padding::same) {
    g.out = (in + g.stride - 1) / g.stride;
    const std::ptrdiff_t needed = static_cast<std::ptrdiff_t>((g.out - 1) * g.stride + span) -
                                  static_cast<std::ptrdiff_t>(in);
    g.pad_before = std::max<std::ptrdiff_t>(needed, 0) / 2;
  } else {
    if (span > in)
      throw ShapeError("kernel extent " + std::to_string(span) + " exceeds input extent " + std::to_string(in));
    g.out = (in - span) / g.stride + 1;
    g.pad_before = 0;
  }
  return g;
}

struct Conv2dOptions {
  std::array<int, 2> stride{1, 1};
  Padding padding = Padding::same;
  std::array<int, 2> dilation{1, 1};
};

namespace detail {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Geometry of an NHWC x HWIO convolution shared by conv2d and conv1d.
struct ConvPlan {
  std::size_t n = 0, cin = 0, cout = 0;
  AxisGeometry h, w;

  [[nodiscard]] std::size_t patch() const { return h.kernel * w.kernel * cin; }
  [[nodiscard]] std::size_t out_pixels() const { return h.out * w.out; }
  [[nodiscard]] std::size_t in_stride() const { return h.in * w.in * cin; }
  [[nodiscard]] bool pointwise() const {
    return h.kernel == 1 && w.kernel == 1 && h.stride == 1 && w.stride == 1;
  }
  // Samples per im2col chunk, bounding the scratch buffer to ~4M elements.
  [[nodiscard]] std::size_t chunk() const {
    const std::size_t per = std::max<std::size_t>(out_pixels() * patch(), 1);
    return std::clamp<std::size_t>((std::size_t{1} << 22) / per, 1, n);
  }
};

template <class T>
void im2col(const ConvPlan& p, const T* x, T* col) {
  const std::size_t c = p.cin;
  const std::size_t k = p.patch();
  for (std::size_t oy = 0; oy < p.h.out; ++oy) {
    for (std::size_t ox = 0; ox < p.w.out; ++ox) {
      T* row = col + (oy * p.w.out + ox) * k;
      for (std::size_t ky = 0; ky < p.h.kernel; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * p.h.stride + ky * p.h.dilation) - p.h.pad_before;
        for (std::size_t kx = 0; kx < p.w.kernel; ++kx, row += c) {
          const std::ptrdiff_t ix =
              static_cast<std::ptrdiff_t>(ox * p.w.stride + kx * p.w.dilation) - p.w.pad_before;
          if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(p.h.in) ||
              ix >= static_cast<std::ptrdiff_t>(p.w.in)) {
            std::fill_n(row, c, T{0});
          } else {
            std::copy_n(x + (static_cast<std::size_t>(iy) * p.w.in + static_cast<std::size_t>(ix)) * c, c, row);
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const ConvPlan& p, const T* col, T* gx) {
  const std::size_t c = p.cin;
  const std::size_t k = p.patch();
  for (std::size_t oy = 0; oy < p.h.out; ++oy) {
    for (std::size_t ox = 0; ox < p.w.out; ++ox) {
      const T* row = col + (oy * p.w.out + ox) * k;
      for (std::size_t ky = 0; ky < p.h.kernel; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * p.h.stride + ky * p.h.dilation) - p.h.pad_before;
        for (std::size_t kx = 0; kx < p.w.kernel; ++kx, row += c) {
          const std::ptrdiff_t ix =
              static_cast<std::ptrdiff_t>(ox * p.w.stride + kx * p.w.dilation) - p.w.pad_before;
          if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(p.h.in) ||
              ix >= static_cast<std::ptrdiff_t>(p.w.in))
            continue;
          T* dst = gx + (static_cast<std::size_t>(iy) * p.w.in + static_cast<std::size_t>(ix)) * c;
          for (std::size_t i = 0; i < c; ++i) dst[i] += row[i];
        }
      }
    }
  }
}

template <class T>
void conv_forward(const ConvPlan& p, const T* x, const T* w, T* y) {
  using Map = Eigen::Map<RowMat<T>>;
  using CMap = Eigen::Map<const RowMat<T>>;
  const auto k = static_cast<Eigen::Index>(p.patch());
  const auto co = static_cast<Eigen::Index>(p.cout);
  CMap wm(w, k, co);
  if (p.pointwise()) {
    const auto rows = static_cast<Eigen::Index>(p.n * p.out_pixels());
    Map(y, rows, co).noalias() = CMap(x, rows, k) * wm;
    return;
  }
  const std::size_t chunk = p.chunk();
  std::vector<T> col(chunk * p.out_pixels() * p.patch());
  for (std::size_t b0 = 0; b0 < p.n; b0 += chunk) {
    const std::size_t nb = std::min(chunk, p.n - b0);
    for (std::size_t b = 0; b < nb; ++b)
      im2col(p, x + (b0 + b) * p.in_stride(), col.data() + b * p.out_pixels() * p.patch());
    const auto rows = static_cast<Eigen::Index>(nb * p.out_pixels());
    Map(y + b0 * p.out_pixels() * p.cout, rows, co).noalias() = CMap(col.data(), rows, k) * wm;
  }
}

// Accumulates into gx / gw when non-null.
template <class T>
void conv_backward(const ConvPlan& p, const T* x, const T* w, const T* gy, T* gx, T* gw) {
  using Map = Eigen::Map<RowMat<T>>;
  using CMap = Eigen::Map<const RowMat<T>>;
  const auto k = static_cast<Eigen::Index>(p.patch());
  const auto co = static_cast<Eigen::Index>(p.cout);
  CMap wm(w, k, co);
  if (p.pointwise()) {
    const auto rows = static_cast<Eigen::Index>(p.n * p.out_pixels());
    CMap gym(gy, rows, co);
    if (gw) Map(gw, k, co).noalias() += CMap(x, rows, k).transpose() * gym;
    if (gx) Map(gx, rows, k).noalias() += gym * wm.transpose();
    return;
  }
  const std::size_t chunk = p.chunk();
  std::vector<T> col(chunk * p.out_pixels() * p.patch());
  for (std::size_t b0 = 0; b0 < p.n; b0 += chunk) {
    const std::size_t nb = std::min(chunk, p.n - b0);
    const auto rows = static_cast<Eigen::Index>(nb * p.out_pixels());
    CMap gym(gy + b0 * p.out_pixels() * p.cout, rows, co);
    if (gw) {
      for (std::size_t b = 0; b < nb; ++b)
        im2col(p, x + (b0 + b) * p.in_stride(), col.data() + b * p.out_pixels() * p.patch());
      Map(gw, k, co).noalias() += CMap(col.data(), rows, k).transpose() * gym;
    }
    if (gx) {
      Map(col.data(), rows, k).noalias() = gym * wm.transpose();
      for (std::size_t b = 0; b < nb; ++b)
        col2im_add(p, col.data() + b * p.out_pixels() * p.patch(), gx + (b0 + b) * p.in_stride());
    }
  }
}

template <class T>
Tensor<T> run_conv(const ConvPlan& p, const Tensor<T>& x, const Tensor<T>& k, Shape out_shape, std::string_view name) {
  Tensor<T> out(std::move(out_shape));
  conv_forward(p, x.data().data(), k.data().data(), out.data().data());
  check_finite(out, name);
  record<T>(name, {x, k}, out, [p, x, k, out]() mutable {
    conv_backward(p, x.data().data(), k.data().data(), out.grad().data(),
                  x.requires_grad() ? x.grad().data() : nullptr, k.requires_grad() ? k.grad().data() : nullptr);
  });
  return out;
}

}  // namespace detail

/// 2-D convolution, input [N,H,W,Cin], kernel [kh,kw,Cin,Cout] -> [N,H',W',Cout].
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Conv2dOptions& opt = {}) {
  if (x.rank() != 4 || kernel.rank() != 4)
    throw ShapeError("conv2d: expected input NHWC and kernel HWIO, got " + to_string(x.shape()) + ", " +
                     to_string(kernel.shape()));
  if (kernel.dim(2) != x.dim(3))
    throw ShapeError("conv2d: kernel Cin " + std::to_string(kernel.dim(2)) + " != input channels " +
                     std::to_string(x.dim(3)));
  detail::ConvPlan p;
  p.n = x.dim(0);
  p.cin = x.dim(3);
  p.cout = kernel.dim(3);
  p.h = axis_geometry(x.dim(1), kernel.dim(0), opt.stride[0], opt.dilation[0], opt.padding);
  p.w = axis_geometry(x.dim(2), kernel.dim(1), opt.stride[1], opt.dilation[1], opt.padding);
  return detail::run_conv(p, x, kernel, {p.n, p.h.out, p.w.out, p.cout}, "conv2d");
}

/// 1-D convolution, input [N,L,Cin], kernel [k,Cin,Cout] -> [N,L',Cout].
template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& kernel, int stride = 1, Padding padding = Padding::same,
                 int dilation = 1) {
  if (x.rank() != 3 || kernel.rank() != 3)
    throw ShapeError("conv1d: expected input NLC and kernel KIO, got " + to_string(x.shape()) + ", " +
                     to_string(kernel.shape()));
  if (kernel.dim(1) != x.dim(2))
    throw ShapeError("conv1d: kernel Cin " + std::to_string(kernel.dim(1)) + " != input channels " +
                     std::to_string(x.dim(2)));
  detail::ConvPlan p;
  p.n = x.dim(0);
  p.cin = x.dim(2);
  p.cout = kernel.dim(2);
  p.h = axis_geometry(1, 1, 1, 1, Padding::valid);
  p.w = axis_geometry(x.dim(1), kernel.dim(0), stride, dilation, padding);
  return detail::run_conv(p, x, kernel, {p.n, p.w.out, p.cout}, "conv1d");
}

/// Depthwise 2-D convolution with channel multiplier 1, kernel [kh,kw,C].
template <class T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& kernel, std::array<int, 2> stride = {1, 1},
                           Padding padding = Padding::same, std::array<int, 2> dilation = {1, 1}) {
  if (x.rank() != 4 || kernel.rank() != 3)
    throw ShapeError("depthwise_conv2d: expected input NHWC and kernel [kh,kw,C]");
  if (kernel.dim(2) != x.dim(3))
    throw ShapeError("depthwise_conv2d: kernel has " + std::to_string(kernel.dim(2)) + " channels, input has " +
                     std::to_string(x.dim(3)));
  const std::size_t n = x.dim(0), c = x.dim(3);
  const auto gh = axis_geometry(x.dim(1), kernel.dim(0), stride[0], dilation[0], padding);
  const auto gw = axis_geometry(x.dim(2), kernel.dim(1), stride[1], dilation[1], padding);
  Tensor<T> out({n, gh.out, gw.out, c});

  // Visits every (output pixel, tap) pair whose input lies inside the frame.
  auto for_each_tap = [n, c, gh, gw](auto&& fn) {
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t oy = 0; oy < gh.out; ++oy)
        for (std::size_t ox = 0; ox < gw.out; ++ox)
          for (std::size_t ky = 0; ky < gh.kernel; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * gh.stride + ky * gh.dilation) - gh.pad_before;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(gh.in)) continue;
            for (std::size_t kx = 0; kx < gw.kernel; ++kx) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * gw.stride + kx * gw.dilation) - gw.pad_before;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(gw.in)) continue;
              const std::size_t xo = ((b * gh.in + static_cast<std::size_t>(iy)) * gw.in + static_cast<std::size_t>(ix)) * c;
              const std::size_t yo = ((b * gh.out + oy) * gw.out + ox) * c;
              const std::size_t ko = (ky * gw.kernel + kx) * c;
              fn(xo, yo, ko);
            }
          }
  };

  {
    auto xv = x.data();
    auto kv = kernel.data();
    auto yv = out.data();
    for_each_tap([&](std::size_t xo, std::size_t yo, std::size_t ko) {
      for (std::size_t ch = 0; ch < c; ++ch) yv[yo + ch] += xv[xo + ch] * kv[ko + ch];
    });
  }
  check_finite(out, "depthwise_conv2d");
  record<T>("depthwise_conv2d", {x, kernel}, out, [x, kernel, out, c, for_each_tap]() mutable {
    auto xv = x.data();
    auto kv = kernel.data();
    auto gy = out.grad();
    const bool want_x = x.requires_grad(), want_k = kernel.requires_grad();
    auto gx = want_x ? x.grad() : std::span<T>{};
    auto gk = want_k ? kernel.grad() : std::span<T>{};
    for_each_tap([&](std::size_t xo, std::size_t yo, std::size_t ko) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        if (want_x) gx[xo + ch] += gy[yo + ch] * kv[ko + ch];
        if (want_k) gk[ko + ch] += gy[yo + ch] * xv[xo + ch];
      }
    });
  });
  return out;
}

/// Nearest-neighbour upsampling of [N,H,W,C] by integer factors.
template <class T>
Tensor<T> upsample_nearest(const Tensor<T>& x, std::array<int, 2> factor) {
  if (x.rank() != 4) throw ShapeError("upsample_nearest: expected NHWC input, got " + to_string(x.shape()));
  if (factor[0] < 1 || factor[1] < 1) throw ShapeError("upsample_nearest: factors must be >= 1");
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const auto fh = static_cast<std::size_t>(factor[0]), fw = static_cast<std::size_t>(factor[1]);
  Tensor<T> out({n, h * fh, w * fw, c});
  auto xv = x.data();
  auto yv = out.data();
  const std::size_t ho = h * fh, wo = w * fw;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t oy = 0; oy < ho; ++oy)
      for (std::size_t ox = 0; ox < wo; ++ox)
        std::copy_n(xv.begin() + ((b * h + oy / fh) * w + ox / fw) * c, c, yv.begin() + ((b * ho + oy) * wo + ox) * c);
  record<T>("upsample_nearest", {x}, out, [x, out, n, h, w, c, fh, fw]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto gy = out.grad();
    const std::size_t ho = h * fh, wo = w * fw;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t oy = 0; oy < ho; ++oy)
        for (std::size_t ox = 0; ox < wo; ++ox) {
          const std::size_t src = ((b * h + oy / fh) * w + ox / fw) * c;
          const std::size_t dst = ((b * ho + oy) * wo + ox) * c;
          for (std::size_t k = 0; k < c; ++k) gx[src + k] += gy[dst + k];
        }
  });
  return out;
}

}  // namespace mmsense::ad
