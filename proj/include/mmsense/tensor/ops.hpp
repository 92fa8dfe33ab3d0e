#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mmsense/tensor/tensor.hpp"

namespace mmsense::ad {

namespace detail {

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, std::string_view op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
}

// Elementwise unary op whose derivative is expressed through (input, output).
template <class T, class F, class D>
Tensor<T> unary(const Tensor<T>& x, std::string_view name, F f, D dfdx) {
  Tensor<T> out(x.shape());
  auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = f(xs[i]);
  check_finite(out, name);
  record<T>(name, {x}, out, [x, out, dfdx]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto gy = out.grad();
    auto xv = x.data();
    auto yv = out.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * dfdx(xv[i], yv[i]);
  });
  return out;
}

}  // namespace detail

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  auto av = a.data(), bv = b.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  check_finite(out, "add");
  record<T>("add", {a, b}, out, [a, b, out]() mutable {
    auto g = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  auto av = a.data(), bv = b.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  check_finite(out, "mul");
  record<T>("mul", {a, b}, out, [a, b, out]() mutable {
    auto g = out.grad();
    auto av = a.data(), bv = b.data();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  return detail::unary(x, "scale", [s](T v) { return v * s; }, [s](T, T) { return s; });
}

template <class T>
Tensor<T> square(const Tensor<T>& x) {
  return detail::unary(x, "square", [](T v) { return v * v; }, [](T v, T) { return T{2} * v; });
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  return detail::unary(
      x, "relu", [](T v) { return v > T{0} ? v : T{0}; }, [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return detail::unary(
      x, "sigmoid",
      [](T v) {
        // Split by sign to avoid overflow of exp for large |v|.
        if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
        const T e = std::exp(v);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x) {
  return detail::unary(x, "tanh", [](T v) { return std::tanh(v); }, [](T, T y) { return T{1} - y * y; });
}

/// Adds a per-channel bias along the last axis.
template <class T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  const std::size_t c = x.shape().back();
  if (bias.rank() != 1 || bias.dim(0) != c)
    throw ShapeError("add_bias: bias " + to_string(bias.shape()) + " does not match channels of " +
                     to_string(x.shape()));
  Tensor<T> out(x.shape());
  auto xv = x.data();
  auto bv = bias.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] + bv[i % c];
  check_finite(out, "add_bias");
  record<T>("add_bias", {x, bias}, out, [x, bias, out, c]() mutable {
    auto g = out.grad();
    if (x.requires_grad()) {
      auto gx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (bias.requires_grad()) {
      auto gb = bias.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % c] += g[i];
    }
  });
  return out;
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc{0};
  for (T v : x.data()) acc += v;
  Tensor<T> out = Tensor<T>::scalar(acc);
  check_finite(out, "sum");
  record<T>("sum", {x}, out, [x, out]() mutable {
    if (!x.requires_grad()) return;
    const T g = out.grad()[0];
    for (auto& gx : x.grad()) gx += g;
  });
  return out;
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T{1} / static_cast<T>(x.numel()));
}

/// Same data, new shape with equal element count.
template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.numel())
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  Tensor<T> out(std::move(shape), x.values());
  record<T>("reshape", {x}, out, [x, out]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto g = out.grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
  return out;
}

/// Concatenation along the last (channel) axis; leading extents must agree.
template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  Shape lead(parts[0].shape().begin(), parts[0].shape().end() - 1);
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape pl(p.shape().begin(), p.shape().end() - 1);
    if (pl != lead)
      throw ShapeError("concat_channels: leading shape mismatch " + to_string(parts[0].shape()) + " vs " +
                       to_string(p.shape()));
    total += p.shape().back();
  }
  Shape os = lead;
  os.push_back(total);
  Tensor<T> out(os);
  const std::size_t rows = numel(lead);
  auto o = out.data();
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t c = p.shape().back();
    auto pv = p.data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.begin() + r * c, c, o.begin() + r * total + off);
    off += c;
  }
  record<T>("concat_channels", parts, out, [parts, out, rows, total]() mutable {
    auto g = out.grad();
    std::size_t off = 0;
    for (auto& p : parts) {
      const std::size_t c = p.shape().back();
      if (p.requires_grad()) {
        auto gp = p.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t k = 0; k < c; ++k) gp[r * c + k] += g[r * total + off + k];
      }
      off += c;
    }
  });
  return out;
}

/// Channels [begin, begin + count) of the last axis.
template <class T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t begin, std::size_t count) {
  const std::size_t c = x.shape().back();
  if (count == 0 || begin + count > c)
    throw ShapeError("slice_channels: range out of bounds for " + to_string(x.shape()));
  Shape os = x.shape();
  os.back() = count;
  Tensor<T> out(os);
  const std::size_t rows = x.numel() / c;
  auto xv = x.data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.begin() + r * c + begin, count, o.begin() + r * count);
  record<T>("slice_channels", {x}, out, [x, out, rows, c, begin, count]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto g = out.grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < count; ++k) gx[r * c + begin + k] += g[r * count + k];
  });
  return out;
}

/// x[:, index, ...] of a rank >= 2 tensor.
template <class T>
Tensor<T> select_axis1(const Tensor<T>& x, std::size_t index) {
  if (x.rank() < 3 || index >= x.dim(1))
    throw ShapeError("select_axis1: index " + std::to_string(index) + " invalid for " + to_string(x.shape()));
  const std::size_t n = x.dim(0), t = x.dim(1);
  const std::size_t inner = x.numel() / (n * t);
  Shape os{n};
  os.insert(os.end(), x.shape().begin() + 2, x.shape().end());
  Tensor<T> out(os);
  auto xv = x.data();
  auto o = out.data();
  for (std::size_t b = 0; b < n; ++b)
    std::copy_n(xv.begin() + (b * t + index) * inner, inner, o.begin() + b * inner);
  record<T>("select_axis1", {x}, out, [x, out, n, t, inner, index]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto g = out.grad();
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t k = 0; k < inner; ++k) gx[(b * t + index) * inner + k] += g[b * inner + k];
  });
  return out;
}

/// Stacks equally shaped [N, ...] tensors into [N, T, ...].
template <class T>
Tensor<T> stack_axis1(const std::vector<Tensor<T>>& steps) {
  if (steps.empty()) throw ShapeError("stack_axis1: no inputs");
  for (const auto& s : steps)
    if (s.shape() != steps[0].shape()) throw ShapeError("stack_axis1: inconsistent step shapes");
  const std::size_t n = steps[0].dim(0), t = steps.size();
  const std::size_t inner = steps[0].numel() / n;
  Shape os{n, t};
  os.insert(os.end(), steps[0].shape().begin() + 1, steps[0].shape().end());
  Tensor<T> out(os);
  auto o = out.data();
  for (std::size_t s = 0; s < t; ++s) {
    auto sv = steps[s].data();
    for (std::size_t b = 0; b < n; ++b)
      std::copy_n(sv.begin() + b * inner, inner, o.begin() + (b * t + s) * inner);
  }
  record<T>("stack_axis1", steps, out, [steps, out, n, t, inner]() mutable {
    auto g = out.grad();
    for (std::size_t s = 0; s < t; ++s) {
      if (!steps[s].requires_grad()) continue;
      auto gs = steps[s].grad();
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t k = 0; k < inner; ++k) gs[b * inner + k] += g[(b * t + s) * inner + k];
    }
  });
  return out;
}

}  // namespace mmsense::ad
