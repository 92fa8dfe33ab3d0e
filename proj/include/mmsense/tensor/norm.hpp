#pragma once

#include <cmath>
#include <vector>

#include "mmsense/core/rng.hpp"
#include "mmsense/tensor/tensor.hpp"

namespace mmsense::ad {

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.99;  // running = momentum * running + (1 - momentum) * batch
};

/// Batch normalization over every axis except the last (channel) axis.
///
/// Train mode normalizes with the batch mean and biased variance and updates
/// `running_mean` / `running_var` in place; infer mode uses the running
/// statistics and leaves them untouched.
template <class T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Tensor<T> running_mean,
                     Tensor<T> running_var, Mode mode, const BatchNormOptions& opt = {}) {
  if (!x.defined() || x.rank() < 2 || x.dim(0) == 0) throw ShapeError("batch_norm: empty batch");
  const std::size_t c = x.shape().back();
  for (const Tensor<T>* t : std::initializer_list<const Tensor<T>*>{&gamma, &beta, &running_mean, &running_var})
    if (t->rank() != 1 || t->dim(0) != c) throw ShapeError("batch_norm: parameter shape does not match channels");
  const std::size_t m = x.numel() / c;
  auto xv = x.data();

  std::vector<T> mu(c, T{0}), inv_std(c, T{0});
  if (mode == Mode::train) {
    std::vector<double> s(c, 0.0), s2(c, 0.0);
    for (std::size_t i = 0; i < xv.size(); ++i) s[i % c] += xv[i];
    for (std::size_t k = 0; k < c; ++k) s[k] /= static_cast<double>(m);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double d = xv[i] - s[i % c];
      s2[i % c] += d * d;
    }
    auto rm = running_mean.data();
    auto rv = running_var.data();
    for (std::size_t k = 0; k < c; ++k) {
      const double var = s2[k] / static_cast<double>(m);
      mu[k] = static_cast<T>(s[k]);
      inv_std[k] = static_cast<T>(1.0 / std::sqrt(var + opt.eps));
      rm[k] = static_cast<T>(opt.momentum * rm[k] + (1.0 - opt.momentum) * s[k]);
      rv[k] = static_cast<T>(opt.momentum * rv[k] + (1.0 - opt.momentum) * var);
    }
  } else {
    auto rm = running_mean.data();
    auto rv = running_var.data();
    for (std::size_t k = 0; k < c; ++k) {
      mu[k] = rm[k];
      inv_std[k] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(rv[k]) + opt.eps));
    }
  }

  Tensor<T> out(x.shape());
  std::vector<T> xhat(x.numel());
  {
    auto g = gamma.data();
    auto b = beta.data();
    auto y = out.data();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const std::size_t k = i % c;
      xhat[i] = (xv[i] - mu[k]) * inv_std[k];
      y[i] = g[k] * xhat[i] + b[k];
    }
  }
  check_finite(out, "batch_norm");
  record<T>("batch_norm", {x, gamma, beta}, out,
            [x, gamma, beta, out, xhat = std::move(xhat), inv_std = std::move(inv_std), mode, c, m]() mutable {
              auto gy = out.grad();
              auto g = gamma.data();
              std::vector<double> sum_gy(c, 0.0), sum_gy_xhat(c, 0.0);
              for (std::size_t i = 0; i < gy.size(); ++i) {
                sum_gy[i % c] += gy[i];
                sum_gy_xhat[i % c] += static_cast<double>(gy[i]) * xhat[i];
              }
              if (gamma.requires_grad()) {
                auto gg = gamma.grad();
                for (std::size_t k = 0; k < c; ++k) gg[k] += static_cast<T>(sum_gy_xhat[k]);
              }
              if (beta.requires_grad()) {
                auto gb = beta.grad();
                for (std::size_t k = 0; k < c; ++k) gb[k] += static_cast<T>(sum_gy[k]);
              }
              if (!x.requires_grad()) return;
              auto gx = x.grad();
              if (mode == Mode::infer) {
                for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * g[i % c] * inv_std[i % c];
                return;
              }
              // d/dx of gamma * (x - mean) / std with batch statistics.
              const double inv_m = 1.0 / static_cast<double>(m);
              for (std::size_t i = 0; i < gy.size(); ++i) {
                const std::size_t k = i % c;
                const double v = gy[i] - inv_m * sum_gy[k] - inv_m * xhat[i] * sum_gy_xhat[k];
                gx[i] += static_cast<T>(g[k] * inv_std[k] * v);
              }
            });
  return out;
}

/// Inverted dropout. Infer mode and rate 0 return `x` itself.
///
/// Element i survives when the i-th uniform draw of `rng` is >= rate; the
/// stream is taken by value so a given stream always yields the same mask.
template <class T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Mode mode, CounterRng rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  if (mode == Mode::infer || rate == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.numel());
  for (auto& v : mask) v = rng.uniform() >= rate ? keep_scale : T{0};
  Tensor<T> out(x.shape());
  auto xv = x.data();
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * mask[i];
  record<T>("dropout", {x}, out, [x, out, mask = std::move(mask)]() mutable {
    if (!x.requires_grad()) return;
    auto gx = x.grad();
    auto gy = out.grad();
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
  });
  return out;
}

}  // namespace mmsense::ad
