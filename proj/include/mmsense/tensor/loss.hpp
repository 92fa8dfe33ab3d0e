#pragma once

#include <algorithm>
#include <cmath>

#include "mmsense/tensor/tensor.hpp"

namespace mmsense::ad {

inline constexpr double kBceEps = 1e-7;

/// Mean binary cross-entropy of probabilities `pred` against {0,1} `target`.
///
/// Predictions are clamped to [eps, 1 - eps]; the gradient is zero where the
/// clamp is active.
template <class T>
Tensor<T> bce_loss(const Tensor<T>& pred, const Tensor<T>& target, double eps = kBceEps) {
  if (pred.shape() != target.shape())
    throw ShapeError("bce_loss: prediction " + to_string(pred.shape()) + " vs target " + to_string(target.shape()));
  auto p = pred.data();
  auto y = target.data();
  const double lo = eps, hi = 1.0 - eps;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp<double>(p[i], lo, hi);
    acc -= y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  const double n = static_cast<double>(p.size());
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc / n));
  check_finite(out, "bce_loss");
  record<T>("bce_loss", {pred}, out, [pred, target, out, lo, hi, n]() mutable {
    if (!pred.requires_grad()) return;
    const double g = out.grad()[0] / n;
    auto p = pred.data();
    auto y = target.data();
    auto gp = pred.grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double q = p[i];
      if (q < lo || q > hi) continue;
      gp[i] += static_cast<T>(g * (q - y[i]) / (q * (1.0 - q)));
    }
  });
  return out;
}

}  // namespace mmsense::ad
