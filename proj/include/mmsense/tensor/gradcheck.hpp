#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mmsense/core/rng.hpp"
#include "mmsense/tensor/tensor.hpp"

namespace mmsense::ad {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Coordinates sampled per input tensor; 0 checks every coordinate.
  std::size_t max_coords = 0;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;  // worst tensor
  std::size_t coords = 0;
  bool passed = false;
};

/// Compares reverse-mode gradients of `loss_fn` with central differences.
///
/// `loss_fn` must rebuild the scalar loss from the current values of
/// `inputs`. The error for each input tensor is ||a - f|| / max(||a||, ||f||)
/// over the checked coordinates, which stays meaningful when individual
/// gradient entries are near zero.
inline GradCheckResult check_gradients(const std::string& name, std::vector<Tensor<double>> inputs,
                                       const std::function<Tensor<double>()>& loss_fn,
                                       const GradCheckOptions& opt = {}) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    Tensor<double> loss = loss_fn();
    backward(loss, tape);
  }

  GradCheckResult result;
  result.name = name;
  CounterRng rng(opt.seed);
  for (auto& t : inputs) {
    std::vector<std::size_t> coords(t.numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opt.max_coords && coords.size() > opt.max_coords) {
      shuffle(coords, rng);
      coords.resize(opt.max_coords);
      std::sort(coords.begin(), coords.end());
    }
    double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
    auto values = t.data();
    const auto analytic = t.grad();
    for (std::size_t i : coords) {
      const double orig = values[i];
      values[i] = orig + opt.step;
      const double up = loss_fn().item();
      values[i] = orig - opt.step;
      const double down = loss_fn().item();
      values[i] = orig;
      const double fd = (up - down) / (2.0 * opt.step);
      diff2 += (analytic[i] - fd) * (analytic[i] - fd);
      a2 += analytic[i] * analytic[i];
      f2 += fd * fd;
    }
    const double denom = std::max(std::sqrt(a2), std::sqrt(f2));
    // Both gradients vanish up to roundoff of the difference quotient.
    const double rel = denom < 1e-10 ? 0.0 : std::sqrt(diff2) / denom;
    result.max_rel_error = std::max(result.max_rel_error, rel);
    result.coords += coords.size();
  }
  result.passed = result.max_rel_error < opt.tolerance;
  return result;
}

}  // namespace mmsense::ad
