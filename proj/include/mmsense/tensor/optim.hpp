#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mmsense/tensor/tensor.hpp"

namespace mmsense::ad {

/// Adam moments and hyperparameters; m and v mirror the parameter list.
template <class T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

/// One bias-corrected Adam update using each parameter's accumulated grad():
///
///   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
///   p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <class T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state) {
  if (state.m.empty()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), T{0});
      state.v.emplace_back(p.numel(), T{0});
    }
  }
  if (state.m.size() != params.size()) throw ConfigError("adam_step: parameter list does not match optimizer state");
  for (std::size_t k = 0; k < params.size(); ++k)
    if (state.m[k].size() != params[k].numel() || params[k].grad().size() != params[k].numel())
      throw ConfigError("adam_step: parameter " + std::to_string(k) + " shape or grad does not match state");

  ++state.t;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].data();
    auto g = params[k].grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mhat = static_cast<double>(m[i]) / c1;
      const double vhat = static_cast<double>(v[i]) / c2;
      p[i] = static_cast<T>(p[i] - state.lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

/// Reduce-on-plateau learning-rate rule.
struct PlateauSchedule {
  double factor = 0.5;
  int patience = 5;
  double min_delta = 1e-4;
  double min_lr = 1e-6;
  double current_lr = 1e-3;
  double best = std::numeric_limits<double>::infinity();
  int wait = 0;
  std::vector<double> history;
};

/// Feeds one epoch's monitored metric (lower is better). A value below
/// best - min_delta resets the wait counter; otherwise after `patience`
/// non-improving epochs lr <- max(lr * factor, min_lr) and the counter resets.
inline void plateau_step(PlateauSchedule& s, double metric) {
  if (!(s.factor > 0.0 && s.factor < 1.0)) throw ConfigError("plateau factor must lie in (0, 1)");
  s.history.push_back(metric);
  if (metric < s.best - s.min_delta) {
    s.best = metric;
    s.wait = 0;
    return;
  }
  if (++s.wait >= s.patience && s.current_lr > s.min_lr) {
    s.current_lr = std::max(s.current_lr * s.factor, s.min_lr);
    s.wait = 0;
  }
}

}  // namespace mmsense::ad
