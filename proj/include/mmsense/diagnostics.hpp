#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mmsense/core/rng.hpp"
#include "mmsense/model/mmsense_af.hpp"
#include "mmsense/tensor/engine.hpp"

namespace mmsense::diag {

using ad::Tensor;
using TD = Tensor<double>;

inline TD random_tensor(ad::Shape shape, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  TD t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Draws values with |v| in [gap, 1] so nothing sits on a ReLU kink.
inline TD away_from_zero(ad::Shape shape, CounterRng& rng, double gap = 0.05) {
  TD t(std::move(shape));
  for (auto& v : t.data()) {
    const double m = rng.uniform(gap, 1.0);
    v = rng.uniform() < 0.5 ? -m : m;
  }
  return t;
}

/// Weighted sum <op(...), w> with fixed random weights, making every output
/// element contribute a distinct gradient.
inline TD project(const TD& y, CounterRng rng) {
  TD w(y.shape());
  for (auto& v : w.data()) v = rng.uniform(-1.0, 1.0);
  return ad::sum(ad::mul(y, w));
}

struct SuiteOptions {
  std::size_t instances = 5;
  std::uint64_t seed = 2024;
  ad::GradCheckOptions check;
  bool include_model = true;
  std::size_t model_coords = 16;  // sampled coordinates per model tensor
};

/// Worst result over `instances` random draws of one operator case.
using CaseFn = std::function<ad::GradCheckResult(CounterRng&, const ad::GradCheckOptions&)>;

inline ad::GradCheckResult run_case(const std::string& name, const CaseFn& fn, const SuiteOptions& opt) {
  ad::GradCheckResult worst;
  worst.name = name;
  worst.passed = true;
  const CounterRng base = CounterRng(opt.seed).split(name);
  for (std::size_t i = 0; i < opt.instances; ++i) {
    CounterRng rng = base.split(static_cast<std::uint64_t>(i));
    auto r = fn(rng, opt.check);
    worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
    worst.coords += r.coords;
    worst.passed = worst.passed && r.passed;
  }
  return worst;
}

/// Operator cases of the engine, each checked against central differences.
inline std::vector<std::pair<std::string, CaseFn>> operator_cases() {
  using ad::check_gradients;
  std::vector<std::pair<std::string, CaseFn>> cases;
  auto add = [&](std::string name, CaseFn fn) { cases.emplace_back(std::move(name), std::move(fn)); };

  add("conv2d.same.stride2", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({2, 5, 6, 3}, r), k = random_tensor({3, 3, 3, 2}, r);
    const CounterRng w = r.split("w");
    return check_gradients("conv2d", {x, k}, [=] { return project(ad::conv2d(x, k, {{2, 2}}), w); }, o);
  });
  add("conv2d.same.even_kernel", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({1, 4, 5, 2}, r), k = random_tensor({4, 4, 2, 3}, r);
    const CounterRng w = r.split("w");
    return check_gradients("conv2d", {x, k}, [=] { return project(ad::conv2d(x, k), w); }, o);
  });
  add("conv2d.dilated", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({1, 6, 6, 2}, r), k = random_tensor({4, 4, 2, 2}, r);
    const CounterRng w = r.split("w");
    return check_gradients(
        "conv2d", {x, k}, [=] { return project(ad::conv2d(x, k, {{1, 1}, ad::Padding::same, {2, 2}}), w); }, o);
  });
  add("conv2d.valid", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({2, 5, 5, 2}, r), k = random_tensor({2, 3, 2, 2}, r);
    const CounterRng w = r.split("w");
    return check_gradients(
        "conv2d", {x, k}, [=] { return project(ad::conv2d(x, k, {{2, 1}, ad::Padding::valid, {1, 1}}), w); }, o);
  });
  add("conv1d", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({2, 16, 3}, r), k = random_tensor({7, 3, 4}, r);
    const CounterRng w = r.split("w");
    return check_gradients("conv1d", {x, k}, [=] { return project(ad::conv1d(x, k, 2), w); }, o);
  });
  add("depthwise_conv2d", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({2, 4, 5, 3}, r), k = random_tensor({3, 3, 3}, r);
    const CounterRng w = r.split("w");
    return check_gradients("depthwise_conv2d", {x, k}, [=] { return project(ad::depthwise_conv2d(x, k), w); }, o);
  });
  add("conv_lstm1d.sequence", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({2, 3, 8, 2}, r);
    ad::ConvLstmWeights<double> lw{random_tensor({3, 2, 12}, r, -0.5, 0.5), random_tensor({3, 3, 12}, r, -0.5, 0.5),
                                   random_tensor({12}, r, -0.5, 0.5)};
    const CounterRng w = r.split("w");
    return check_gradients(
        "conv_lstm1d", {x, lw.input_kernel, lw.recurrent_kernel, lw.bias},
        [=] { return project(ad::conv_lstm1d(x, lw, 2, ad::LstmReturn::sequence), w); }, o);
  });
  add("conv_lstm1d.final_state", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({1, 3, 8, 3}, r);
    ad::ConvLstmWeights<double> lw{random_tensor({5, 3, 8}, r, -0.5, 0.5), random_tensor({5, 2, 8}, r, -0.5, 0.5),
                                   random_tensor({8}, r, -0.5, 0.5)};
    const CounterRng w = r.split("w");
    return check_gradients(
        "conv_lstm1d", {x, lw.input_kernel, lw.recurrent_kernel, lw.bias},
        [=] { return project(ad::conv_lstm1d(x, lw, 1, ad::LstmReturn::final_state), w); }, o);
  });
  add("batch_norm.train", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({3, 2, 2, 4}, r), g = random_tensor({4}, r, 0.5, 1.5), b = random_tensor({4}, r);
    const CounterRng w = r.split("w");
    return check_gradients("batch_norm", {x, g, b}, [=] {
      // Fresh running statistics per evaluation keep the loss a pure function.
      return project(ad::batch_norm(x, g, b, TD({4}, 0.0), TD({4}, 1.0), ad::Mode::train), w);
    }, o);
  });
  add("batch_norm.infer", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({2, 2, 2, 3}, r), g = random_tensor({3}, r, 0.5, 1.5), b = random_tensor({3}, r);
    TD rm = random_tensor({3}, r), rv = random_tensor({3}, r, 0.5, 2.0);
    const CounterRng w = r.split("w");
    return check_gradients(
        "batch_norm", {x, g, b}, [=] { return project(ad::batch_norm(x, g, b, rm, rv, ad::Mode::infer), w); }, o);
  });
  add("dropout", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({2, 3, 4}, r);
    const CounterRng w = r.split("w"), d = r.split("mask");
    return check_gradients("dropout", {x}, [=] { return project(ad::dropout(x, 0.3, ad::Mode::train, d), w); }, o);
  });
  add("upsample_nearest", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({1, 2, 3, 2}, r);
    const CounterRng w = r.split("w");
    return check_gradients("upsample_nearest", {x}, [=] { return project(ad::upsample_nearest(x, {2, 4}), w); }, o);
  });
  add("bce_loss", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD p = random_tensor({10}, r, 0.05, 0.95), y({10});
    for (auto& v : y.data()) v = r.uniform() < 0.5 ? 0.0 : 1.0;
    return check_gradients("bce_loss", {p}, [=] { return ad::bce_loss(p, y); }, o);
  });
  add("relu", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = away_from_zero({3, 5}, r);
    const CounterRng w = r.split("w");
    return check_gradients("relu", {x}, [=] { return project(ad::relu(x), w); }, o);
  });
  add("sigmoid", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({3, 5}, r, -4.0, 4.0);
    const CounterRng w = r.split("w");
    return check_gradients("sigmoid", {x}, [=] { return project(ad::sigmoid(x), w); }, o);
  });
  add("tanh", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({3, 5}, r, -2.0, 2.0);
    const CounterRng w = r.split("w");
    return check_gradients("tanh", {x}, [=] { return project(ad::tanh(x), w); }, o);
  });
  add("add.mul", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD a = random_tensor({2, 4}, r), b = random_tensor({2, 4}, r);
    const CounterRng w = r.split("w");
    return check_gradients("add.mul", {a, b}, [=] { return project(ad::add(ad::mul(a, b), a), w); }, o);
  });
  add("add_bias", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({2, 3, 4}, r), b = random_tensor({4}, r);
    const CounterRng w = r.split("w");
    return check_gradients("add_bias", {x, b}, [=] { return project(ad::add_bias(x, b), w); }, o);
  });
  add("concat.slice.reshape", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD a = random_tensor({2, 2, 2, 3}, r), b = random_tensor({2, 2, 2, 2}, r);
    const CounterRng w = r.split("w");
    return check_gradients("concat.slice.reshape", {a, b}, [=] {
      TD c = ad::concat_channels<double>({a, b});
      return project(ad::reshape(ad::slice_channels(c, 1, 3), {2, 4, 3}), w);
    }, o);
  });
  add("select.stack", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({2, 3, 4, 2}, r);
    const CounterRng w = r.split("w");
    return check_gradients("select.stack", {x}, [=] {
      return project(ad::stack_axis1<double>({ad::select_axis1(x, 2), ad::select_axis1(x, 0)}), w);
    }, o);
  });
  add("mean.square.scale", [](CounterRng& r, const ad::GradCheckOptions& o) {
    TD x = random_tensor({3, 4}, r);
    return check_gradients("mean.square.scale", {x}, [=] { return ad::mean(ad::scale(ad::square(x), 3.0)); }, o);
  });
  return cases;
}

/// BCE of the reduced-width 8x16 model in train mode (fixed dropout streams)
/// against every learnable tensor. Biases and batch-norm shifts are drawn at
/// random so that pre-activations stay clear of ReLU kinks.
inline ad::GradCheckResult check_model(std::uint64_t seed, ad::GradCheckOptions opt) {
  model::MmSenseAF<double> net(model::ModelConfig::tiny());
  CounterRng rng(seed);
  net.init_params(rng.split("init"));
  CounterRng extra = rng.split("offsets");
  auto& params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto kind = params.info(i).kind;
    if (kind == model::ParamKind::bias || kind == model::ParamKind::beta)
      for (auto& v : params.tensor(i).data()) v = extra.uniform(-0.2, 0.2);
    if (kind == model::ParamKind::weight)
      for (auto& v : params.tensor(i).data()) v *= 4.0;
  }
  CounterRng data = rng.split("data");
  TD radar = random_tensor({2, 1, kRadarSamples, kRadarChannels}, data);
  TD depth = random_tensor({2, 8, 16, 1}, data);
  TD mask({2, 8, 16, 1});
  for (auto& v : mask.data()) v = data.uniform() < 0.3 ? 1.0 : 0.0;
  const CounterRng drop = rng.split("dropout");
  // Running statistics are updated by each forward; snapshot and restore them
  // so every evaluation sees the same state.
  std::vector<std::pair<TD, std::vector<double>>> stats;
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!model::is_learnable(params.info(i).kind)) stats.emplace_back(params.tensor(i), params.tensor(i).values());
  auto loss = [&net, &stats, radar, depth, mask, drop]() {
    for (auto& [t, v] : stats) std::copy(v.begin(), v.end(), t.data().begin());
    return ad::bce_loss(net.forward(radar, depth, ad::Mode::train, drop), mask);
  };
  auto r = ad::check_gradients("mmsense_af.tiny", params.learnable(), loss, opt);
  return r;
}

inline std::vector<ad::GradCheckResult> run_suite(const SuiteOptions& opt = {}) {
  std::vector<ad::GradCheckResult> out;
  for (const auto& [name, fn] : operator_cases()) out.push_back(run_case(name, fn, opt));
  if (opt.include_model) {
    ad::GradCheckOptions o = opt.check;
    o.max_coords = opt.model_coords;
    out.push_back(check_model(opt.seed, o));
  }
  return out;
}

}  // namespace mmsense::diag
