#pragma once

// Engine operators against the direct oracles, over random instances.

#include <functional>
#include <string>
#include <vector>

#include "mmsense/tensor/engine.hpp"
#include "oracles.hpp"

namespace oracle {

using mmsense::CounterRng;
using TD = mmsense::ad::Tensor<double>;

struct OpCheck {
  std::string op;
  std::size_t instances = 0;
  double max_abs_error = 0.0;
};

inline TD tensor_of(const mmsense::ad::Shape& s, const Vec& v) { return TD(s, v); }

inline long rnd(CounterRng& r, long lo, long hi) { return lo + static_cast<long>(r.below(static_cast<std::uint64_t>(hi - lo + 1))); }

inline std::size_t z(long v) { return static_cast<std::size_t>(v); }

/// Each case draws its own random geometry and values, and returns the max
/// absolute difference between engine and oracle.
inline std::vector<std::pair<std::string, std::function<double(CounterRng&)>>> op_cases() {
  namespace ad = mmsense::ad;
  std::vector<std::pair<std::string, std::function<double(CounterRng&)>>> cases;

  cases.emplace_back("conv2d", [](CounterRng& r) {
    const long n = rnd(r, 1, 2), h = rnd(r, 3, 9), w = rnd(r, 3, 9), ci = rnd(r, 1, 4), co = rnd(r, 1, 4);
    const long kh = rnd(r, 1, 4), kw = rnd(r, 1, 4), sh = rnd(r, 1, 3), sw = rnd(r, 1, 3);
    const long dh = rnd(r, 1, 2), dw = rnd(r, 1, 2);
    const bool same = r.uniform() < 0.5 || (kh - 1) * dh + 1 > h || (kw - 1) * dw + 1 > w;
    const Vec x = random_vec(z(n * h * w * ci), r), k = random_vec(z(kh * kw * ci * co), r);
    const auto y = ad::conv2d(tensor_of({z(n), z(h), z(w), z(ci)}, x), tensor_of({z(kh), z(kw), z(ci), z(co)}, k),
                              {{int(sh), int(sw)}, same ? ad::Padding::same : ad::Padding::valid, {int(dh), int(dw)}});
    return max_abs_diff(values(y), conv2d(x, n, h, w, ci, k, kh, kw, co, sh, sw, dh, dw, same));
  });
  cases.emplace_back("conv1d", [](CounterRng& r) {
    const long n = rnd(r, 1, 3), len = rnd(r, 4, 40), ci = rnd(r, 1, 4), co = rnd(r, 1, 5), k = rnd(r, 1, 7),
               s = rnd(r, 1, 3);
    const Vec x = random_vec(z(n * len * ci), r), kk = random_vec(z(k * ci * co), r);
    const auto y = ad::conv1d(tensor_of({z(n), z(len), z(ci)}, x), tensor_of({z(k), z(ci), z(co)}, kk), int(s));
    return max_abs_diff(values(y), conv1d(x, n, len, ci, kk, k, co, s));
  });
  cases.emplace_back("depthwise_conv2d", [](CounterRng& r) {
    const long n = rnd(r, 1, 2), h = rnd(r, 3, 8), w = rnd(r, 3, 8), c = rnd(r, 1, 5), kh = rnd(r, 1, 4),
               kw = rnd(r, 1, 4), sh = rnd(r, 1, 2), sw = rnd(r, 1, 2), d = rnd(r, 1, 2);
    const Vec x = random_vec(z(n * h * w * c), r), k = random_vec(z(kh * kw * c), r);
    const auto y = ad::depthwise_conv2d(tensor_of({z(n), z(h), z(w), z(c)}, x), tensor_of({z(kh), z(kw), z(c)}, k),
                                        {int(sh), int(sw)}, ad::Padding::same, {int(d), int(d)});
    return max_abs_diff(values(y), depthwise(x, n, h, w, c, k, kh, kw, sh, sw, d, d));
  });
  auto lstm_case = [](bool final_only) {
    return [final_only](CounterRng& r) {
      const long n = rnd(r, 1, 2), t = rnd(r, 1, 4), len = rnd(r, 4, 16), ci = rnd(r, 1, 4), hid = rnd(r, 1, 4),
                 k = rnd(r, 1, 5), s = rnd(r, 1, 2);
      const Vec x = random_vec(z(n * t * len * ci), r), wx = random_vec(z(k * ci * 4 * hid), r, -0.5, 0.5),
                wh = random_vec(z(k * hid * 4 * hid), r, -0.5, 0.5), b = random_vec(z(4 * hid), r, -0.5, 0.5);
      ad::ConvLstmWeights<double> lw{tensor_of({z(k), z(ci), z(4 * hid)}, wx), tensor_of({z(k), z(hid), z(4 * hid)}, wh),
                                     tensor_of({z(4 * hid)}, b)};
      const auto y = ad::conv_lstm1d(tensor_of({z(n), z(t), z(len), z(ci)}, x), lw, int(s),
                                     final_only ? ad::LstmReturn::final_state : ad::LstmReturn::sequence);
      return max_abs_diff(values(y), conv_lstm1d(x, n, t, len, ci, wx, wh, b, k, hid, s, final_only));
    };
  };
  cases.emplace_back("conv_lstm1d.sequence", lstm_case(false));
  cases.emplace_back("conv_lstm1d.final_state", lstm_case(true));
  cases.emplace_back("batch_norm.train", [](CounterRng& r) {
    const long m = rnd(r, 2, 30), c = rnd(r, 1, 6);
    const Vec x = random_vec(z(m * c), r, -3.0, 3.0), g = random_vec(z(c), r, 0.5, 2.0), b = random_vec(z(c), r);
    const auto y = ad::batch_norm(tensor_of({z(m), z(c)}, x), tensor_of({z(c)}, g), tensor_of({z(c)}, b),
                                  TD({z(c)}, 0.0), TD({z(c)}, 1.0), ad::Mode::train);
    return max_abs_diff(values(y), batch_norm(x, c, g, b, 1e-5));
  });
  cases.emplace_back("batch_norm.infer", [](CounterRng& r) {
    const long m = rnd(r, 1, 20), c = rnd(r, 1, 6);
    const Vec x = random_vec(z(m * c), r, -3.0, 3.0), g = random_vec(z(c), r, 0.5, 2.0), b = random_vec(z(c), r),
              mu = random_vec(z(c), r), var = random_vec(z(c), r, 0.2, 3.0);
    const auto y = ad::batch_norm(tensor_of({z(m), z(c)}, x), tensor_of({z(c)}, g), tensor_of({z(c)}, b),
                                  tensor_of({z(c)}, mu), tensor_of({z(c)}, var), ad::Mode::infer);
    Vec ref(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto ch = i % z(c);
      ref[i] = g[ch] * (x[i] - mu[ch]) / std::sqrt(var[ch] + 1e-5) + b[ch];
    }
    return max_abs_diff(values(y), ref);
  });
  cases.emplace_back("upsample_nearest", [](CounterRng& r) {
    const long n = rnd(r, 1, 2), h = rnd(r, 1, 5), w = rnd(r, 1, 5), c = rnd(r, 1, 3), fh = rnd(r, 1, 3),
               fw = rnd(r, 1, 4);
    const Vec x = random_vec(z(n * h * w * c), r);
    const auto y = ad::upsample_nearest(tensor_of({z(n), z(h), z(w), z(c)}, x), {int(fh), int(fw)});
    Vec ref;
    for (long b = 0; b < n; ++b)
      for (long i = 0; i < h * fh; ++i)
        for (long j = 0; j < w * fw; ++j)
          for (long ch = 0; ch < c; ++ch) ref.push_back(x[z(((b * h + i / fh) * w + j / fw) * c + ch)]);
    return max_abs_diff(values(y), ref);
  });
  cases.emplace_back("bce_loss", [](CounterRng& r) {
    const long n = rnd(r, 1, 50);
    Vec p = random_vec(z(n), r, 0.0, 1.0), y(z(n));
    for (auto& v : y) v = r.uniform() < 0.5 ? 0.0 : 1.0;
    if (n > 2) p[0] = 0.0, p[1] = 1.0;  // exercises the clamp
    const double got = ad::bce_loss(tensor_of({z(n)}, p), tensor_of({z(n)}, y)).item();
    return std::abs(got - bce(p, y, 1e-7));
  });
  cases.emplace_back("elementwise", [](CounterRng& r) {
    const long n = rnd(r, 1, 40);
    const Vec a = random_vec(z(n), r, -4.0, 4.0), b = random_vec(z(n), r, -4.0, 4.0);
    const TD ta = tensor_of({z(n)}, a), tb = tensor_of({z(n)}, b);
    double err = 0.0;
    const Vec relu = values(ad::relu(ta)), sig = values(ad::sigmoid(ta)), th = values(ad::tanh(ta)),
              sum = values(ad::add(ta, tb)), prod = values(ad::mul(ta, tb));
    for (std::size_t i = 0; i < a.size(); ++i) {
      err = std::max(err, std::abs(relu[i] - (a[i] > 0 ? a[i] : 0.0)));
      err = std::max(err, std::abs(sig[i] - sigm(a[i])));
      err = std::max(err, std::abs(th[i] - std::tanh(a[i])));
      err = std::max(err, std::abs(sum[i] - (a[i] + b[i])));
      err = std::max(err, std::abs(prod[i] - a[i] * b[i]));
    }
    return err;
  });
  cases.emplace_back("concat_channels", [](CounterRng& r) {
    const long m = rnd(r, 1, 10), c1 = rnd(r, 1, 4), c2 = rnd(r, 1, 4);
    const Vec a = random_vec(z(m * c1), r), b = random_vec(z(m * c2), r);
    const auto y = ad::concat_channels<double>({tensor_of({z(m), z(c1)}, a), tensor_of({z(m), z(c2)}, b)});
    Vec ref;
    for (long i = 0; i < m; ++i) {
      for (long k = 0; k < c1; ++k) ref.push_back(a[z(i * c1 + k)]);
      for (long k = 0; k < c2; ++k) ref.push_back(b[z(i * c2 + k)]);
    }
    return max_abs_diff(values(y), ref);
  });
  return cases;
}

inline std::vector<OpCheck> run_op_checks(std::uint64_t seed, std::size_t instances) {
  std::vector<OpCheck> out;
  for (const auto& [name, fn] : op_cases()) {
    OpCheck c{name, instances, 0.0};
    const CounterRng base = CounterRng(seed).split(name);
    for (std::size_t i = 0; i < instances; ++i) {
      CounterRng r = base.split(static_cast<std::uint64_t>(i));
      c.max_abs_error = std::max(c.max_abs_error, fn(r));
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace oracle
