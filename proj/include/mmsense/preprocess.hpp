#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmsense/data/frames.hpp"

namespace mmsense::preprocess {

/// Replaces zero-depth holes with the minimum non-zero depth of the frame.
/// An all-zero frame is returned unchanged with `degenerate` set.
inline DepthFrame fill_depth_holes(DepthFrame frame) {
  float lo = std::numeric_limits<float>::infinity();
  for (float v : frame.values)
    if (v != 0.0f) lo = std::min(lo, v);
  if (!std::isfinite(lo)) {
    frame.degenerate = true;
    return frame;
  }
  for (float& v : frame.values)
    if (v == 0.0f) v = lo;
  return frame;
}

/// x' = (x - mean) / max|x - mean|, so the output lies in [-1, 1].
/// A constant frame maps to zeros with `degenerate` set.
inline DepthFrame standardize_depth(DepthFrame frame) {
  if (frame.values.empty()) throw ConfigError("standardize_depth: empty frame");
  double mean = 0.0;
  for (float v : frame.values) mean += v;
  mean /= static_cast<double>(frame.values.size());
  double peak = 0.0;
  for (float v : frame.values) peak = std::max(peak, std::abs(v - mean));
  if (peak == 0.0) {
    std::fill(frame.values.begin(), frame.values.end(), 0.0f);
    frame.degenerate = true;
    return frame;
  }
  for (float& v : frame.values) v = static_cast<float>((v - mean) / peak);
  return frame;
}

/// Divides the whole 256x4 trace by its maximum absolute value.
inline RadarTrace normalize_radar(RadarTrace trace) {
  float peak = 0.0f;
  for (float v : trace.samples) peak = std::max(peak, std::abs(v));
  if (peak == 0.0f) {
    trace.degenerate = true;
    return trace;
  }
  for (float& v : trace.samples) v /= peak;
  return trace;
}

/// Area-average resampling onto a coarser (target_h x target_w) grid. Each
/// output pixel averages the source area it covers, weighting partially
/// covered source pixels by their overlap.
inline DepthFrame downsample_depth(const DepthFrame& frame, std::size_t target_h, std::size_t target_w) {
  if (target_h == 0 || target_w == 0) throw ConfigError("downsample_depth: target must be non-empty");
  if (target_h > frame.height || target_w > frame.width)
    throw ConfigError("downsample_depth: target " + std::to_string(target_h) + "x" + std::to_string(target_w) +
                      " larger than source " + std::to_string(frame.height) + "x" + std::to_string(frame.width));
  if (target_h == frame.height && target_w == frame.width) return frame;

  // Overlap weights of source cells [i, i+1) with target cell [t*s, (t+1)*s).
  auto weights = [](std::size_t src, std::size_t dst) {
    std::vector<std::vector<std::pair<std::size_t, double>>> w(dst);
    const double scale = static_cast<double>(src) / static_cast<double>(dst);
    for (std::size_t t = 0; t < dst; ++t) {
      const double a = t * scale, b = (t + 1) * scale;
      for (auto i = static_cast<std::size_t>(std::floor(a)); i < src && static_cast<double>(i) < b; ++i) {
        const double overlap = std::min<double>(b, i + 1.0) - std::max<double>(a, static_cast<double>(i));
        if (overlap > 0.0) w[t].emplace_back(i, overlap / scale);
      }
    }
    return w;
  };
  const auto wr = weights(frame.height, target_h);
  const auto wc = weights(frame.width, target_w);
  DepthFrame out(target_h, target_w);
  for (std::size_t r = 0; r < target_h; ++r)
    for (std::size_t c = 0; c < target_w; ++c) {
      double acc = 0.0;
      for (const auto& [i, a] : wr[r])
        for (const auto& [j, b] : wc[c]) acc += a * b * frame.at(i, j);
      out.at(r, c) = static_cast<float>(acc);
    }
  return out;
}

/// Depth pipeline in its fixed order: downsample (when the source is larger
/// than the model grid), hole-fill, standardize.
inline DepthFrame prepare_depth(const DepthFrame& raw, std::size_t target_h, std::size_t target_w) {
  DepthFrame f = (raw.height == target_h && raw.width == target_w) ? raw : downsample_depth(raw, target_h, target_w);
  f = fill_depth_holes(std::move(f));
  const bool holes_degenerate = f.degenerate;
  f = standardize_depth(std::move(f));
  f.degenerate = f.degenerate || holes_degenerate;
  return f;
}

inline RadarTrace prepare_radar(const RadarTrace& raw) { return normalize_radar(raw); }

}  // namespace mmsense::preprocess
