#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "mmsense/core/binary.hpp"
#include "mmsense/data/frames.hpp"

namespace mmsense::eval {

/// Binary PPM (P6) overlay: prediction-only pixels red, GT-only blue, both
/// green; every other pixel is the depth frame mapped linearly to gray
/// (near = bright) between its minimum and maximum.
inline std::vector<std::uint8_t> overlay_ppm(const DepthFrame& depth, const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height != depth.height || pred.width != depth.width || gt.height != depth.height ||
      gt.width != depth.width)
    throw ShapeError("overlay: depth and mask shapes differ");
  float lo = 0.0f, hi = 0.0f;
  if (!depth.values.empty()) {
    const auto [mn, mx] = std::minmax_element(depth.values.begin(), depth.values.end());
    lo = *mn;
    hi = *mx;
  }
  const std::string header = "P6\n" + std::to_string(depth.width) + " " + std::to_string(depth.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + depth.values.size() * 3);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const bool p = pred.values[i] != 0, g = gt.values[i] != 0;
    std::uint8_t rgb[3];
    if (p && g) {
      rgb[0] = 0, rgb[1] = 255, rgb[2] = 0;
    } else if (p) {
      rgb[0] = 255, rgb[1] = 0, rgb[2] = 0;
    } else if (g) {
      rgb[0] = 0, rgb[1] = 0, rgb[2] = 255;
    } else {
      const float t = hi > lo ? (hi - depth.values[i]) / (hi - lo) : 0.5f;
      const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0f, 1.0f) * 200.0f) + 20);
      rgb[0] = rgb[1] = rgb[2] = v;
    }
    out.insert(out.end(), rgb, rgb + 3);
  }
  return out;
}

inline void emit_overlay(const DepthFrame& depth, const BinaryMask& pred, const BinaryMask& gt,
                         const std::filesystem::path& path) {
  io::write_file_atomic(path, overlay_ppm(depth, pred, gt));
}

}  // namespace mmsense::eval
