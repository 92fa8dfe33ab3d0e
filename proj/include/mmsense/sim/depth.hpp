#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mmsense/core/rng.hpp"
#include "mmsense/data/frames.hpp"
#include "mmsense/sim/scene.hpp"

namespace mmsense::sim {

struct Rendered {
  DepthFrame depth;
  std::vector<int> owner;  // subject index per pixel, -1 for background
  std::vector<std::string> warnings;
};

namespace detail {

// Rounded-rectangle membership with corner radius `r`.
inline bool inside_rounded(double x, double y, double x0, double x1, double y0, double y1, double r) {
  if (x < x0 || x > x1 || y < y0 || y > y1) return false;
  const double cx = std::clamp(x, x0 + r, x1 - r);
  const double cy = std::clamp(y, y0 + r, y1 - r);
  const double dx = x - cx, dy = y - cy;
  return dx * dx + dy * dy <= r * r;
}

}  // namespace detail

/// Rasterizes each subject as a rounded rectangle on the plane z = R cos(az)
/// in front of a background plane. Pixels hold planar depth (z) in metres;
/// the nearest surface wins. Holes and additive noise follow the camera
/// settings and draw from `rng` (holes first, then noise).
inline Rendered render_depth(const SceneSpec& scene, const DepthCamera& cam, CounterRng rng = CounterRng()) {
  scene.validate();
  Rendered out{DepthFrame(cam.height, cam.width, static_cast<float>(scene.background_range_m)),
               std::vector<int>(cam.height * cam.width, -1), {}};
  std::vector<double> zbuf(cam.height * cam.width, scene.background_range_m);
  for (std::size_t k = 0; k < scene.subjects.size(); ++k) {
    const auto& s = scene.subjects[k];
    const double z = subject_z(s), xc = subject_x(s);
    if (z <= 0.0) continue;
    const double hw = s.body_width_m / 2.0;
    const double radius = 0.25 * s.body_width_m;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < cam.height; ++r) {
      const double y = cam.mount_height_m + cam.ray_y(static_cast<double>(r) + 0.5) * z;
      for (std::size_t c = 0; c < cam.width; ++c) {
        const double x = cam.ray_x(static_cast<double>(c) + 0.5) * z;
        if (!detail::inside_rounded(x, y, xc - hw, xc + hw, 0.0, s.body_height_m, radius)) continue;
        ++hits;
        const std::size_t i = r * cam.width + c;
        if (z < zbuf[i]) {
          zbuf[i] = z;
          out.owner[i] = static_cast<int>(k);
          out.depth.values[i] = static_cast<float>(z);
        }
      }
    }
    if (hits == 0) out.warnings.push_back("subject " + std::to_string(k) + " is outside the field of view");
  }
  if (cam.hole_probability > 0.0) {
    CounterRng holes = rng.split("holes");
    for (auto& v : out.depth.values)
      if (holes.uniform() < cam.hole_probability) v = 0.0f;
  }
  if (cam.noise_sigma_m > 0.0) {
    CounterRng noise = rng.split("noise");
    for (auto& v : out.depth.values)
      if (v != 0.0f) v = std::max(0.01f, v + static_cast<float>(noise.normal(0.0, cam.noise_sigma_m)));
  }
  return out;
}

/// Camera pixel (row, col) of a subject's concealed-object centre.
inline PixelPoint object_pixel(const SubjectSpec& s, const DepthCamera& cam) {
  const auto [row, col] =
      cam.project(subject_x(s) + s.object_dx_m, s.chest_height_m + s.object_dy_m, subject_z(s));
  return {row, col};
}

/// Ground truth: pixels owned by subject `k` whose footprint on its body
/// plane overlaps the object rectangle.
inline BinaryMask object_mask(const SceneSpec& scene, const DepthCamera& cam, const std::vector<int>& owner,
                              std::size_t k) {
  BinaryMask mask(cam.height, cam.width);
  const auto& s = scene.subjects.at(k);
  const double z = subject_z(s);
  const double ox = subject_x(s) + s.object_dx_m, oy = s.chest_height_m + s.object_dy_m;
  const double hx = scene.object_width_m / 2.0, hy = scene.object_height_m / 2.0;
  for (std::size_t r = 0; r < cam.height; ++r) {
    const double ya = cam.mount_height_m + cam.ray_y(static_cast<double>(r + 1)) * z;
    const double yb = cam.mount_height_m + cam.ray_y(static_cast<double>(r)) * z;
    if (yb < oy - hy || ya > oy + hy) continue;
    for (std::size_t c = 0; c < cam.width; ++c) {
      const double xa = cam.ray_x(static_cast<double>(c)) * z;
      const double xb = cam.ray_x(static_cast<double>(c + 1)) * z;
      if (xb < ox - hx || xa > ox + hx) continue;
      if (owner[r * cam.width + c] == static_cast<int>(k)) mask.at(r, c) = 1;
    }
  }
  return mask;
}

}  // namespace mmsense::sim
