#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mmsense/core/error.hpp"

namespace mmsense::sim {

inline constexpr double kSpeedOfLight = 299792458.0;

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// One person in front of the sensors. Range and azimuth are measured from
/// the shared sensor origin; the body is a vertical plane facing the sensors.
struct SubjectSpec {
  double range_m = 3.0;
  double azimuth_deg = 0.0;
  double body_width_m = 0.45;
  double body_height_m = 1.75;
  double body_reflectivity = 1.0;
  bool carries_object = false;
  double chest_height_m = 1.3;
  // Object position relative to the chest centre, on the body plane.
  double object_dx_m = 0.0;
  double object_dy_m = 0.0;
  double facing_deg = 0.0;  // deviation of the torso normal from the radar line of sight
};

struct SceneSpec {
  std::vector<SubjectSpec> subjects;
  double metal_reflectivity = 3.0;
  double object_standoff_m = 0.05;  // object sits this much in front of the body plane
  double object_width_m = 0.12;
  double object_height_m = 0.20;
  double background_range_m = 8.0;
  double background_reflectivity = 0.0;  // radar echo of the back wall; 0 disables it
  std::uint64_t seed = 0;
  std::size_t frame_count = 1;
  double frame_rate_hz = 20.0;

  void validate() const {
    if (subjects.size() > 2) throw ConfigError("scene supports at most two subjects");
    for (const auto& s : subjects) {
      if (s.range_m < 0.5 || s.range_m > 20.0)
        throw ConfigError("subject range " + std::to_string(s.range_m) + " m outside [0.5, 20]");
      if (s.body_width_m <= 0.0 || s.body_height_m <= 0.0) throw ConfigError("body extents must be positive");
    }
    if (background_range_m <= 0.0) throw ConfigError("background range must be positive");
    if (frame_rate_hz <= 0.0) throw ConfigError("frame rate must be positive");
  }
};

/// Sawtooth FMCW chirp with `samples` ADC samples spread over one chirp.
struct ChirpConfig {
  double carrier_hz = 24.0e9;
  double bandwidth_hz = 200.0e6;
  double chirp_duration_s = 256.0e-6;
  std::size_t samples = 256;
  std::size_t channels = 4;

  [[nodiscard]] double sample_rate_hz() const { return static_cast<double>(samples) / chirp_duration_s; }
  [[nodiscard]] double slope() const { return bandwidth_hz / chirp_duration_s; }
  [[nodiscard]] double wavelength_m() const { return kSpeedOfLight / carrier_hz; }
  [[nodiscard]] double beat_frequency_hz(double range_m) const { return 2.0 * slope() * range_m / kSpeedOfLight; }
  /// Fractional transform bin of a target at `range_m` in a `samples`-point DFT.
  [[nodiscard]] double beat_bin(double range_m) const {
    return beat_frequency_hz(range_m) / sample_rate_hz() * static_cast<double>(samples);
  }

  void validate() const {
    if (samples != 256 || channels != 4) throw ConfigError("chirp must produce 256 samples on 4 channels");
    if (bandwidth_hz <= 0.0 || chirp_duration_s <= 0.0 || carrier_hz <= 0.0)
      throw ConfigError("chirp parameters must be positive");
  }
};

/// Pinhole depth camera co-located with the radar, optical axis horizontal.
struct DepthCamera {
  std::size_t height = 32;
  std::size_t width = 64;
  double vfov_deg = 20.0;
  double hfov_deg = 40.0;
  double mount_height_m = 1.3;
  double hole_probability = 0.0;
  double noise_sigma_m = 0.0;

  static DepthCamera spad() { return {}; }
  static DepthCamera wide() {
    DepthCamera c;
    c.height = 48;
    c.width = 64;
    c.vfov_deg = 58.0;
    c.hfov_deg = 87.0;
    return c;
  }
  static DepthCamera for_resolution(std::size_t h, std::size_t w) {
    if (h == 32 && w == 64) return spad();
    if (h == 48 && w == 64) return wide();
    DepthCamera c;
    c.height = h;
    c.width = w;
    return c;
  }

  // Ray through the pixel-grid coordinate (u, v) in pixels, 0 = top-left edge.
  [[nodiscard]] double ray_x(double col) const {
    return (2.0 * col / static_cast<double>(width) - 1.0) * std::tan(deg2rad(hfov_deg) / 2.0);
  }
  [[nodiscard]] double ray_y(double row) const {
    return (1.0 - 2.0 * row / static_cast<double>(height)) * std::tan(deg2rad(vfov_deg) / 2.0);
  }
  /// Pixel coordinates (row, col) of a world point (x lateral, y up, z forward).
  [[nodiscard]] std::pair<double, double> project(double x, double y, double z) const {
    const double col = (x / z / std::tan(deg2rad(hfov_deg) / 2.0) + 1.0) * static_cast<double>(width) / 2.0;
    const double row = (1.0 - (y - mount_height_m) / z / std::tan(deg2rad(vfov_deg) / 2.0)) *
                       static_cast<double>(height) / 2.0;
    return {row - 0.5, col - 0.5};
  }
};

/// Lateral and forward coordinates of a subject's body plane.
inline double subject_x(const SubjectSpec& s) { return s.range_m * std::sin(deg2rad(s.azimuth_deg)); }
inline double subject_z(const SubjectSpec& s) { return s.range_m * std::cos(deg2rad(s.azimuth_deg)); }

}  // namespace mmsense::sim
