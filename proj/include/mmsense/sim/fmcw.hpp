#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "mmsense/core/rng.hpp"
#include "mmsense/data/frames.hpp"
#include "mmsense/sim/scene.hpp"

namespace mmsense::sim {

inline constexpr double kSpecularityScaleDeg = 7.5;

/// Metal return relative to a normal-incidence return.
inline double specularity(double facing_deg) {
  const double u = facing_deg / kSpecularityScaleDeg;
  return std::exp(-0.5 * u * u);
}

/// Point scatterer seen by the radar.
struct Target {
  double range_m = 0.0;
  double azimuth_deg = 0.0;
  double reflectivity = 0.0;
  bool metal = false;
};

/// Scatterers of a scene: one per body, one per concealed object, and the
/// back wall when it has non-zero reflectivity. Body echoes come first.
inline std::vector<Target> scene_targets(const SceneSpec& scene) {
  std::vector<Target> out;
  for (const auto& s : scene.subjects) out.push_back({s.range_m, s.azimuth_deg, s.body_reflectivity, false});
  for (const auto& s : scene.subjects) {
    if (!s.carries_object) continue;
    const double x = subject_x(s) + s.object_dx_m;
    const double y = s.object_dy_m;
    const double z = subject_z(s) - scene.object_standoff_m;
    const double r = std::sqrt(x * x + y * y + z * z);
    out.push_back({r, std::atan2(x, z) * 180.0 / std::numbers::pi,
                   scene.metal_reflectivity * specularity(s.facing_deg), true});
  }
  if (scene.background_reflectivity > 0.0)
    out.push_back({scene.background_range_m, 0.0, scene.background_reflectivity, false});
  return out;
}

/// Dechirped intermediate-frequency samples, laid out [n][channel].
///
/// Target k contributes a_k cos(2 pi f_k t + phi_k) with f_k = 2 S R_k / c,
/// a_k = reflectivity / R_k^2 and phi_k = 4 pi R_k / lambda. Channels 0/1 are
/// the I/Q pair of receiver 1; channels 2/3 repeat it shifted by
/// pi sin(azimuth) for a half-wavelength receiver baseline. Zero-reflectivity
/// targets contribute nothing, and noise is drawn from `rng` after all
/// echoes, so adding or removing one echo leaves the others bitwise intact.
inline RadarTrace fmcw_beat(const std::vector<Target>& targets, const ChirpConfig& chirp, double noise_sigma,
                            CounterRng rng) {
  chirp.validate();
  RadarTrace out;
  const double fs = chirp.sample_rate_hz();
  for (const auto& t : targets) {
    if (t.reflectivity == 0.0) continue;
    const double fb = chirp.beat_frequency_hz(t.range_m);
    if (fb > fs / 2.0)
      throw ConfigError("target at " + std::to_string(t.range_m) + " m beats at " + std::to_string(fb) +
                        " Hz, beyond the unambiguous limit " + std::to_string(fs / 2.0) + " Hz");
    const double a = t.reflectivity / (t.range_m * t.range_m);
    const double phi = 4.0 * std::numbers::pi * t.range_m / chirp.wavelength_m();
    const double delta = std::numbers::pi * std::sin(deg2rad(t.azimuth_deg));
    for (std::size_t n = 0; n < chirp.samples; ++n) {
      const double psi = 2.0 * std::numbers::pi * fb * static_cast<double>(n) / fs + phi;
      out.at(n, 0) += static_cast<float>(a * std::cos(psi));
      out.at(n, 1) += static_cast<float>(a * std::sin(psi));
      out.at(n, 2) += static_cast<float>(a * std::cos(psi + delta));
      out.at(n, 3) += static_cast<float>(a * std::sin(psi + delta));
    }
  }
  if (noise_sigma > 0.0)
    for (auto& v : out.samples) v += static_cast<float>(rng.normal(0.0, noise_sigma));
  return out;
}

inline RadarTrace fmcw_beat(const SceneSpec& scene, const ChirpConfig& chirp, double noise_sigma, CounterRng rng) {
  scene.validate();
  return fmcw_beat(scene_targets(scene), chirp, noise_sigma, rng);
}

}  // namespace mmsense::sim
