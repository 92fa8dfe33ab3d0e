#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mmsense/core/error.hpp"

namespace mmsense {

inline constexpr std::size_t kRadarSamples = 256;  // fast-time samples per chirp
inline constexpr std::size_t kRadarChannels = 4;   // I/Q x 2 receivers

/// Single depth image, row-major, device units (metres for simulated data).
struct DepthFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;
  // Set by preprocessing when the frame has no usable content.
  bool degenerate = false;

  DepthFrame() = default;
  DepthFrame(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), values(h * w, fill) {}

  float& at(std::size_t r, std::size_t c) { return values[r * width + c]; }
  [[nodiscard]] float at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
  [[nodiscard]] std::size_t size() const { return values.size(); }
};

/// One chirp of dechirped radar samples, laid out [sample][channel].
struct RadarTrace {
  std::vector<float> samples = std::vector<float>(kRadarSamples * kRadarChannels, 0.0f);
  bool degenerate = false;

  float& at(std::size_t n, std::size_t ch) { return samples[n * kRadarChannels + ch]; }
  [[nodiscard]] float at(std::size_t n, std::size_t ch) const { return samples[n * kRadarChannels + ch]; }
};

/// Binary H x W mask, 1 = concealed-object pixel.
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w) : height(h), width(w), values(h * w, 0) {}

  std::uint8_t& at(std::size_t r, std::size_t c) { return values[r * width + c]; }
  [[nodiscard]] std::uint8_t at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
  [[nodiscard]] bool empty() const {
    for (auto v : values)
      if (v) return false;
    return true;
  }
  [[nodiscard]] std::size_t count() const {
    std::size_t n = 0;
    for (auto v : values) n += v != 0;
    return n;
  }
};

/// Acquisition regimes: one person; two people with the object always present
/// (attribution only); two people with presence and attribution both unknown.
enum class Regime : std::uint8_t { one_person = 0, two_person_attribution = 1, two_person_joint = 2 };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::one_person: return "1P";
    case Regime::two_person_attribution: return "2P1";
    case Regime::two_person_joint: return "2P2";
  }
  return "?";
}

inline Regime parse_regime(const std::string& s) {
  if (s == "1P") return Regime::one_person;
  if (s == "2P1") return Regime::two_person_attribution;
  if (s == "2P2") return Regime::two_person_joint;
  throw ConfigError("unknown regime '" + s + "' (expected 1P, 2P1 or 2P2)");
}

/// Pixel-space point (row, col).
struct PixelPoint {
  double row = 0.0;
  double col = 0.0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Co-registered radar / depth / mask triplet.
struct Sample {
  std::string id;
  RadarTrace radar;
  DepthFrame depth;
  BinaryMask mask;
  bool positive = false;
  Regime regime = Regime::one_person;
  // Chest centroids of subjects not carrying the object (attribution checks).
  std::vector<PixelPoint> decoys;
};

/// Enforces mask/depth agreement and label consistency.
inline void validate_sample(const Sample& s) {
  if (s.radar.samples.size() != kRadarSamples * kRadarChannels)
    throw DataError("sample " + s.id + ": radar trace must hold 256x4 values");
  if (s.depth.values.size() != s.depth.height * s.depth.width || s.depth.values.empty())
    throw DataError("sample " + s.id + ": depth frame size mismatch");
  if (s.mask.height != s.depth.height || s.mask.width != s.depth.width ||
      s.mask.values.size() != s.depth.values.size())
    throw DataError("sample " + s.id + ": mask shape differs from depth shape");
  for (auto v : s.mask.values)
    if (v > 1) throw DataError("sample " + s.id + ": mask value " + std::to_string(v) + " not in {0,1}");
  if (!s.positive && !s.mask.empty()) throw DataError("sample " + s.id + ": negative frame with non-empty mask");
}

}  // namespace mmsense
