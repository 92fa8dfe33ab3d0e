#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>

#include "json.hpp"
#include "mmsense/core/error.hpp"
#include "mmsense/data/frames.hpp"

namespace mmsense::model {

/// Which encoder inputs reach the network; dropped inputs are zeroed.
enum class Modality { fused, radar_only, depth_only };

inline std::string to_string(Modality m) {
  switch (m) {
    case Modality::fused: return "fused";
    case Modality::radar_only: return "radar_only";
    case Modality::depth_only: return "depth_only";
  }
  return "?";
}

inline Modality parse_modality(const std::string& s) {
  if (s == "fused") return Modality::fused;
  if (s == "radar_only") return Modality::radar_only;
  if (s == "depth_only") return Modality::depth_only;
  throw ConfigError("unknown modality '" + s + "' (expected fused, radar_only or depth_only)");
}

using Pair = std::array<int, 2>;

/// Architecture hyperparameters. Channel counts are the full-width schedule
/// divided by `width_divisor` (never below 1).
struct ModelConfig {
  std::size_t height = 32;
  std::size_t width = 64;
  int width_divisor = 1;

  int radar_kernel = 7;
  std::array<int, 2> radar_lstm_strides{2, 2};
  std::array<int, 3> radar_conv_strides{2, 2, 1};

  Pair tof_kernel{7, 7};
  std::array<Pair, 4> tof_strides{{{2, 2}, {2, 2}, {2, 2}, {1, 2}}};

  std::array<Pair, 3> upsample{{{2, 2}, {2, 2}, {2, 4}}};
  int decoder_kernel = 3;

  double dropout_rate = 0.3;
  int dfm_dilation = 2;
  double init_stddev = 0.05;
  Modality modality = Modality::fused;

  static constexpr std::size_t kLatent = 4;
  static constexpr std::array<std::size_t, 5> kRadarChannels{16, 32, 64, 64, 128};
  static constexpr std::array<std::size_t, 4> kTofChannels{32, 64, 64, 128};
  static constexpr std::array<std::size_t, 3> kDecoderChannels{128, 64, 32};

  /// 32x64 SPAD frames.
  static ModelConfig spad() { return {}; }

  /// 48x64 frames downsampled from the wide-FoV camera.
  static ModelConfig realsense() {
    ModelConfig c;
    c.height = 48;
    c.tof_strides = {{{2, 2}, {2, 2}, {3, 2}, {1, 2}}};
    c.upsample = {{{2, 2}, {2, 2}, {3, 4}}};
    return c;
  }

  /// Reduced-width 8x16 configuration used for gradient checks.
  static ModelConfig tiny() {
    ModelConfig c;
    c.height = 8;
    c.width = 16;
    c.width_divisor = 8;
    c.tof_strides = {{{2, 2}, {1, 2}, {1, 1}, {1, 1}}};
    c.upsample = {{{2, 2}, {1, 2}, {1, 1}}};
    return c;
  }

  /// Preset for a supported depth resolution.
  static ModelConfig for_resolution(std::size_t h, std::size_t w) {
    if (h == 32 && w == 64) return spad();
    if (h == 48 && w == 64) return realsense();
    if (h == 8 && w == 16) return tiny();
    throw ConfigError("unsupported depth resolution " + std::to_string(h) + "x" + std::to_string(w));
  }

  [[nodiscard]] ModelConfig with_divisor(int divisor) const {
    ModelConfig c = *this;
    c.width_divisor = divisor;
    return c;
  }

  [[nodiscard]] std::size_t channels(std::size_t full) const {
    return std::max<std::size_t>(1, full / static_cast<std::size_t>(width_divisor));
  }
  [[nodiscard]] std::size_t radar_channels(std::size_t layer) const { return channels(kRadarChannels.at(layer)); }
  [[nodiscard]] std::size_t tof_channels(std::size_t layer) const { return channels(kTofChannels.at(layer)); }
  [[nodiscard]] std::size_t decoder_channels(std::size_t stage) const {
    return channels(kDecoderChannels.at(stage));
  }
  [[nodiscard]] std::size_t fused_channels() const { return radar_channels(4) + tof_channels(3); }

  /// Throws ConfigError unless the stride and upsample schedules map the
  /// depth grid onto the 4x4 latent and back exactly.
  void validate() const {
    if (width_divisor < 1) throw ConfigError("width_divisor must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("dropout_rate must lie in [0, 1)");
    if (radar_kernel < 1 || decoder_kernel < 1 || dfm_dilation < 1) throw ConfigError("kernel sizes must be >= 1");
    std::size_t h = height, w = width;
    for (const auto& s : tof_strides) {
      if (s[0] < 1 || s[1] < 1) throw ConfigError("tof strides must be >= 1");
      h = (h + s[0] - 1) / s[0];
      w = (w + s[1] - 1) / s[1];
    }
    if (h != kLatent || w != kLatent)
      throw ConfigError("tof stride schedule maps " + std::to_string(height) + "x" + std::to_string(width) + " to " +
                        std::to_string(h) + "x" + std::to_string(w) + ", not 4x4");
    h = kLatent;
    w = kLatent;
    for (const auto& f : upsample) {
      if (f[0] < 1 || f[1] < 1) throw ConfigError("upsample factors must be >= 1");
      h *= f[0];
      w *= f[1];
    }
    if (h != height || w != width)
      throw ConfigError("decoder upsample schedule reaches " + std::to_string(h) + "x" + std::to_string(w) +
                        " instead of " + std::to_string(height) + "x" + std::to_string(width));
    std::size_t len = kRadarSamples;
    for (int s : radar_lstm_strides) len = (len + s - 1) / s;
    for (int s : radar_conv_strides) len = (len + s - 1) / s;
    if (len != kLatent * kLatent)
      throw ConfigError("radar stride schedule yields length " + std::to_string(len) + ", expected 16");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["height"] = c.height;
  j["width"] = c.width;
  j["width_divisor"] = c.width_divisor;
  j["radar_kernel"] = c.radar_kernel;
  j["radar_lstm_strides"] = c.radar_lstm_strides;
  j["radar_conv_strides"] = c.radar_conv_strides;
  j["tof_kernel"] = c.tof_kernel;
  j["tof_strides"] = c.tof_strides;
  j["upsample"] = c.upsample;
  j["decoder_kernel"] = c.decoder_kernel;
  j["dropout_rate"] = c.dropout_rate;
  j["dfm_dilation"] = c.dfm_dilation;
  j["init_stddev"] = c.init_stddev;
  j["modality"] = to_string(c.modality);
  return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.height = j.at("height").get<std::size_t>();
    c.width = j.at("width").get<std::size_t>();
    c.width_divisor = j.at("width_divisor").get<int>();
    c.radar_kernel = j.at("radar_kernel").get<int>();
    c.radar_lstm_strides = j.at("radar_lstm_strides").get<std::array<int, 2>>();
    c.radar_conv_strides = j.at("radar_conv_strides").get<std::array<int, 3>>();
    c.tof_kernel = j.at("tof_kernel").get<Pair>();
    c.tof_strides = j.at("tof_strides").get<std::array<Pair, 4>>();
    c.upsample = j.at("upsample").get<std::array<Pair, 3>>();
    c.decoder_kernel = j.at("decoder_kernel").get<int>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.dfm_dilation = j.at("dfm_dilation").get<int>();
    c.init_stddev = j.at("init_stddev").get<double>();
    c.modality = parse_modality(j.at("modality").get<std::string>());
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
}

}  // namespace mmsense::model
