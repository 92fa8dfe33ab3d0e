#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmsense/core/rng.hpp"
#include "mmsense/data/manifest.hpp"
#include "mmsense/sim/depth.hpp"
#include "mmsense/sim/fmcw.hpp"

namespace mmsense::sim {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] double sample(CounterRng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
};

/// Random scene population. Every field maps to a key of the JSON scene config.
struct SceneDistribution {
  std::size_t height = 32;
  std::size_t width = 64;
  std::map<Regime, double> regime_weights{{Regime::one_person, 1.0}};
  double positive_fraction = 0.5;
  Range range_m{2.0, 4.5};
  double azimuth_max_deg = 15.0;
  // Standing positions [azimuth_deg, range_m]; when set, each subject takes a
  // distinct station, jittered by azimuth_max_deg and station_range_jitter_m.
  std::vector<std::array<double, 2>> stations;
  double station_range_jitter_m = 0.2;
  double min_range_separation_m = 1.0;
  double min_gap_px = 2.0;  // empty columns required between two silhouettes
  Range body_width_m{0.40, 0.50};
  Range body_height_m{1.60, 1.90};
  Range body_reflectivity{0.7, 1.3};
  Range metal_reflectivity{2.5, 3.5};
  Range chest_height_m{1.25, 1.35};
  double object_offset_max_m = 0.04;
  double facing_sigma_deg = 5.0;
  double object_standoff_m = 0.05;
  double object_width_m = 0.12;
  double object_height_m = 0.20;
  double background_range_m = 8.0;
  double background_reflectivity = 4.0;
  double radar_noise_sigma = 0.005;
  double depth_noise_sigma_m = 0.02;
  double hole_probability = 0.02;
  ChirpConfig chirp;

  [[nodiscard]] DepthCamera camera() const {
    DepthCamera cam = DepthCamera::for_resolution(height, width);
    cam.noise_sigma_m = depth_noise_sigma_m;
    cam.hole_probability = hole_probability;
    return cam;
  }

  void validate() const {
    if (height == 0 || width == 0) throw ConfigError("scene resolution must be positive");
    if (positive_fraction < 0.0 || positive_fraction > 1.0) throw ConfigError("positive_fraction must lie in [0, 1]");
    if (range_m.lo < 0.5 || range_m.hi > 20.0 || range_m.lo > range_m.hi)
      throw ConfigError("range_m must lie within [0.5, 20] with lo <= hi");
    double total = 0.0;
    for (const auto& [r, w] : regime_weights) {
      if (w < 0.0) throw ConfigError("regime weights must be non-negative");
      total += w;
    }
    if (total <= 0.0) throw ConfigError("at least one regime needs a positive weight");
    if (!stations.empty()) {
      const bool two = regime_weights.count(Regime::two_person_joint) || regime_weights.count(Regime::two_person_attribution);
      if (two && stations.size() < 2) throw ConfigError("two-person regimes need at least two stations");
      for (const auto& st : stations)
        if (st[1] - station_range_jitter_m < 0.5 || st[1] + station_range_jitter_m > 20.0)
          throw ConfigError("station ranges must stay within [0.5, 20] after jitter");
      if (station_range_jitter_m < 0.0) throw ConfigError("station_range_jitter_m must be non-negative");
    }
    chirp.validate();
  }
};

inline nlohmann::ordered_json to_json(const SceneDistribution& d) {
  auto range = [](const Range& r) { return nlohmann::ordered_json::array({r.lo, r.hi}); };
  nlohmann::ordered_json j;
  j["resolution"] = {d.height, d.width};
  auto& rw = j["regime_weights"] = nlohmann::ordered_json::object();
  for (const auto& [r, w] : d.regime_weights) rw[to_string(r)] = w;
  j["positive_fraction"] = d.positive_fraction;
  j["range_m"] = range(d.range_m);
  j["azimuth_max_deg"] = d.azimuth_max_deg;
  j["stations"] = d.stations;
  j["station_range_jitter_m"] = d.station_range_jitter_m;
  j["min_range_separation_m"] = d.min_range_separation_m;
  j["min_gap_px"] = d.min_gap_px;
  j["body_width_m"] = range(d.body_width_m);
  j["body_height_m"] = range(d.body_height_m);
  j["body_reflectivity"] = range(d.body_reflectivity);
  j["metal_reflectivity"] = range(d.metal_reflectivity);
  j["chest_height_m"] = range(d.chest_height_m);
  j["object_offset_max_m"] = d.object_offset_max_m;
  j["facing_sigma_deg"] = d.facing_sigma_deg;
  j["object_standoff_m"] = d.object_standoff_m;
  j["object_size_m"] = {d.object_width_m, d.object_height_m};
  j["background_range_m"] = d.background_range_m;
  j["background_reflectivity"] = d.background_reflectivity;
  j["radar_noise_sigma"] = d.radar_noise_sigma;
  j["depth_noise_sigma_m"] = d.depth_noise_sigma_m;
  j["hole_probability"] = d.hole_probability;
  j["chirp"] = {{"carrier_hz", d.chirp.carrier_hz},
                {"bandwidth_hz", d.chirp.bandwidth_hz},
                {"chirp_duration_s", d.chirp.chirp_duration_s}};
  return j;
}

/// Reads a scene config; absent keys keep their defaults, unknown keys are errors.
inline SceneDistribution scene_distribution_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {
      "resolution", "regime_weights", "positive_fraction", "range_m", "azimuth_max_deg", "stations", "station_range_jitter_m",
      "min_range_separation_m", "min_gap_px", "body_width_m", "body_height_m", "body_reflectivity",
      "metal_reflectivity", "chest_height_m", "object_offset_max_m", "facing_sigma_deg", "object_standoff_m",
      "object_size_m", "background_range_m", "background_reflectivity", "radar_noise_sigma",
      "depth_noise_sigma_m", "hole_probability", "chirp"};
  SceneDistribution d;
  try {
    for (const auto& [k, v] : j.items())
      if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown scene key '" + k + "'");
    auto range = [&](const char* key, Range& r) {
      if (j.contains(key)) {
        const auto a = j.at(key).get<std::array<double, 2>>();
        r = {a[0], a[1]};
      }
    };
    auto num = [&](const char* key, double& x) {
      if (j.contains(key)) x = j.at(key).get<double>();
    };
    if (j.contains("resolution")) {
      const auto res = j.at("resolution").get<std::array<std::size_t, 2>>();
      d.height = res[0];
      d.width = res[1];
    }
    if (j.contains("regime_weights")) {
      d.regime_weights.clear();
      for (const auto& [k, v] : j.at("regime_weights").items()) d.regime_weights[parse_regime(k)] = v.get<double>();
    }
    num("positive_fraction", d.positive_fraction);
    range("range_m", d.range_m);
    num("azimuth_max_deg", d.azimuth_max_deg);
    if (j.contains("stations")) d.stations = j.at("stations").get<std::vector<std::array<double, 2>>>();
    num("station_range_jitter_m", d.station_range_jitter_m);
    num("min_range_separation_m", d.min_range_separation_m);
    num("min_gap_px", d.min_gap_px);
    range("body_width_m", d.body_width_m);
    range("body_height_m", d.body_height_m);
    range("body_reflectivity", d.body_reflectivity);
    range("metal_reflectivity", d.metal_reflectivity);
    range("chest_height_m", d.chest_height_m);
    num("object_offset_max_m", d.object_offset_max_m);
    num("facing_sigma_deg", d.facing_sigma_deg);
    num("object_standoff_m", d.object_standoff_m);
    if (j.contains("object_size_m")) {
      const auto a = j.at("object_size_m").get<std::array<double, 2>>();
      d.object_width_m = a[0];
      d.object_height_m = a[1];
    }
    num("background_range_m", d.background_range_m);
    num("background_reflectivity", d.background_reflectivity);
    num("radar_noise_sigma", d.radar_noise_sigma);
    num("depth_noise_sigma_m", d.depth_noise_sigma_m);
    num("hole_probability", d.hole_probability);
    if (j.contains("chirp")) {
      const auto& c = j.at("chirp");
      d.chirp.carrier_hz = c.value("carrier_hz", d.chirp.carrier_hz);
      d.chirp.bandwidth_hz = c.value("bandwidth_hz", d.chirp.bandwidth_hz);
      d.chirp.chirp_duration_s = c.value("chirp_duration_s", d.chirp.chirp_duration_s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scene config: ") + e.what());
  }
  d.validate();
  return d;
}

/// Horizontal pixel extent [first, last] (fractional column edges) of a subject's body.
inline std::pair<double, double> column_extent(const SubjectSpec& s, const DepthCamera& cam) {
  const double z = subject_z(s), x = subject_x(s), t = std::tan(deg2rad(cam.hfov_deg) / 2.0);
  const double w = static_cast<double>(cam.width);
  return {((x - s.body_width_m / 2.0) / z / t + 1.0) * w / 2.0, ((x + s.body_width_m / 2.0) / z / t + 1.0) * w / 2.0};
}

struct SimulatedFrame {
  Sample sample;
  SceneSpec scene;
};

namespace detail {

inline SubjectSpec draw_subject(const SceneDistribution& d, CounterRng& rng) {
  SubjectSpec s;
  s.range_m = d.range_m.sample(rng);
  s.azimuth_deg = rng.uniform(-d.azimuth_max_deg, d.azimuth_max_deg);
  s.body_width_m = d.body_width_m.sample(rng);
  s.body_height_m = d.body_height_m.sample(rng);
  s.body_reflectivity = d.body_reflectivity.sample(rng);
  s.chest_height_m = d.chest_height_m.sample(rng);
  s.object_dx_m = rng.uniform(-d.object_offset_max_m, d.object_offset_max_m);
  s.object_dy_m = rng.uniform(-d.object_offset_max_m, d.object_offset_max_m);
  s.facing_deg = rng.normal(0.0, d.facing_sigma_deg);
  return s;
}

inline bool acceptable(const std::vector<SubjectSpec>& subjects, const SceneDistribution& d, const DepthCamera& cam) {
  std::vector<std::pair<double, double>> cols;
  for (const auto& s : subjects) {
    const auto e = column_extent(s, cam);
    if (e.first < 0.0 || e.second > static_cast<double>(cam.width)) return false;
    cols.push_back(e);
  }
  if (subjects.size() == 2) {
    if (std::abs(subjects[0].range_m - subjects[1].range_m) < d.min_range_separation_m) return false;
    const auto& a = cols[0].first < cols[1].first ? cols[0] : cols[1];
    const auto& b = cols[0].first < cols[1].first ? cols[1] : cols[0];
    if (b.first - a.second < d.min_gap_px) return false;
  }
  return true;
}

}  // namespace detail

/// Draws one frame of regime `regime`; `positive` selects whether a subject
/// (chosen uniformly for two-person scenes) carries the concealed object.
inline SimulatedFrame simulate_frame(const SceneDistribution& d, Regime regime, bool positive, CounterRng rng,
                                     const std::string& id) {
  const DepthCamera cam = d.camera();
  const std::size_t people = regime == Regime::one_person ? 1 : 2;
  CounterRng geo = rng.split("geometry");
  std::vector<SubjectSpec> subjects;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 10000) throw ConfigError("scene distribution rejects every draw; relax its constraints");
    subjects.clear();
    for (std::size_t p = 0; p < people; ++p) subjects.push_back(detail::draw_subject(d, geo));
    if (!d.stations.empty()) {
      std::vector<std::size_t> order(d.stations.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      shuffle(order, geo);
      for (std::size_t p = 0; p < people; ++p) {
        const auto& st = d.stations[order[p]];
        subjects[p].azimuth_deg += st[0];
        subjects[p].range_m = st[1] + geo.uniform(-d.station_range_jitter_m, d.station_range_jitter_m);
      }
    }
    if (detail::acceptable(subjects, d, cam)) break;
  }
  CounterRng pick = rng.split("carrier");
  const std::size_t carrier = people == 1 ? 0 : static_cast<std::size_t>(pick.below(people));
  if (positive) subjects[carrier].carries_object = true;

  SimulatedFrame f;
  f.scene.subjects = subjects;
  f.scene.metal_reflectivity = d.metal_reflectivity.sample(geo);
  f.scene.object_standoff_m = d.object_standoff_m;
  f.scene.object_width_m = d.object_width_m;
  f.scene.object_height_m = d.object_height_m;
  f.scene.background_range_m = d.background_range_m;
  f.scene.background_reflectivity = d.background_reflectivity;
  f.scene.seed = rng.key();

  Rendered r = render_depth(f.scene, cam, rng.split("depth"));
  Sample& s = f.sample;
  s.id = id;
  s.regime = regime;
  s.positive = positive;
  s.depth = std::move(r.depth);
  s.radar = fmcw_beat(f.scene, d.chirp, d.radar_noise_sigma, rng.split("radar"));
  s.mask = positive ? object_mask(f.scene, cam, r.owner, carrier) : BinaryMask(cam.height, cam.width);
  if (positive)
    for (std::size_t k = 0; k < subjects.size(); ++k)
      if (k != carrier) s.decoys.push_back(object_pixel(subjects[k], cam));
  return f;
}

/// `count` frames. Regime counts follow the weights by largest remainder;
/// within each regime exactly round(n * positive_fraction) frames are
/// positive (all of them for the attribution regime). Frame order is a
/// seeded shuffle and frame i draws from stream split("frame").split(i).
inline std::vector<SimulatedFrame> make_dataset(const SceneDistribution& d, std::size_t count, std::uint64_t seed) {
  d.validate();
  double total = 0.0;
  for (const auto& [r, w] : d.regime_weights) total += w;
  std::vector<std::pair<Regime, std::size_t>> quota;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (const auto& [r, w] : d.regime_weights) {
    const double exact = static_cast<double>(count) * w / total;
    const auto n = static_cast<std::size_t>(std::floor(exact));
    remainders.emplace_back(exact - static_cast<double>(n), quota.size());
    quota.emplace_back(r, n);
    assigned += n;
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < count; ++k, ++assigned) ++quota[remainders[k % remainders.size()].second].second;

  std::vector<std::pair<Regime, bool>> plan;
  for (const auto& [r, n] : quota) {
    const std::size_t pos = r == Regime::two_person_attribution
                                ? n
                                : static_cast<std::size_t>(std::llround(static_cast<double>(n) * d.positive_fraction));
    for (std::size_t i = 0; i < n; ++i) plan.emplace_back(r, i < pos);
  }
  const CounterRng root(seed);
  CounterRng order = root.split("order");
  shuffle(plan, order);

  std::vector<SimulatedFrame> out;
  out.reserve(count);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "f%06zu", i);
    out.push_back(simulate_frame(d, plan[i].first, plan[i].second, root.split("frame").split(i), id));
  }
  return out;
}

/// Writes frames (and an unsplit manifest) in the dataset directory layout.
inline data::Manifest write_dataset(const std::filesystem::path& root, const std::vector<SimulatedFrame>& frames,
                                    std::size_t height, std::size_t width, std::uint64_t seed) {
  std::filesystem::create_directories(root / "samples");
  data::Manifest m;
  m.height = height;
  m.width = width;
  m.split_seed = seed;
  for (const auto& f : frames) m.records.push_back(data::write_sample(root, f.sample));
  data::write_manifest(root, m);
  return m;
}

}  // namespace mmsense::sim
