#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmsense/core/binary.hpp"
#include "mmsense/data/frames.hpp"

namespace mmsense::data {

namespace fs = std::filesystem;

inline constexpr std::uint32_t kFormatVersion = 1;

// Blob header: 4-byte magic, u32 version, u32 rows, u32 cols, then payload.
inline constexpr std::size_t kBlobHeader = 16;
inline constexpr std::string_view kRadarMagic = "MMRD";
inline constexpr std::string_view kDepthMagic = "MMDP";
inline constexpr std::string_view kMaskMagic = "MMMK";
inline constexpr std::string_view kProbMagic = "MMPB";

enum class Split { unassigned, train, val, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::unassigned: return "unassigned";
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

inline Split parse_split(const std::string& s) {
  if (s == "unassigned") return Split::unassigned;
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + s + "'");
}

struct SampleRecord {
  std::string id;
  std::string radar_path;  // relative to the dataset root
  std::string depth_path;
  std::string mask_path;
  bool positive = false;
  Regime regime = Regime::one_person;
  Split split = Split::unassigned;
  std::vector<PixelPoint> decoys;
};

/// Dataset index. Serialized as `manifest.json` in the dataset root.
struct Manifest {
  std::uint32_t version = kFormatVersion;
  std::size_t height = 32;
  std::size_t width = 64;
  std::string channel_note = "4 radar channels: I/Q of receiver 1, I/Q of receiver 2";
  std::uint64_t split_seed = 0;
  std::array<double, 3> split_fractions{1.0, 0.0, 0.0};
  std::vector<SampleRecord> records;

  [[nodiscard]] std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].split == s) out.push_back(i);
    return out;
  }
};

inline nlohmann::ordered_json to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["format"] = "mmsense-manifest";
  j["version"] = m.version;
  j["resolution"] = {m.height, m.width};
  j["channels"] = m.channel_note;
  j["split_seed"] = m.split_seed;
  j["split_fractions"] = m.split_fractions;
  auto& arr = j["samples"] = nlohmann::ordered_json::array();
  for (const auto& r : m.records) {
    nlohmann::ordered_json e;
    e["id"] = r.id;
    e["radar"] = r.radar_path;
    e["depth"] = r.depth_path;
    e["mask"] = r.mask_path;
    e["positive"] = r.positive;
    e["regime"] = to_string(r.regime);
    e["split"] = to_string(r.split);
    auto& d = e["decoys"] = nlohmann::ordered_json::array();
    for (const auto& p : r.decoys) d.push_back({p.row, p.col});
    arr.push_back(std::move(e));
  }
  return j;
}

inline Manifest manifest_from_json(const nlohmann::json& j, const std::string& source) {
  try {
    if (j.at("format").get<std::string>() != "mmsense-manifest") throw DataError(source + ": not a manifest");
    Manifest m;
    m.version = j.at("version").get<std::uint32_t>();
    if (m.version != kFormatVersion)
      throw DataError(source + ": unsupported manifest version " + std::to_string(m.version));
    const auto res = j.at("resolution").get<std::array<std::size_t, 2>>();
    m.height = res[0];
    m.width = res[1];
    m.channel_note = j.value("channels", std::string());
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.split_fractions = j.at("split_fractions").get<std::array<double, 3>>();
    for (const auto& e : j.at("samples")) {
      SampleRecord r;
      r.id = e.at("id").get<std::string>();
      r.radar_path = e.at("radar").get<std::string>();
      r.depth_path = e.at("depth").get<std::string>();
      r.mask_path = e.at("mask").get<std::string>();
      r.positive = e.at("positive").get<bool>();
      r.regime = parse_regime(e.at("regime").get<std::string>());
      r.split = parse_split(e.at("split").get<std::string>());
      for (const auto& p : e.at("decoys")) r.decoys.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      m.records.push_back(std::move(r));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(source + ": malformed manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(source + ": " + e.what());
  }
}

inline void write_manifest(const fs::path& root, const Manifest& m) {
  io::write_file_atomic(root / "manifest.json", to_json(m).dump(1) + "\n");
}

inline Manifest read_manifest(const fs::path& root) {
  const fs::path path = root / "manifest.json";
  const auto bytes = io::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j, path.string());
}

// --- sample blobs ---------------------------------------------------------

namespace detail {

inline std::vector<std::uint8_t> blob(std::string_view magic, std::size_t rows, std::size_t cols,
                                      const std::vector<float>* f, const std::vector<std::uint8_t>* b) {
  io::ByteWriter w;
  w.bytes(magic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(rows));
  w.u32(static_cast<std::uint32_t>(cols));
  if (f)
    for (float v : *f) w.f32(v);
  if (b)
    for (auto v : *b) w.u8(v);
  return w.buffer();
}

// Reads a blob and checks magic, version, declared shape and exact length.
inline std::vector<std::uint8_t> open_blob(const fs::path& path, std::string_view magic, std::size_t rows,
                                           std::size_t cols, std::size_t elem_bytes) {
  auto bytes = io::read_file(path);
  const std::size_t expect = kBlobHeader + rows * cols * elem_bytes;
  if (bytes.size() < kBlobHeader)
    throw DataError(path.string() + ": shape mismatch, file holds " + std::to_string(bytes.size()) +
                    " bytes, expected " + std::to_string(expect));
  io::ByteReader r(bytes, path.string());
  if (r.bytes(4) != magic) throw DataError(path.string() + ": bad magic, expected " + std::string(magic));
  const auto version = r.u32();
  if (version != kFormatVersion) throw DataError(path.string() + ": unsupported version " + std::to_string(version));
  const auto h = r.u32(), w = r.u32();
  if (h != rows || w != cols)
    throw DataError(path.string() + ": shape mismatch, header declares " + std::to_string(h) + "x" +
                    std::to_string(w) + ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  if (bytes.size() != expect)
    throw DataError(path.string() + ": shape mismatch, file holds " + std::to_string(bytes.size()) +
                    " bytes, expected " + std::to_string(expect));
  return bytes;
}

inline std::vector<float> read_f32_payload(const std::vector<std::uint8_t>& bytes, const std::string& src) {
  io::ByteReader r(bytes, src);
  r.bytes(kBlobHeader);
  std::vector<float> out((bytes.size() - kBlobHeader) / 4);
  for (auto& v : out) v = r.f32();
  return out;
}

}  // namespace detail

inline void write_f32_blob(const fs::path& path, std::string_view magic, std::size_t rows, std::size_t cols,
                           const std::vector<float>& values) {
  io::write_file_atomic(path, detail::blob(magic, rows, cols, &values, nullptr));
}

inline std::vector<float> read_f32_blob(const fs::path& path, std::string_view magic, std::size_t rows,
                                        std::size_t cols) {
  return detail::read_f32_payload(detail::open_blob(path, magic, rows, cols, 4), path.string());
}

/// Writes the three blobs of `s` under `root` and returns its record.
inline SampleRecord write_sample(const fs::path& root, const Sample& s) {
  validate_sample(s);
  SampleRecord r;
  r.id = s.id;
  r.radar_path = "samples/" + s.id + ".radar";
  r.depth_path = "samples/" + s.id + ".depth";
  r.mask_path = "samples/" + s.id + ".mask";
  r.positive = s.positive;
  r.regime = s.regime;
  r.decoys = s.decoys;
  io::write_file_atomic(root / r.radar_path,
                        detail::blob(kRadarMagic, kRadarSamples, kRadarChannels, &s.radar.samples, nullptr));
  io::write_file_atomic(root / r.depth_path,
                        detail::blob(kDepthMagic, s.depth.height, s.depth.width, &s.depth.values, nullptr));
  io::write_file_atomic(root / r.mask_path, detail::blob(kMaskMagic, s.mask.height, s.mask.width, nullptr, &s.mask.values));
  return r;
}

/// Reads and validates one sample; `height` x `width` is the manifest's declared grid.
inline Sample read_sample(const fs::path& root, const SampleRecord& r, std::size_t height, std::size_t width) {
  Sample s;
  s.id = r.id;
  s.positive = r.positive;
  s.regime = r.regime;
  s.decoys = r.decoys;
  const fs::path rp = root / r.radar_path, dp = root / r.depth_path, mp = root / r.mask_path;
  s.radar.samples = read_f32_blob(rp, kRadarMagic, kRadarSamples, kRadarChannels);
  s.depth = DepthFrame(height, width);
  s.depth.values = read_f32_blob(dp, kDepthMagic, height, width);
  const auto mask_bytes = detail::open_blob(mp, kMaskMagic, height, width, 1);
  s.mask = BinaryMask(height, width);
  std::copy(mask_bytes.begin() + kBlobHeader, mask_bytes.end(), s.mask.values.begin());
  try {
    validate_sample(s);
  } catch (const DataError& e) {
    throw DataError(mp.string() + ": " + e.what());
  }
  return s;
}

/// Checks that every referenced file exists with the length its shape implies.
inline void validate_files(const fs::path& root, const Manifest& m) {
  auto check = [&](const std::string& rel, std::size_t payload) {
    const fs::path p = root / rel;
    if (!fs::exists(p)) throw DataError(p.string() + ": missing");
    const auto size = fs::file_size(p);
    if (size != kBlobHeader + payload)
      throw DataError(p.string() + ": shape mismatch, file holds " + std::to_string(size) + " bytes, expected " +
                      std::to_string(kBlobHeader + payload));
  };
  for (const auto& r : m.records) {
    check(r.radar_path, kRadarSamples * kRadarChannels * 4);
    check(r.depth_path, m.height * m.width * 4);
    check(r.mask_path, m.height * m.width);
  }
}

}  // namespace mmsense::data
