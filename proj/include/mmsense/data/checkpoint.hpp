#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <type_traits>

#include "json.hpp"
#include "mmsense/core/binary.hpp"
#include "mmsense/core/rng.hpp"
#include "mmsense/model/mmsense_af.hpp"
#include "mmsense/tensor/optim.hpp"

namespace mmsense::data {

inline constexpr std::string_view kCheckpointMagic = "MMAF";
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

template <class T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? DType::f32 : DType::f64;
}

/// Training position: the next step to run is `step_in_epoch` of `epoch`.
struct Progress {
  std::int64_t epoch = 0;
  std::int64_t step_in_epoch = 0;
  std::int64_t global_step = 0;
  double epoch_loss_sum = 0.0;    // summed batch losses of the unfinished epoch
  std::int64_t stale_epochs = 0;  // epochs since the monitored metric last improved
  CounterRng rng{0};              // root stream of the run
  friend bool operator==(const Progress&, const Progress&) = default;
};

template <class T>
struct TrainState {
  std::optional<ad::AdamState<T>> adam;
  std::optional<ad::PlateauSchedule> plateau;
  Progress progress;
};

/// Layout (little-endian):
///   "MMAF" u32 version, str config-json,
///   u32 count, count x { str name, u8 dtype, u8 rank, rank x u32 dim, payload },
///   u8 has_adam  [f64 lr b1 b2 eps, i64 t, u32 n, n x {u8 dtype, u32 len, m payload, v payload}],
///   u8 has_plateau [f64 factor, i32 patience, f64 min_delta min_lr current_lr best, i32 wait, u32 n, n x f64],
///   i64 epoch, i64 step_in_epoch, i64 global_step, f64 epoch_loss_sum, i64 stale_epochs,
///   u64 rng key, u64 rng counter.
namespace detail {

template <class T, class Span>
void put_values(io::ByteWriter& w, const Span& values) {
  for (T v : values) {
    if constexpr (std::is_same_v<T, float>)
      w.f32(v);
    else
      w.f64(v);
  }
}

template <class T, class Span>
void get_values(io::ByteReader& r, DType dt, Span&& out) {
  for (auto& v : out) v = static_cast<T>(dt == DType::f32 ? static_cast<double>(r.f32()) : r.f64());
}

inline DType read_dtype(io::ByteReader& r) {
  const auto d = r.u8();
  if (d != 1 && d != 2) throw DataError(r.source() + ": unknown dtype tag " + std::to_string(d));
  return static_cast<DType>(d);
}

}  // namespace detail

template <class T>
std::vector<std::uint8_t> serialize_checkpoint(const model::MmSenseAF<T>& net, const TrainState<T>& state) {
  io::ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(model::to_json(net.config()).dump());
  const auto& params = net.params();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& info = params.info(i);
    w.str(info.name);
    w.u8(static_cast<std::uint8_t>(dtype_of<T>()));
    w.u8(static_cast<std::uint8_t>(info.shape.size()));
    for (auto d : info.shape) w.u32(static_cast<std::uint32_t>(d));
    detail::put_values<T>(w, params.tensor(i).data());
  }
  w.u8(state.adam.has_value());
  if (state.adam) {
    const auto& a = *state.adam;
    w.f64(a.lr);
    w.f64(a.beta1);
    w.f64(a.beta2);
    w.f64(a.eps);
    w.i64(a.t);
    w.u32(static_cast<std::uint32_t>(a.m.size()));
    for (std::size_t k = 0; k < a.m.size(); ++k) {
      w.u8(static_cast<std::uint8_t>(dtype_of<T>()));
      w.u32(static_cast<std::uint32_t>(a.m[k].size()));
      detail::put_values<T>(w, a.m[k]);
      detail::put_values<T>(w, a.v[k]);
    }
  }
  w.u8(state.plateau.has_value());
  if (state.plateau) {
    const auto& p = *state.plateau;
    w.f64(p.factor);
    w.i32(p.patience);
    w.f64(p.min_delta);
    w.f64(p.min_lr);
    w.f64(p.current_lr);
    w.f64(p.best);
    w.i32(p.wait);
    w.u32(static_cast<std::uint32_t>(p.history.size()));
    for (double h : p.history) w.f64(h);
  }
  w.i64(state.progress.epoch);
  w.i64(state.progress.step_in_epoch);
  w.i64(state.progress.global_step);
  w.f64(state.progress.epoch_loss_sum);
  w.i64(state.progress.stale_epochs);
  w.u64(state.progress.rng.key());
  w.u64(state.progress.rng.counter());
  return w.buffer();
}

template <class T>
void save_checkpoint(const std::filesystem::path& path, const model::MmSenseAF<T>& net,
                     const TrainState<T>& state = {}) {
  io::write_file_atomic(path, serialize_checkpoint(net, state));
}

namespace detail {

inline model::ModelConfig read_header(io::ByteReader& r) {
  if (r.bytes(4) != kCheckpointMagic) throw DataError(r.source() + ": bad magic, not a checkpoint");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw DataError(r.source() + ": unsupported checkpoint version " + std::to_string(version));
  const std::string cfg = r.str();
  try {
    return model::model_config_from_json(nlohmann::json::parse(cfg));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(r.source() + ": corrupt config block: " + e.what());
  }
}

}  // namespace detail

/// Model configuration stored in a checkpoint, without loading tensors.
inline model::ModelConfig read_checkpoint_config(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes, path.string());
  return detail::read_header(r);
}

/// Loads parameters into `net` (whose config must equal the stored one)
/// and returns the stored training state.
template <class T>
TrainState<T> load_checkpoint(const std::filesystem::path& path, model::MmSenseAF<T>& net) {
  const auto bytes = io::read_file(path);
  const std::string src = path.string();
  io::ByteReader r(bytes, src);
  const model::ModelConfig cfg = detail::read_header(r);
  if (!(cfg == net.config()))
    throw ConfigError(src + ": checkpoint config " + model::to_json(cfg).dump() + " does not match model config " +
                      model::to_json(net.config()).dump());

  auto& params = net.params();
  const auto count = r.u32();
  if (count != params.size())
    throw DataError(src + ": holds " + std::to_string(count) + " tensors, model has " + std::to_string(params.size()));
  for (std::size_t i = 0; i < count; ++i) {
    const auto& info = params.info(i);
    const std::string name = r.str();
    if (name != info.name) throw DataError(src + ": tensor " + std::to_string(i) + " is '" + name + "', expected '" +
                                           info.name + "'");
    const DType dt = detail::read_dtype(r);
    const auto rank = r.u8();
    ad::Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != info.shape)
      throw DataError(src + ": tensor '" + name + "' has shape " + ad::to_string(shape) + ", expected " +
                      ad::to_string(info.shape));
    detail::get_values<T>(r, dt, params.tensor(i).data());
  }

  TrainState<T> state;
  if (r.u8()) {
    ad::AdamState<T> a;
    a.lr = r.f64();
    a.beta1 = r.f64();
    a.beta2 = r.f64();
    a.eps = r.f64();
    a.t = r.i64();
    const auto n = r.u32();
    a.m.resize(n);
    a.v.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const DType dt = detail::read_dtype(r);
      const auto len = r.u32();
      a.m[k].resize(len);
      a.v[k].resize(len);
      detail::get_values<T>(r, dt, a.m[k]);
      detail::get_values<T>(r, dt, a.v[k]);
    }
    state.adam = std::move(a);
  }
  if (r.u8()) {
    ad::PlateauSchedule p;
    p.factor = r.f64();
    p.patience = r.i32();
    p.min_delta = r.f64();
    p.min_lr = r.f64();
    p.current_lr = r.f64();
    p.best = r.f64();
    p.wait = r.i32();
    p.history.resize(r.u32());
    for (auto& h : p.history) h = r.f64();
    state.plateau = std::move(p);
  }
  state.progress.epoch = r.i64();
  state.progress.step_in_epoch = r.i64();
  state.progress.global_step = r.i64();
  state.progress.epoch_loss_sum = r.f64();
  state.progress.stale_epochs = r.i64();
  const auto key = r.u64();
  const auto counter = r.u64();
  state.progress.rng = CounterRng(key, counter);
  if (r.remaining() != 0) throw DataError(src + ": " + std::to_string(r.remaining()) + " trailing bytes");
  return state;
}

}  // namespace mmsense::data
