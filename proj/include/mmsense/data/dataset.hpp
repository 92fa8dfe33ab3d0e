#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "mmsense/core/rng.hpp"
#include "mmsense/data/manifest.hpp"
#include "mmsense/preprocess.hpp"
#include "mmsense/tensor/tensor.hpp"

namespace mmsense::data {

/// Assigns train/val/test per (label, regime) stratum.
///
/// Each stratum is shuffled with its own stream of `seed`; the first
/// round(n * f_train) members go to train and the cumulative rounding of
/// f_train + f_val decides val, the rest is test.
inline Manifest split(Manifest m, std::array<double, 3> fractions, std::uint64_t seed) {
  for (double f : fractions)
    if (f < 0.0) throw ConfigError("split fractions must be non-negative");
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");

  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    strata[{m.records[i].positive ? 1 : 0, static_cast<int>(m.records[i].regime)}].push_back(i);

  const CounterRng base = CounterRng(seed).split("split");
  for (auto& [key, members] : strata) {
    CounterRng rng = base.split(static_cast<std::uint64_t>(key.first * 16 + key.second));
    shuffle(members, rng);
    const auto n = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * fractions[0]));
    const auto n_train_val =
        std::min(members.size(), static_cast<std::size_t>(std::llround(n * (fractions[0] + fractions[1]))));
    for (std::size_t k = 0; k < members.size(); ++k)
      m.records[members[k]].split = k < n_train ? Split::train : k < n_train_val ? Split::val : Split::test;
  }
  m.split_seed = seed;
  m.split_fractions = fractions;
  return m;
}

/// Seeded per-epoch shuffling over a fixed index set. The final short batch is kept.
class Batcher {
 public:
  Batcher(std::vector<std::size_t> indices, std::size_t batch_size, std::uint64_t seed)
      : indices_(std::move(indices)), batch_size_(batch_size), seed_(seed) {
    if (batch_size_ < 1) throw ConfigError("batch_size must be >= 1");
  }

  [[nodiscard]] std::size_t batches_per_epoch() const { return (indices_.size() + batch_size_ - 1) / batch_size_; }
  [[nodiscard]] std::size_t size() const { return indices_.size(); }

  [[nodiscard]] std::vector<std::vector<std::size_t>> epoch(std::size_t e) const {
    std::vector<std::size_t> order = indices_;
    CounterRng rng = CounterRng(seed_).split("epoch").split(static_cast<std::uint64_t>(e));
    shuffle(order, rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t b = 0; b < order.size(); b += batch_size_)
      out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                       order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), b + batch_size_)));
    return out;
  }

 private:
  std::vector<std::size_t> indices_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

/// Batch tensors: radar [B,1,256,4], depth [B,H,W,1], mask [B,H,W,1].
template <class T>
struct Batch {
  ad::Tensor<T> radar;
  ad::Tensor<T> depth;
  ad::Tensor<T> mask;
};

/// Preprocessed samples held in memory, in manifest order.
class Dataset {
 public:
  Dataset() = default;

  /// Preprocesses raw samples (depth downsampled to `height` x `width` when larger).
  Dataset(std::vector<Sample> raw, std::size_t height, std::size_t width) : height_(height), width_(width) {
    samples_.reserve(raw.size());
    for (auto& s : raw) {
      if (s.mask.height != height || s.mask.width != width)
        throw DataError("sample " + s.id + ": mask is " + std::to_string(s.mask.height) + "x" +
                        std::to_string(s.mask.width) + ", model grid is " + std::to_string(height) + "x" +
                        std::to_string(width));
      s.depth = preprocess::prepare_depth(s.depth, height, width);
      s.radar = preprocess::prepare_radar(s.radar);
      samples_.push_back(std::move(s));
    }
    splits_.assign(samples_.size(), Split::unassigned);
  }

  /// Loads every record of the manifest under `root`.
  static Dataset load(const fs::path& root, Manifest* manifest_out = nullptr) {
    Manifest m = read_manifest(root);
    validate_files(root, m);
    std::vector<Sample> raw;
    raw.reserve(m.records.size());
    for (const auto& r : m.records) raw.push_back(read_sample(root, r, m.height, m.width));
    Dataset d(std::move(raw), m.height, m.width);
    for (std::size_t i = 0; i < m.records.size(); ++i) d.splits_[i] = m.records[i].split;
    if (manifest_out) *manifest_out = std::move(m);
    return d;
  }

  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] std::size_t height() const { return height_; }
  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] const Sample& operator[](std::size_t i) const { return samples_.at(i); }
  [[nodiscard]] const std::vector<Sample>& samples() const { return samples_; }

  void set_splits(std::vector<Split> s) {
    if (s.size() != samples_.size()) throw ConfigError("split list length differs from dataset size");
    splits_ = std::move(s);
  }

  [[nodiscard]] std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < splits_.size(); ++i)
      if (splits_[i] == s) out.push_back(i);
    return out;
  }

  [[nodiscard]] std::vector<std::size_t> all_indices() const {
    std::vector<std::size_t> out(samples_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
  }

  template <class T>
  [[nodiscard]] Batch<T> batch(const std::vector<std::size_t>& idx) const {
    if (idx.empty()) throw ConfigError("cannot build an empty batch");
    const std::size_t b = idx.size(), hw = height_ * width_;
    Batch<T> out{ad::Tensor<T>({b, 1, kRadarSamples, kRadarChannels}), ad::Tensor<T>({b, height_, width_, 1}),
                 ad::Tensor<T>({b, height_, width_, 1})};
    auto r = out.radar.data();
    auto d = out.depth.data();
    auto m = out.mask.data();
    for (std::size_t k = 0; k < b; ++k) {
      const Sample& s = samples_.at(idx[k]);
      std::copy(s.radar.samples.begin(), s.radar.samples.end(), r.begin() + k * kRadarSamples * kRadarChannels);
      for (std::size_t p = 0; p < hw; ++p) {
        d[k * hw + p] = static_cast<T>(s.depth.values[p]);
        m[k * hw + p] = static_cast<T>(s.mask.values[p]);
      }
    }
    return out;
  }

 private:
  std::vector<Sample> samples_;
  std::vector<Split> splits_;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
};

}  // namespace mmsense::data
