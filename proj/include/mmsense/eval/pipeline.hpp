#pragma once

#include <algorithm>
#include <vector>

#include "mmsense/data/dataset.hpp"
#include "mmsense/eval/evaluator.hpp"
#include "mmsense/model/mmsense_af.hpp"

namespace mmsense::eval {

struct FramePrediction {
  std::size_t index = 0;
  BinaryMask mask;
  Decision decision;
};

/// Infer-mode predictions and decisions for the samples `idx` of `ds`.
template <class T>
std::vector<FramePrediction> evaluate_frames(model::MmSenseAF<T>& net, const data::Dataset& ds,
                                             const std::vector<std::size_t>& idx, std::size_t batch_size = 64,
                                             double threshold = kThreshold, double radius = kAgreementRadiusPx) {
  std::vector<FramePrediction> out;
  out.reserve(idx.size());
  const std::size_t hw = ds.height() * ds.width();
  for (std::size_t b = 0; b < idx.size(); b += batch_size) {
    std::vector<std::size_t> chunk(idx.begin() + static_cast<std::ptrdiff_t>(b),
                                   idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), b + batch_size)));
    const auto batch = ds.batch<T>(chunk);
    const auto prob = net.forward(batch.radar, batch.depth, ad::Mode::infer);
    auto p = prob.data();
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      FramePrediction f;
      f.index = chunk[k];
      f.mask = BinaryMask(ds.height(), ds.width());
      for (std::size_t i = 0; i < hw; ++i) f.mask.values[i] = static_cast<double>(p[k * hw + i]) >= threshold;
      f.decision = decide(f.mask, ds[chunk[k]], radius);
      out.push_back(std::move(f));
    }
  }
  return out;
}

inline std::vector<Decision> decisions_of(const std::vector<FramePrediction>& frames) {
  std::vector<Decision> d;
  d.reserve(frames.size());
  for (const auto& f : frames) d.push_back(f.decision);
  return d;
}

}  // namespace mmsense::eval
