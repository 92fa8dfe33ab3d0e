#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mmsense/preprocess.hpp"
#include "oracles.hpp"

using namespace mmsense;
using namespace mmsense::preprocess;

namespace {

DepthFrame frame(std::size_t h, std::size_t w, std::vector<float> v) {
  DepthFrame f(h, w);
  f.values = std::move(v);
  return f;
}

DepthFrame random_frame(std::size_t h, std::size_t w, std::uint64_t seed, float lo = 0.5f, float hi = 6.0f) {
  CounterRng r(seed);
  DepthFrame f(h, w);
  for (auto& v : f.values) v = static_cast<float>(r.uniform(lo, hi));
  return f;
}

}  // namespace

TEST(HoleFill, ZerosTakeTheSmallestValidDepth) {
  const auto out = fill_depth_holes(frame(2, 2, {0, 2, 3, 4}));
  EXPECT_EQ(out.values, (std::vector<float>{2, 2, 3, 4}));
  EXPECT_FALSE(out.degenerate);
}

TEST(HoleFill, FrameWithoutHolesIsUnchanged) {
  const auto in = random_frame(4, 5, 1);
  EXPECT_EQ(fill_depth_holes(in).values, in.values);
}

TEST(HoleFill, AllZeroFrameIsFlagged) {
  const auto out = fill_depth_holes(DepthFrame(3, 3));
  EXPECT_TRUE(out.degenerate);
  EXPECT_EQ(out.values, std::vector<float>(9, 0.0f));
}

TEST(Standardize, TwoValues) {
  const auto out = standardize_depth(frame(1, 2, {1, 3}));
  EXPECT_EQ(out.values, (std::vector<float>{-1, 1}));
}

TEST(Standardize, ConstantFrameIsFlagged) {
  const auto out = standardize_depth(DepthFrame(2, 3, 4.0f));
  EXPECT_TRUE(out.degenerate);
  EXPECT_EQ(out.values, std::vector<float>(6, 0.0f));
}

TEST(Standardize, RandomFrameMoments) {
  const auto out = standardize_depth(random_frame(32, 64, 7));
  double mean = 0.0, peak = 0.0;
  for (float v : out.values) mean += v;
  mean /= static_cast<double>(out.values.size());
  for (float v : out.values) peak = std::max(peak, std::abs(static_cast<double>(v)));
  EXPECT_NEAR(mean, 0.0, 1e-6);
  EXPECT_NEAR(peak, 1.0, 1e-6);
}

TEST(Standardize, IdempotentOnStandardizedFrames) {
  const auto once = standardize_depth(random_frame(16, 16, 8));
  const auto twice = standardize_depth(once);
  for (std::size_t i = 0; i < once.values.size(); ++i) EXPECT_NEAR(once.values[i], twice.values[i], 1e-6);
}

TEST(RadarNormalize, DividesByPeak) {
  RadarTrace t;
  t.samples[0] = 0.5f;
  t.samples[1] = 1.0f;
  t.samples[2] = 2.0f;
  const auto out = normalize_radar(t);
  EXPECT_EQ(out.samples[0], 0.25f);
  EXPECT_EQ(out.samples[1], 0.5f);
  EXPECT_EQ(out.samples[2], 1.0f);
}

TEST(RadarNormalize, NormalizedTraceUnchangedAndZeroTraceFlagged) {
  RadarTrace t;
  CounterRng r(2);
  for (auto& v : t.samples) v = static_cast<float>(r.uniform(0.0, 1.0));
  t.samples[17] = 1.0f;
  EXPECT_EQ(normalize_radar(t).samples, t.samples);
  const auto z = normalize_radar(RadarTrace{});
  EXPECT_TRUE(z.degenerate);
}

TEST(RadarNormalize, NonNegativeTraceLandsInUnitInterval) {
  RadarTrace t;
  CounterRng r(3);
  for (auto& v : t.samples) v = static_cast<float>(r.uniform(0.0, 40.0));
  const auto out = normalize_radar(t);
  EXPECT_GE(*std::min_element(out.samples.begin(), out.samples.end()), 0.0f);
  EXPECT_EQ(*std::max_element(out.samples.begin(), out.samples.end()), 1.0f);
}

TEST(Downsample, ConstantFrameStaysConstant) {
  const auto out = downsample_depth(DepthFrame(480, 640, 2.5f), 48, 64);
  for (float v : out.values) EXPECT_NEAR(v, 2.5f, 1e-6);
}

TEST(Downsample, TwoByTwoBlocksPoolExactly) {
  DepthFrame f(96, 128);
  for (std::size_t r = 0; r < 96; ++r)
    for (std::size_t c = 0; c < 128; ++c) f.at(r, c) = static_cast<float>((r / 2) * 64 + c / 2);
  const auto out = downsample_depth(f, 48, 64);
  for (std::size_t r = 0; r < 48; ++r)
    for (std::size_t c = 0; c < 64; ++c) EXPECT_EQ(out.at(r, c), static_cast<float>(r * 64 + c));
}

TEST(Downsample, MatchesPoolingOracle) {
  const auto f = random_frame(480, 640, 11);
  const oracle::Vec src(f.values.begin(), f.values.end());
  const auto ref = oracle::pool(src, 480, 640, 10, 10);
  const auto out = downsample_depth(f, 48, 64);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_LT(std::abs(out.values[i] - ref[i]), 1e-6);
}

TEST(Downsample, LargerTargetIsRejected) {
  EXPECT_THROW(downsample_depth(DepthFrame(32, 64), 48, 64), ConfigError);
}

TEST(Pipeline, OrderIsDownsampleFillStandardize) {
  DepthFrame f(64, 128, 3.0f);
  for (std::size_t c = 0; c < 64; ++c) f.at(0, c) = 5.0f;
  const auto out = prepare_depth(f, 32, 64);
  auto manual = standardize_depth(fill_depth_holes(downsample_depth(f, 32, 64)));
  EXPECT_EQ(out.values, manual.values);
}
