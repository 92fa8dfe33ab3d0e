#include <gtest/gtest.h>

#include "mmsense/eval/evaluator.hpp"
#include "mmsense/eval/overlay.hpp"
#include "metric_checks.hpp"

using namespace mmsense;
using namespace mmsense::eval;

namespace {

BinaryMask square(std::size_t h, std::size_t w, std::size_t r, std::size_t c) {
  BinaryMask m(h, w);
  for (std::size_t i = r; i < r + 2; ++i)
    for (std::size_t j = c; j < c + 2; ++j) m.at(i, j) = 1;
  return m;
}

std::vector<Decision> with_outcomes(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  std::vector<Decision> d;
  for (auto [o, n] : {std::pair{Outcome::tp, tp}, {Outcome::fp, fp}, {Outcome::tn, tn}, {Outcome::fn, fn}})
    for (std::size_t i = 0; i < n; ++i) {
      Decision x;
      x.outcome = o;
      d.push_back(x);
    }
  return d;
}

}  // namespace

TEST(Report, WorkedConfusionCounts) {
  const auto r = report(with_outcomes(3, 1, 5, 1));
  EXPECT_DOUBLE_EQ(*r.accuracy, 80.0);
  EXPECT_DOUBLE_EQ(*r.sensitivity, 75.0);
  EXPECT_NEAR(*r.specificity, 83.333, 1e-3);
  EXPECT_DOUBLE_EQ(*r.precision, 75.0);
}

TEST(Report, ZeroDenominatorsAreAbsent) {
  const auto r = report(with_outcomes(0, 0, 10, 0));
  EXPECT_DOUBLE_EQ(*r.accuracy, 100.0);
  EXPECT_FALSE(r.sensitivity.has_value());
  EXPECT_FALSE(r.precision.has_value());
  const auto j = to_json(r);
  EXPECT_TRUE(j["sensitivity"].is_null());
  EXPECT_FALSE(report(std::vector<Decision>{}).accuracy.has_value());
}

TEST(Report, JsonColumnOrder) {
  const auto j = to_json(report(with_outcomes(1, 1, 1, 1)));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"accuracy", "sensitivity", "specificity", "precision", "counts"}));
}

TEST(Report, GroupsByRegime) {
  auto d = with_outcomes(2, 0, 2, 0);
  d[0].regime = Regime::two_person_joint;
  const auto groups = report_by_regime(d);
  EXPECT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups.at("all").counts.total(), 4u);
  EXPECT_EQ(groups.at(to_string(Regime::two_person_joint)).counts.tp, 1u);
}

TEST(Decide, AgreementRadius) {
  const auto gt = square(32, 64, 10, 10);
  EXPECT_EQ(decide(square(32, 64, 10, 16), gt).outcome, Outcome::fn);
  EXPECT_EQ(decide(square(32, 64, 13, 14), gt).outcome, Outcome::tp);
  EXPECT_DOUBLE_EQ(*decide(square(32, 64, 13, 14), gt).distance, 5.0);
  EXPECT_EQ(decide(BinaryMask(32, 64), gt).outcome, Outcome::fn);
  EXPECT_EQ(decide(BinaryMask(32, 64), BinaryMask(32, 64)).outcome, Outcome::tn);
  EXPECT_EQ(decide(gt, BinaryMask(32, 64)).outcome, Outcome::fp);
}

TEST(Decide, NearerDecoyTurnsHitIntoMiss) {
  const auto gt = square(32, 64, 10, 10);
  const auto pred = square(32, 64, 10, 13);
  const PixelPoint pc{10.5, 13.5};
  EXPECT_EQ(decide(pred, gt, true, 5.0, {}).outcome, Outcome::tp);
  EXPECT_EQ(decide(pred, gt, true, 5.0, {{pc.row, pc.col + 1.0}}).outcome, Outcome::fn);
  EXPECT_EQ(decide(pred, gt, true, 5.0, {{pc.row, pc.col + 10.0}}).outcome, Outcome::tp);
}

TEST(Decide, PositiveFrameWithEmptyMaskIsMiss) {
  const auto d = decide(square(8, 8, 1, 1), BinaryMask(8, 8), true, 5.0, {});
  EXPECT_EQ(d.outcome, Outcome::fn);
  EXPECT_FALSE(d.distance.has_value());
}

TEST(Decide, ExhaustiveTable) {
  const auto c = oracle::decide_table_check();
  EXPECT_EQ(c.cases, 32u);
  EXPECT_EQ(c.mismatches, 0u);
}

TEST(Decide, BruteForceRecount) {
  for (std::uint64_t seed : {1, 2, 3}) EXPECT_EQ(oracle::recount_check(seed, 1000).mismatches, 0u);
}

TEST(Decide, ShapeMismatchIsRejected) {
  EXPECT_THROW(decide(BinaryMask(8, 8), BinaryMask(8, 9)), ShapeError);
  EXPECT_THROW(centroid(BinaryMask(2, 2)), DataError);
}

TEST(Binarize, ThresholdIsInclusive) {
  const ad::Tensor<float> p({1, 1, 3, 1}, std::vector<float>{0.49f, 0.5f, 0.9f});
  EXPECT_EQ(binarize(p).values, (std::vector<std::uint8_t>{0, 1, 1}));
  EXPECT_THROW(binarize(ad::Tensor<float>({2, 1, 3, 1})), ShapeError);
}

TEST(Overlay, HeaderAndColours) {
  DepthFrame depth(2, 3);
  depth.values = {1, 2, 3, 4, 5, 6};
  BinaryMask pred(2, 3), gt(2, 3);
  pred.values = {1, 1, 0, 0, 0, 0};
  gt.values = {0, 1, 1, 0, 0, 0};
  const auto ppm = overlay_ppm(depth, pred, gt);
  const std::string header = "P6\n3 2\n255\n";
  ASSERT_EQ(ppm.size(), header.size() + 18);
  EXPECT_EQ(std::string(ppm.begin(), ppm.begin() + static_cast<std::ptrdiff_t>(header.size())), header);
  const auto px = [&](std::size_t i) {
    const std::size_t o = header.size() + 3 * i;
    return std::array<int, 3>{ppm[o], ppm[o + 1], ppm[o + 2]};
  };
  EXPECT_EQ(px(0), (std::array<int, 3>{255, 0, 0}));
  EXPECT_EQ(px(1), (std::array<int, 3>{0, 255, 0}));
  EXPECT_EQ(px(2), (std::array<int, 3>{0, 0, 255}));
  EXPECT_EQ(px(3)[0], px(3)[1]);
  EXPECT_GT(px(3)[0], px(5)[0]);
}

TEST(Overlay, DisjointMasksHaveNoGreen) {
  DepthFrame depth(4, 4, 2.0f);
  const auto ppm = overlay_ppm(depth, square(4, 4, 0, 0), square(4, 4, 2, 2));
  const std::size_t off = std::string("P6\n4 4\n255\n").size();
  for (std::size_t i = off; i < ppm.size(); i += 3)
    EXPECT_FALSE(ppm[i] == 0 && ppm[i + 1] == 255 && ppm[i + 2] == 0);
  EXPECT_THROW(overlay_ppm(depth, BinaryMask(3, 4), BinaryMask(4, 4)), ShapeError);
}
