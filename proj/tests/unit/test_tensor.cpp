#include <gtest/gtest.h>

#include <cmath>

#include "mmsense/diagnostics.hpp"
#include "mmsense/tensor/engine.hpp"
#include "op_checks.hpp"
#include "oracles.hpp"

using namespace mmsense;
using TD = ad::Tensor<double>;

TEST(Ops, MatchDirectOracles) {
  for (const auto& c : oracle::run_op_checks(11, 8)) EXPECT_LT(c.max_abs_error, 1e-9) << c.op;
}

TEST(Conv, SamePaddingSplitsSmallerHalfFirst) {
  const auto g = ad::axis_geometry(5, 4, 1, 1, ad::Padding::same);
  EXPECT_EQ(g.out, 5u);
  EXPECT_EQ(g.pad_before, 1);
  const auto s = ad::axis_geometry(7, 3, 2, 1, ad::Padding::same);
  EXPECT_EQ(s.out, 4u);
  EXPECT_EQ(s.pad_before, 1);
  const auto v = ad::axis_geometry(7, 3, 2, 2, ad::Padding::valid);
  EXPECT_EQ(v.out, 2u);
}

TEST(Conv, IdentityKernelReproducesInput) {
  CounterRng r(3);
  TD x = diag::random_tensor({1, 4, 5, 2}, r);
  TD k({1, 1, 2, 2});
  k.at(0, 0, 0, 0) = 1.0;
  k.at(0, 0, 1, 1) = 1.0;
  const TD y = ad::conv2d(x, k);
  EXPECT_EQ(y.values(), x.values());
}

TEST(Conv, ShapeErrors) {
  EXPECT_THROW(ad::conv2d(TD({1, 3, 3, 2}), TD({3, 3, 3, 1})), ShapeError);
  EXPECT_THROW(ad::conv2d(TD({1, 2, 2, 1}), TD({3, 3, 1, 1}), {{1, 1}, ad::Padding::valid, {1, 1}}), ShapeError);
  EXPECT_THROW(ad::depthwise_conv2d(TD({1, 3, 3, 2}), TD({3, 3, 3})), ShapeError);
  EXPECT_THROW(ad::add(TD({2, 3}), TD({3, 2})), ShapeError);
}

TEST(BatchNorm, TrainModeMoments) {
  CounterRng r(5);
  TD x = diag::random_tensor({64, 4, 4, 8}, r, -3.0, 7.0);
  const TD y = ad::batch_norm(x, TD({8}, 1.0), TD({8}, 0.0), TD({8}, 0.0), TD({8}, 1.0), ad::Mode::train);
  const std::size_t m = y.numel() / 8;
  for (std::size_t c = 0; c < 8; ++c) {
    double mu = 0.0, var = 0.0;
    for (std::size_t i = 0; i < m; ++i) mu += y[i * 8 + c];
    mu /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) var += std::pow(y[i * 8 + c] - mu, 2);
    var /= static_cast<double>(m);
    EXPECT_LT(std::abs(mu), 1e-6);
    EXPECT_LT(std::abs(var - 1.0), 1e-3);
  }
}

TEST(BatchNorm, AlreadyNormalizedChannelIsUnchanged) {
  const TD x({4, 1}, std::vector<double>{-1, 1, -1, 1});
  const TD y = ad::batch_norm(x, TD({1}, 1.0), TD({1}, 0.0), TD({1}, 0.0), TD({1}, 1.0), ad::Mode::train);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y[i], x[i], 1e-5);
}

TEST(BatchNorm, RunningStatisticsUpdateOnlyInTrainMode) {
  const TD x({2, 1}, std::vector<double>{1.0, 3.0});
  TD rm({1}, 0.0), rv({1}, 1.0);
  ad::batch_norm(x, TD({1}, 1.0), TD({1}, 0.0), rm, rv, ad::Mode::infer);
  EXPECT_EQ(rm[0], 0.0);
  ad::batch_norm(x, TD({1}, 1.0), TD({1}, 0.0), rm, rv, ad::Mode::train);
  EXPECT_NEAR(rm[0], 0.01 * 2.0, 1e-12);
  EXPECT_NEAR(rv[0], 0.99 + 0.01 * 1.0, 1e-12);
}

TEST(Dropout, SurvivorFractionAndScaling) {
  const TD x({1000000}, 1.0);
  const TD y = ad::dropout(x, 0.3, ad::Mode::train, CounterRng(17));
  std::size_t kept = 0;
  for (double v : y.values()) {
    if (v != 0.0) {
      ++kept;
      EXPECT_NEAR(v, 1.0 / 0.7, 1e-12);
    }
  }
  EXPECT_NEAR(static_cast<double>(kept) / 1e6, 0.7, 0.005);
}

TEST(Dropout, InferModeIsIdentityAndStreamsAreReproducible) {
  CounterRng r(1);
  const TD x = diag::random_tensor({100}, r);
  EXPECT_EQ(ad::dropout(x, 0.3, ad::Mode::infer, CounterRng(2)).values(), x.values());
  EXPECT_EQ(ad::dropout(x, 0.3, ad::Mode::train, CounterRng(2)).values(),
            ad::dropout(x, 0.3, ad::Mode::train, CounterRng(2)).values());
  EXPECT_NE(ad::dropout(x, 0.3, ad::Mode::train, CounterRng(2)).values(),
            ad::dropout(x, 0.3, ad::Mode::train, CounterRng(3)).values());
}

TEST(Loss, BceClampsSaturatedPredictions) {
  const TD p({2}, std::vector<double>{0.0, 1.0}), y({2}, std::vector<double>{1.0, 0.0});
  const double l = ad::bce_loss(p, y).item();
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_NEAR(l, -std::log(1e-7), 1e-6);
  EXPECT_NEAR(ad::bce_loss(TD({1}, 0.5), TD({1}, 1.0)).item(), std::log(2.0), 1e-12);
}

TEST(Autograd, TapeIsSingleUse) {
  ad::Tape<double> tape;
  TD x({2}, 1.0, true);
  TD loss;
  {
    ad::TapeScope<double> scope(tape);
    loss = ad::sum(ad::square(x));
  }
  ad::backward(loss, tape);
  EXPECT_EQ(x.grad()[0], 2.0);
  EXPECT_THROW(ad::backward(loss, tape), ConfigError);
  EXPECT_THROW(ad::backward(TD({2}, 1.0), tape), ConfigError);
}

TEST(Autograd, NonFiniteForwardRaises) {
  EXPECT_THROW(ad::mul(TD({1}, INFINITY), TD({1}, 0.0)), NumericError);
}

TEST(Gradcheck, EveryOperatorAndTheTinyModel) {
  diag::SuiteOptions opt;
  for (const auto& r : diag::run_suite(opt)) {
    EXPECT_TRUE(r.passed) << r.name << " rel " << r.max_rel_error;
    EXPECT_LT(r.max_rel_error, 1e-4) << r.name;
  }
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  TD p({3}, std::vector<double>{1.0, 1.0, 1.0}, true);
  p.grad()[0] = 5.0;
  p.grad()[1] = -0.2;
  p.grad()[2] = 1e3;
  ad::AdamState<double> s;
  std::vector<TD> ps{p};
  ad::adam_step<double>(ps, s);
  EXPECT_NEAR(p[0], 1.0 - 1e-3, 1e-9);
  EXPECT_NEAR(p[1], 1.0 + 1e-3, 1e-9);
  EXPECT_NEAR(p[2], 1.0 - 1e-3, 1e-9);
}

TEST(Adam, MatchesScalarRecurrence) {
  CounterRng r(9);
  oracle::Vec g(25);
  for (auto& v : g) v = r.uniform(-2.0, 2.0);
  TD p({1}, 0.3, true);
  std::vector<TD> ps{p};
  ad::AdamState<double> s;
  s.lr = 0.01;
  for (double gi : g) {
    p.grad()[0] = gi;
    ad::adam_step<double>(ps, s);
  }
  EXPECT_NEAR(p[0], oracle::adam_scalar(0.3, g, 0.01), 1e-13);
  EXPECT_EQ(s.t, 25);
}

TEST(Plateau, StrictImprovementKeepsRate) {
  ad::PlateauSchedule s;
  for (int e = 0; e < 20; ++e) ad::plateau_step(s, 1.0 - 0.01 * e);
  EXPECT_EQ(s.current_lr, 1e-3);
}

TEST(Plateau, FlatMetricHalvesEveryPatienceEpochsDownToFloor) {
  ad::PlateauSchedule s;
  // Epoch 0 sets the best value; each block of 5 flat epochs then halves.
  std::vector<double> trace;
  for (int e = 0; e < 80; ++e) {
    ad::plateau_step(s, 0.5);
    trace.push_back(s.current_lr);
  }
  for (int e = 0; e < 80; ++e) {
    const int halvings = e / 5;
    const double expected = std::max(1e-3 * std::pow(0.5, halvings), 1e-6);
    EXPECT_EQ(trace[static_cast<std::size_t>(e)], expected) << "epoch " << e;
  }
}

TEST(Plateau, FloorIsSticky) {
  ad::PlateauSchedule s;
  s.current_lr = 1e-6;
  for (int e = 0; e < 30; ++e) ad::plateau_step(s, 1.0);
  EXPECT_EQ(s.current_lr, 1e-6);
}

TEST(Rng, SplitStreamsAreIndependentAndPure) {
  const CounterRng a(42);
  CounterRng x = a.split("x"), y = a.split("x"), z = a.split("z");
  EXPECT_EQ(x.next_u64(), y.next_u64());
  EXPECT_NE(x.next_u64(), z.next_u64());
  CounterRng n(1);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double v = n.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / 1e5, 0.0, 0.01);
  EXPECT_NEAR(s2 / 1e5, 1.0, 0.02);
}
