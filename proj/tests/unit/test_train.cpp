#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mmsense/sim/dataset.hpp"
#include "mmsense/train/trainer.hpp"
#include "tmpdir.hpp"

using namespace mmsense;
using testing_support::TempDir;

namespace {

data::Dataset synthetic(std::size_t count, std::uint64_t seed) {
  sim::SceneDistribution d;
  std::vector<Sample> s;
  for (auto& f : sim::make_dataset(d, count, seed)) s.push_back(std::move(f.sample));
  return data::Dataset(std::move(s), d.height, d.width);
}

model::MmSenseAF<float> small_net(std::uint64_t seed = 7) {
  model::MmSenseAF<float> net(model::ModelConfig::spad().with_divisor(8));
  net.init_params(CounterRng(seed));
  return net;
}

std::vector<std::size_t> iota(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> v(hi - lo);
  std::iota(v.begin(), v.end(), lo);
  return v;
}

}  // namespace

TEST(Trainer, ShortFinalBatchIsKept) {
  const auto ds = synthetic(130, 1);
  auto net = small_net();
  train::TrainConfig cfg;
  cfg.max_epochs = 1;
  train::Trainer<float> t(net, ds, iota(0, 130), {}, cfg);
  EXPECT_EQ(t.steps_per_epoch(), 3u);
  EXPECT_TRUE(t.run());
  EXPECT_EQ(t.log().steps.size(), 3u);
  ASSERT_EQ(t.log().epochs.size(), 1u);
  EXPECT_FALSE(t.log().epochs[0].val_loss.has_value());
}

TEST(Trainer, FixedBatchLossFalls) {
  const auto ds = synthetic(8, 2);
  auto net = small_net();
  train::TrainConfig cfg;
  train::Trainer<float> t(net, ds, iota(0, 8), {}, cfg);
  std::vector<double> loss;
  for (int s = 0; s < 100; ++s) loss.push_back(t.step(iota(0, 8)));
  // Window means must fall monotonically; single steps are noisy under dropout.
  double prev = INFINITY;
  for (std::size_t w = 0; w < 100; w += 20) {
    const double m = std::accumulate(loss.begin() + static_cast<std::ptrdiff_t>(w),
                                     loss.begin() + static_cast<std::ptrdiff_t>(w + 20), 0.0) / 20.0;
    EXPECT_LT(m, prev) << "window " << w;
    prev = m;
  }
}

TEST(Trainer, SameSeedTracesAreBitwiseEqual) {
  const auto ds = synthetic(24, 3);
  auto trace = [&](std::uint64_t seed) {
    auto net = small_net();
    train::TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.max_steps = 10;
    cfg.seed = seed;
    train::Trainer<float> t(net, ds, iota(0, 20), iota(20, 24), cfg);
    t.run();
    return t.log().loss_trace();
  };
  const auto a = trace(5), b = trace(5), c = trace(6);
  ASSERT_EQ(a.size(), 10u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Trainer, ResumeReplaysTheUninterruptedRun) {
  const auto ds = synthetic(24, 4);
  TempDir dir("resume");
  train::TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.seed = 9;
  cfg.max_epochs = 4;

  auto full_net = small_net();
  train::Trainer<float> full(full_net, ds, iota(0, 20), iota(20, 24), cfg);
  full.run();
  const auto reference = full.log().loss_trace();
  ASSERT_EQ(reference.size(), 12u);

  cfg.checkpoint_path = dir / "ckpt.mmaf";
  cfg.max_steps = 5;
  auto first_net = small_net();
  train::Trainer<float> first(first_net, ds, iota(0, 20), iota(20, 24), cfg);
  EXPECT_FALSE(first.run());
  auto trace = first.log().loss_trace();

  auto second_net = small_net(99);
  auto state = data::load_checkpoint(cfg.checkpoint_path, second_net);
  EXPECT_EQ(state.progress.global_step, 5);
  cfg.max_steps = 0;
  train::Trainer<float> second(second_net, ds, iota(0, 20), iota(20, 24), cfg);
  second.resume(std::move(state));
  EXPECT_TRUE(second.run());
  const auto rest = second.log().loss_trace();
  trace.insert(trace.end(), rest.begin(), rest.end());
  EXPECT_EQ(trace, reference);

  for (std::size_t i = 0; i < full_net.params().size(); ++i) {
    const auto a = full_net.params().tensor(i).data(), b = second_net.params().tensor(i).data();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << full_net.params().info(i).name;
  }
}

TEST(Trainer, NumericFailureNamesTheStep) {
  const auto ds = synthetic(8, 5);
  auto net = small_net();
  train::TrainConfig cfg;
  train::Trainer<float> t(net, ds, iota(0, 8), {}, cfg);
  t.step(iota(0, 8));
  t.step(iota(0, 8));
  net.params()["head.conv1x1.w"][0] = NAN;
  try {
    t.step(iota(0, 8));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos) << e.what();
  }
}

TEST(Trainer, EarlyStopOnceFlatAtTheFloor) {
  const auto ds = synthetic(8, 6);
  auto net = small_net();
  train::TrainConfig cfg;
  cfg.initial_lr = 1e-6;
  cfg.min_lr = 1e-6;
  cfg.plateau_min_delta = 10.0;
  cfg.early_stop_window = 2;
  cfg.max_epochs = 50;
  train::Trainer<float> t(net, ds, iota(0, 8), {}, cfg);
  EXPECT_TRUE(t.run());
  EXPECT_EQ(t.log().epochs.size(), 3u);
}

TEST(Trainer, EmptyTrainingSplitIsRejected) {
  const auto ds = synthetic(4, 7);
  auto net = small_net();
  EXPECT_THROW(train::Trainer<float>(net, ds, {}, {}, train::TrainConfig{}), DataError);
}

TEST(TrainConfig, JsonOverlayAndValidation) {
  const auto c = train::train_config_from_json(nlohmann::json{{"batch_size", 16}, {"max_epochs", 3}});
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_EQ(c.max_epochs, 3u);
  EXPECT_EQ(c.initial_lr, 1e-3);
  EXPECT_THROW(train::train_config_from_json(nlohmann::json{{"learning_rate", 0.1}}), ConfigError);
  EXPECT_THROW(train::train_config_from_json(nlohmann::json{{"batch_size", 0}}), ConfigError);
  EXPECT_THROW(train::train_config_from_json(nlohmann::json{{"plateau_factor", 1.5}}), ConfigError);
}
