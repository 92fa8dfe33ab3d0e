#include <gtest/gtest.h>
#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "mmsense/cli/commands.hpp"
#include "tmpdir.hpp"

using namespace mmsense;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

int run_binary(const std::string& args) {
  const std::string cmd = std::string(MMSENSE_CLI_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST(Cli, EndToEndPipeline) {
  TempDir dir("pipeline");
  std::ostringstream out;

  cli::SimulateOptions so;
  so.out = dir / "data";
  so.count = 20;
  so.seed = 3;
  so.regime = "2P2";
  ASSERT_EQ(cli::simulate(so, out), 0);
  EXPECT_TRUE(fs::exists(dir / "data" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "data" / "resolved_config.json"));

  cli::TrainOptions to;
  to.data = so.out;
  to.out = dir / "run";
  to.width_divisor = 8;
  to.batch_size = 8;
  to.max_steps = 3;
  to.epochs = 2;
  ASSERT_EQ(cli::train(to, out), 0);
  const fs::path ckpt = dir / "run" / "checkpoint.mmaf";
  ASSERT_TRUE(fs::exists(ckpt));
  // 16 training samples at batch 8: two steps, one epoch record, one step.
  EXPECT_EQ(count_lines(dir / "run" / "train_log.jsonl"), 4u);

  to.max_steps.reset();
  to.resume = true;
  ASSERT_EQ(cli::train(to, out), 0);
  EXPECT_GT(count_lines(dir / "run" / "train_log.jsonl"), 4u);
  const auto resolved = cli::read_json_file(dir / "run" / "resolved_config.json");
  EXPECT_EQ(resolved["model"]["width_divisor"], 8);

  cli::EvalOptions eo;
  eo.data = so.out;
  eo.checkpoint = ckpt;
  eo.out = dir / "eval";
  eo.split = "all";
  eo.overlays = 2;
  ASSERT_EQ(cli::evaluate(eo, out), 0);
  const auto report = cli::read_json_file(dir / "eval" / "report.json");
  EXPECT_EQ(report["frames"].size(), 20u);
  EXPECT_EQ(report["regimes"]["all"]["counts"]["TP"].get<int>() + report["regimes"]["all"]["counts"]["FP"].get<int>() +
                report["regimes"]["all"]["counts"]["TN"].get<int>() + report["regimes"]["all"]["counts"]["FN"].get<int>(),
            20);
  std::size_t overlays = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "eval" / "overlays")) ++overlays;
  EXPECT_EQ(overlays, 2u);

  cli::InferOptions io;
  io.data = so.out;
  io.checkpoint = ckpt;
  io.sample = report["frames"][0]["id"].get<std::string>();
  io.out = dir / "prob.f32";
  io.overlay = dir / "one.ppm";
  ASSERT_EQ(cli::infer(io, out), 0);
  EXPECT_TRUE(fs::exists(io.out));
  EXPECT_TRUE(fs::exists(*io.overlay));
  io.sample = "missing";
  EXPECT_THROW(cli::infer(io, out), DataError);

  cli::InspectOptions no;
  no.checkpoint = ckpt;
  std::ostringstream text;
  ASSERT_EQ(cli::inspect(no, text), 0);
  EXPECT_NE(text.str().find("radar.latent"), std::string::npos);
  EXPECT_NE(text.str().find("learnable parameters"), std::string::npos);
}

TEST(Cli, ConfigFileSectionsAreChecked) {
  TempDir dir("config");
  std::ostringstream out;
  cli::SimulateOptions so;
  so.out = dir / "data";
  so.count = 4;
  ASSERT_EQ(cli::simulate(so, out), 0);
  std::ofstream(dir / "bad.json") << R"({"optimizer": {}})";
  cli::TrainOptions to;
  to.data = so.out;
  to.out = dir / "run";
  to.config = dir / "bad.json";
  EXPECT_THROW(cli::train(to, out), ConfigError);
  std::ofstream(dir / "bad_model.json") << R"({"model": {"channels": 3}})";
  to.config = dir / "bad_model.json";
  EXPECT_THROW(cli::train(to, out), ConfigError);
}

TEST(Cli, ExitCodes) {
  TempDir dir("exit");
  const std::string data = (dir / "data").string();
  EXPECT_EQ(run_binary("--help"), 0);
  EXPECT_EQ(run_binary("simulate --count 6 --seed 1 --out " + data), 0);
  EXPECT_EQ(run_binary("simulate --bogus"), 2);
  EXPECT_EQ(run_binary("simulate --out " + data + " --split 0.5 0.5 0.5"), 2);
  EXPECT_EQ(run_binary("simulate --out " + data + " --regime 3P"), 2);
  EXPECT_EQ(run_binary("train --data " + (dir / "nowhere").string() + " --out " + (dir / "run").string()), 3);
  EXPECT_EQ(run_binary("train --data " + data + " --out " + (dir / "run").string() + " --modality sonar"), 2);
  EXPECT_EQ(run_binary("inspect --width-divisor 8"), 0);
  EXPECT_EQ(run_binary("inspect --height 40"), 2);
  EXPECT_EQ(run_binary("train --data " + data + " --out " + (dir / "run").string() +
                       " --width-divisor 8 --batch-size 4 --max-steps 1"),
            0);
}
