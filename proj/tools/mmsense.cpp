#include <iostream>

#include "CLI11.hpp"
#include "mmsense/cli/commands.hpp"

using namespace mmsense;

int main(int argc, char** argv) {
  CLI::App app{"mmsense: radar + depth concealed-object segmentation"};
  app.require_subcommand(1);

  cli::SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "generate a synthetic dataset");
  s->add_option("--out", sim.out, "dataset directory")->required();
  s->add_option("--scene", sim.scene, "scene distribution JSON")->check(CLI::ExistingFile);
  s->add_option("--count", sim.count, "number of frames")->capture_default_str();
  s->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  s->add_option("--split", sim.split, "train/val/test fractions")->expected(3)->capture_default_str();
  s->add_option("--regime", sim.regime, "single regime: 1P, 2P1 or 2P2");

  cli::TrainOptions tr;
  auto* t = app.add_subcommand("train", "train a model on a dataset");
  t->add_option("--data", tr.data, "dataset directory")->required();
  t->add_option("--out", tr.out, "run directory (checkpoint, logs)")->required();
  t->add_option("--config", tr.config, "JSON with optional model/train sections")->check(CLI::ExistingFile);
  t->add_option("--modality", tr.modality, "fused, radar_only or depth_only");
  t->add_option("--width-divisor", tr.width_divisor, "divide every channel count by this factor");
  t->add_option("--epochs", tr.epochs, "maximum epochs");
  t->add_option("--batch-size", tr.batch_size, "minibatch size");
  t->add_option("--seed", tr.seed, "batching and dropout seed");
  t->add_option("--init-seed", tr.init_seed, "parameter initialization seed")->capture_default_str();
  t->add_option("--max-steps", tr.max_steps, "pause after this many optimizer steps");
  t->add_flag("--resume", tr.resume, "continue from <out>/checkpoint.mmaf");

  cli::EvalOptions ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  e->add_option("--data", ev.data, "dataset directory")->required();
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  e->add_option("--out", ev.out, "report directory")->required();
  e->add_option("--split", ev.split, "train, val, test or all")->capture_default_str();
  e->add_option("--overlays", ev.overlays, "write PPM overlays for the first N frames")->capture_default_str();
  e->add_option("--threshold", ev.threshold, "probability threshold")->capture_default_str();
  e->add_option("--radius", ev.radius, "centroid agreement radius in pixels")->capture_default_str();

  cli::InferOptions in;
  auto* i = app.add_subcommand("infer", "predict the probability mask of one sample");
  i->add_option("--data", in.data, "dataset directory")->required();
  i->add_option("--checkpoint", in.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  i->add_option("--sample", in.sample, "sample id")->required();
  i->add_option("--out", in.out, "output probability blob")->required();
  i->add_option("--overlay", in.overlay, "also write a PPM overlay here");

  cli::InspectOptions ins;
  auto* n = app.add_subcommand("inspect", "print the layer and parameter shape registry");
  n->add_option("--height", ins.height, "depth rows (32 or 48)")->capture_default_str();
  n->add_option("--width", ins.width, "depth columns (64)")->capture_default_str();
  n->add_option("--width-divisor", ins.width_divisor, "channel divisor")->capture_default_str();
  n->add_option("--checkpoint", ins.checkpoint, "read the config from a checkpoint")->check(CLI::ExistingFile);

  cli::GradcheckOptions gc;
  auto* g = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  g->add_option("--instances", gc.instances, "random instances per operator")->capture_default_str();
  g->add_option("--seed", gc.seed, "seed")->capture_default_str();
  g->add_flag("!--no-model", gc.model, "skip the full-model check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : cli::kConfig;
  }

  if (*s) return cli::guarded([&] { return cli::simulate(sim); });
  if (*t) return cli::guarded([&] { return cli::train(tr); });
  if (*e) return cli::guarded([&] { return cli::evaluate(ev); });
  if (*i) return cli::guarded([&] { return cli::infer(in); });
  if (*n) return cli::guarded([&] { return cli::inspect(ins); });
  if (*g) return cli::guarded([&] { return cli::gradcheck(gc); });
  return cli::kConfig;
}
