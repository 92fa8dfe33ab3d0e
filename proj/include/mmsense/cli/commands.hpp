#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmsense/data/checkpoint.hpp"
#include "mmsense/data/dataset.hpp"
#include "mmsense/diagnostics.hpp"
#include "mmsense/eval/overlay.hpp"
#include "mmsense/eval/pipeline.hpp"
#include "mmsense/sim/dataset.hpp"
#include "mmsense/train/trainer.hpp"

namespace mmsense::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

/// Runs `fn`, mapping the error families onto exit codes with a one-line message.
template <class F>
int guarded(F&& fn, std::ostream& err = std::cerr) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

inline nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const fs::path& path, const nlohmann::ordered_json& j) {
  io::write_file_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  fs::path out;
  std::optional<fs::path> scene;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::optional<std::string> regime;  // overrides the scene's regime weights
};

inline int simulate(const SimulateOptions& o, std::ostream& out = std::cout) {
  sim::SceneDistribution d = o.scene ? sim::scene_distribution_from_json(read_json_file(*o.scene)) : sim::SceneDistribution{};
  if (o.regime) d.regime_weights = {{parse_regime(*o.regime), 1.0}};
  const auto frames = sim::make_dataset(d, o.count, o.seed);
  data::Manifest m = sim::write_dataset(o.out, frames, d.height, d.width, o.seed);
  m = data::split(m, o.split, o.seed);
  data::write_manifest(o.out, m);
  nlohmann::ordered_json resolved;
  resolved["scene"] = sim::to_json(d);
  resolved["count"] = o.count;
  resolved["seed"] = o.seed;
  resolved["split"] = o.split;
  write_json_file(o.out / "resolved_config.json", resolved);
  out << "wrote " << frames.size() << " frames (" << m.indices(data::Split::train).size() << " train, "
      << m.indices(data::Split::val).size() << " val, " << m.indices(data::Split::test).size() << " test) to "
      << o.out.string() << '\n';
  return kOk;
}

// ------------------------------------------------------------------- train

struct TrainOptions {
  fs::path data;
  fs::path out;
  std::optional<fs::path> config;  // {"model": {...}, "train": {...}}
  std::optional<std::string> modality;
  std::optional<int> width_divisor;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_steps;
  std::uint64_t init_seed = 0;
  bool resume = false;
};

/// Model overrides accepted in the "model" config section.
inline model::ModelConfig apply_model_json(model::ModelConfig c, const nlohmann::json& j) {
  static const std::vector<std::string> known = {"width_divisor", "modality", "dropout_rate", "init_stddev",
                                                 "dfm_dilation"};
  try {
    for (const auto& [k, v] : j.items())
      if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown model key '" + k + "'");
    c.width_divisor = j.value("width_divisor", c.width_divisor);
    if (j.contains("modality")) c.modality = model::parse_modality(j.at("modality").get<std::string>());
    c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
    c.init_stddev = j.value("init_stddev", c.init_stddev);
    c.dfm_dilation = j.value("dfm_dilation", c.dfm_dilation);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

inline int train(const TrainOptions& o, std::ostream& out = std::cout) {
  data::Manifest manifest;
  const data::Dataset ds = data::Dataset::load(o.data, &manifest);
  nlohmann::json file = o.config ? read_json_file(*o.config) : nlohmann::json::object();
  for (const auto& [k, v] : file.items())
    if (k != "model" && k != "train" && k != "init_seed") throw ConfigError("unknown config section '" + k + "'");

  model::ModelConfig mc = model::ModelConfig::for_resolution(ds.height(), ds.width());
  if (file.contains("model")) mc = apply_model_json(mc, file["model"]);
  if (o.width_divisor) mc.width_divisor = *o.width_divisor;
  if (o.modality) mc.modality = model::parse_modality(*o.modality);
  mc.validate();

  train::TrainConfig tc = train::train_config_from_json(file.value("train", nlohmann::json::object()));
  if (o.epochs) tc.max_epochs = *o.epochs;
  if (o.batch_size) tc.batch_size = *o.batch_size;
  if (o.seed) tc.seed = *o.seed;
  if (o.max_steps) tc.max_steps = *o.max_steps;
  const std::uint64_t init_seed = file.value("init_seed", o.init_seed);
  tc.checkpoint_path = o.out / "checkpoint.mmaf";
  tc.validate();

  auto train_idx = ds.indices(data::Split::train);
  auto val_idx = ds.indices(data::Split::val);
  if (train_idx.empty() && val_idx.empty() && ds.indices(data::Split::test).empty()) train_idx = ds.all_indices();
  if (train_idx.empty()) throw DataError(o.data.string() + ": manifest has no training samples");

  fs::create_directories(o.out);
  nlohmann::ordered_json resolved;
  resolved["data"] = fs::absolute(o.data).string();
  resolved["init_seed"] = init_seed;
  resolved["model"] = model::to_json(mc);
  resolved["train"] = train::to_json(tc);
  write_json_file(o.out / "resolved_config.json", resolved);

  model::MmSenseAF<float> net(mc);
  net.init_params(CounterRng(init_seed));
  train::Trainer<float> trainer(net, ds, train_idx, val_idx, tc);
  const bool resuming = o.resume && fs::exists(tc.checkpoint_path);
  if (resuming) trainer.resume(data::load_checkpoint(tc.checkpoint_path, net));

  const auto mode = resuming ? std::ios::app : std::ios::trunc;
  std::ofstream log(o.out / "train_log.jsonl", mode), timing(o.out / "timing.jsonl", mode);
  trainer.log().out = &log;
  trainer.log().timing = &timing;
  const bool finished = trainer.run();
  const auto& p = trainer.state().progress;
  out << (finished ? "finished" : "paused") << " after " << p.global_step << " steps (epoch " << p.epoch << ")";
  if (!trainer.log().epochs.empty()) {
    const auto& e = trainer.log().epochs.back();
    out << ", train loss " << e.train_loss;
    if (e.val_loss) out << ", val loss " << *e.val_loss;
    out << ", lr " << e.next_lr;
  }
  out << "\ncheckpoint: " << tc.checkpoint_path.string() << '\n';
  return kOk;
}

// -------------------------------------------------------------------- eval

inline model::MmSenseAF<float> load_model(const fs::path& checkpoint) {
  model::MmSenseAF<float> net(data::read_checkpoint_config(checkpoint));
  data::load_checkpoint(checkpoint, net);
  return net;
}

struct EvalOptions {
  fs::path data;
  fs::path checkpoint;
  fs::path out;
  std::string split = "test";
  std::size_t overlays = 0;
  double threshold = eval::kThreshold;
  double radius = eval::kAgreementRadiusPx;
};

inline int evaluate(const EvalOptions& o, std::ostream& out = std::cout) {
  auto net = load_model(o.checkpoint);
  const data::Dataset ds = data::Dataset::load(o.data);
  if (ds.height() != net.config().height || ds.width() != net.config().width)
    throw ConfigError("dataset resolution does not match the checkpoint's model");
  const auto split = o.split == "all" ? data::Split::unassigned : data::parse_split(o.split);
  const auto idx = o.split == "all" ? ds.all_indices() : ds.indices(split);
  if (idx.empty()) throw DataError("split '" + o.split + "' is empty");
  const auto frames = eval::evaluate_frames(net, ds, idx, 64, o.threshold, o.radius);
  const auto reports = eval::report_by_regime(eval::decisions_of(frames));

  fs::create_directories(o.out);
  nlohmann::ordered_json j;
  j["split"] = o.split;
  j["threshold"] = o.threshold;
  j["radius_px"] = o.radius;
  for (const auto& [regime, r] : reports) j["regimes"][regime] = eval::to_json(r);
  nlohmann::ordered_json per_frame = nlohmann::ordered_json::array();
  for (const auto& f : frames) {
    nlohmann::ordered_json d{{"id", f.decision.frame_id},
                             {"regime", to_string(f.decision.regime)},
                             {"gt_positive", f.decision.gt_positive},
                             {"predicted_positive", f.decision.predicted_positive},
                             {"outcome", eval::to_string(f.decision.outcome)}};
    d["distance_px"] = f.decision.distance ? nlohmann::ordered_json(*f.decision.distance) : nlohmann::ordered_json();
    per_frame.push_back(d);
  }
  j["frames"] = per_frame;
  write_json_file(o.out / "report.json", j);
  if (o.overlays) {
    fs::create_directories(o.out / "overlays");
    for (std::size_t k = 0; k < std::min(o.overlays, frames.size()); ++k) {
      const Sample& s = ds[frames[k].index];
      eval::emit_overlay(s.depth, frames[k].mask, s.mask, o.out / "overlays" / (s.id + ".ppm"));
    }
  }
  out << eval::format_table(reports);
  return kOk;
}

// ------------------------------------------------------------------- infer

struct InferOptions {
  fs::path data;
  fs::path checkpoint;
  std::string sample;
  fs::path out;
  std::optional<fs::path> overlay;
};

inline int infer(const InferOptions& o, std::ostream& out = std::cout) {
  auto net = load_model(o.checkpoint);
  const data::Dataset ds = data::Dataset::load(o.data);
  std::optional<std::size_t> index;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds[i].id == o.sample) index = i;
  if (!index) throw DataError("no sample with id '" + o.sample + "'");
  const auto batch = ds.batch<float>({*index});
  const auto prob = net.forward(batch.radar, batch.depth, ad::Mode::infer);
  const auto v = prob.values();
  data::write_f32_blob(o.out, data::kProbMagic, ds.height(), ds.width(), v);
  const BinaryMask mask = eval::binarize(prob);
  const eval::Decision d = eval::decide(mask, ds[*index]);
  if (o.overlay) eval::emit_overlay(ds[*index].depth, mask, ds[*index].mask, *o.overlay);
  out << o.sample << ": " << mask.count() << " pixels >= " << eval::kThreshold << ", outcome "
      << eval::to_string(d.outcome) << "\nprobabilities: " << o.out.string() << '\n';
  return kOk;
}

// ----------------------------------------------------------------- inspect

struct InspectOptions {
  std::size_t height = 32;
  std::size_t width = 64;
  int width_divisor = 1;
  std::optional<fs::path> checkpoint;
};

inline int inspect(const InspectOptions& o, std::ostream& out = std::cout) {
  const model::ModelConfig cfg = o.checkpoint ? data::read_checkpoint_config(*o.checkpoint)
                                              : model::ModelConfig::for_resolution(o.height, o.width)
                                                    .with_divisor(o.width_divisor);
  model::MmSenseAF<float> net(cfg);
  const ad::Tensor<float> radar({1, 1, kRadarSamples, kRadarChannels});
  const ad::Tensor<float> depth({1, cfg.height, cfg.width, 1});
  model::ShapeTrace trace;
  net.forward(radar, depth, ad::Mode::infer, CounterRng(), &trace);
  out << "config " << model::to_json(cfg).dump() << "\n\nintermediates\n";
  char line[160];
  for (const auto& [name, shape] : trace.entries) {
    std::snprintf(line, sizeof line, "  %-34s %s\n", name.c_str(), ad::to_string(shape).c_str());
    out << line;
  }
  out << "\nparameters\n";
  for (const auto& p : net.params().registry()) {
    std::snprintf(line, sizeof line, "  %-44s %s%s\n", p.name.c_str(), ad::to_string(p.shape).c_str(),
                  model::is_learnable(p.kind) ? "" : "  (state)");
    out << line;
  }
  out << "\nlearnable parameters: " << net.params().learnable_count() << '\n';
  return kOk;
}

// --------------------------------------------------------------- gradcheck

struct GradcheckOptions {
  std::size_t instances = 5;
  std::uint64_t seed = 2024;
  bool model = true;
};

inline int gradcheck(const GradcheckOptions& o, std::ostream& out = std::cout) {
  diag::SuiteOptions s;
  s.instances = o.instances;
  s.seed = o.seed;
  s.include_model = o.model;
  bool ok = true;
  char line[160];
  for (const auto& r : diag::run_suite(s)) {
    std::snprintf(line, sizeof line, "%-28s rel_error %.3e  coords %6zu  %s\n", r.name.c_str(), r.max_rel_error,
                  r.coords, r.passed ? "ok" : "FAIL");
    out << line;
    ok = ok && r.passed;
  }
  if (!ok) throw NumericError("gradient check failed");
  return kOk;
}

}  // namespace mmsense::cli
