#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmsense/data/checkpoint.hpp"
#include "mmsense/data/dataset.hpp"
#include "mmsense/model/mmsense_af.hpp"
#include "mmsense/tensor/engine.hpp"

namespace mmsense::train {

struct TrainConfig {
  std::size_t max_epochs = 100;
  std::size_t batch_size = 64;
  double initial_lr = 1e-3;
  double min_lr = 1e-6;
  std::uint64_t seed = 0;
  double plateau_factor = 0.5;
  int plateau_patience = 5;
  double plateau_min_delta = 1e-4;
  std::size_t early_stop_window = 20;  // epochs without improvement once lr sits at min_lr
  std::size_t checkpoint_every = 1;    // epochs; 0 disables periodic checkpoints
  std::filesystem::path checkpoint_path;
  std::size_t max_steps = 0;  // stop after this many optimizer steps in total; 0 = no limit

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(min_lr > 0.0) || min_lr > initial_lr) throw ConfigError("need 0 < min_lr <= initial_lr");
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw ConfigError("plateau_factor must lie in (0, 1)");
    if (plateau_patience < 1) throw ConfigError("plateau_patience must be >= 1");
  }
};

inline nlohmann::ordered_json to_json(const TrainConfig& c) {
  return {{"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"initial_lr", c.initial_lr},
          {"min_lr", c.min_lr},
          {"seed", c.seed},
          {"plateau_factor", c.plateau_factor},
          {"plateau_patience", c.plateau_patience},
          {"plateau_min_delta", c.plateau_min_delta},
          {"early_stop_window", c.early_stop_window},
          {"checkpoint_every", c.checkpoint_every},
          {"max_steps", c.max_steps}};
}

/// Overlays the keys present in `j` onto `base`; unknown keys are errors.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  static const std::vector<std::string> known = {"max_epochs",        "batch_size",      "initial_lr", "min_lr",
                                                 "seed",              "plateau_factor",  "plateau_patience",
                                                 "plateau_min_delta", "early_stop_window", "checkpoint_every",
                                                 "max_steps"};
  try {
    for (const auto& [k, v] : j.items())
      if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown train key '" + k + "'");
    base.max_epochs = j.value("max_epochs", base.max_epochs);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.initial_lr = j.value("initial_lr", base.initial_lr);
    base.min_lr = j.value("min_lr", base.min_lr);
    base.seed = j.value("seed", base.seed);
    base.plateau_factor = j.value("plateau_factor", base.plateau_factor);
    base.plateau_patience = j.value("plateau_patience", base.plateau_patience);
    base.plateau_min_delta = j.value("plateau_min_delta", base.plateau_min_delta);
    base.early_stop_window = j.value("early_stop_window", base.early_stop_window);
    base.checkpoint_every = j.value("checkpoint_every", base.checkpoint_every);
    base.max_steps = j.value("max_steps", base.max_steps);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed train config: ") + e.what());
  }
  base.validate();
  return base;
}

struct StepRecord {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct EpochRecord {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  double lr = 0.0;       // rate used during the epoch
  double next_lr = 0.0;  // rate after the scheduler update
  double seconds = 0.0;
};

/// Step and epoch records. JSON lines go to `out`; wall-clock times go only
/// to `timing` so that `out` is reproducible byte for byte.
struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::ostream* out = nullptr;
  std::ostream* timing = nullptr;

  void add(const StepRecord& s) {
    steps.push_back(s);
    if (out) *out << nlohmann::ordered_json{{"type", "step"}, {"step", s.step}, {"epoch", s.epoch},
                                            {"loss", s.loss}, {"lr", s.lr}}.dump() << '\n';
  }
  void add(const EpochRecord& e) {
    epochs.push_back(e);
    if (out) {
      nlohmann::ordered_json j{{"type", "epoch"}, {"epoch", e.epoch}, {"train_loss", e.train_loss}};
      j["val_loss"] = e.val_loss ? nlohmann::ordered_json(*e.val_loss) : nlohmann::ordered_json(nullptr);
      j["lr"] = e.lr;
      j["next_lr"] = e.next_lr;
      *out << j.dump() << '\n';
    }
    if (timing) *timing << nlohmann::ordered_json{{"epoch", e.epoch}, {"seconds", e.seconds}}.dump() << '\n';
  }
  [[nodiscard]] std::vector<double> loss_trace() const {
    std::vector<double> v;
    for (const auto& s : steps) v.push_back(s.loss);
    return v;
  }
};

/// Mean BCE over `idx` in infer mode (dropout off, running batch-norm statistics).
template <class T>
double evaluate_epoch(model::MmSenseAF<T>& net, const data::Dataset& ds, const std::vector<std::size_t>& idx,
                      std::size_t batch_size = 64) {
  if (idx.empty()) throw DataError("evaluate_epoch: split is empty");
  double total = 0.0;
  for (std::size_t b = 0; b < idx.size(); b += batch_size) {
    std::vector<std::size_t> chunk(idx.begin() + static_cast<std::ptrdiff_t>(b),
                                   idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), b + batch_size)));
    const auto batch = ds.batch<T>(chunk);
    const auto pred = net.forward(batch.radar, batch.depth, ad::Mode::infer);
    total += static_cast<double>(ad::bce_loss(pred, batch.mask).item()) * static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(idx.size());
}

/// Minibatch BCE training with Adam and a reduce-on-plateau learning rate.
///
/// Batch order of epoch e is fixed by (seed, e) and the dropout streams of
/// step s by (seed, s), so a run resumed from a checkpoint replays the
/// uninterrupted run exactly.
template <class T>
class Trainer {
 public:
  Trainer(model::MmSenseAF<T>& net, const data::Dataset& ds, std::vector<std::size_t> train_idx,
          std::vector<std::size_t> val_idx, TrainConfig cfg)
      : net_(net), ds_(ds), train_(std::move(train_idx)), val_(std::move(val_idx)), cfg_(std::move(cfg)),
        batcher_(train_, cfg_.batch_size, cfg_.seed) {
    cfg_.validate();
    if (train_.empty()) throw DataError("training split is empty");
    state_.adam.emplace();
    state_.adam->lr = cfg_.initial_lr;
    state_.plateau.emplace();
    state_.plateau->factor = cfg_.plateau_factor;
    state_.plateau->patience = cfg_.plateau_patience;
    state_.plateau->min_delta = cfg_.plateau_min_delta;
    state_.plateau->min_lr = cfg_.min_lr;
    state_.plateau->current_lr = cfg_.initial_lr;
    state_.progress.rng = CounterRng(cfg_.seed);
    net_.params().set_requires_grad(true);
    params_ = net_.params().learnable();
  }

  /// Continues from a checkpointed state (seed and schedule come from it).
  void resume(data::TrainState<T> s) {
    if (!s.adam || !s.plateau) throw DataError("checkpoint carries no optimizer state to resume from");
    state_ = std::move(s);
  }

  [[nodiscard]] const data::TrainState<T>& state() const { return state_; }
  [[nodiscard]] TrainLog& log() { return log_; }
  [[nodiscard]] std::size_t steps_per_epoch() const { return batcher_.batches_per_epoch(); }

  /// One optimizer step on the given samples; returns the batch loss.
  double step(const std::vector<std::size_t>& idx) {
    const auto batch = ds_.batch<T>(idx);
    auto& prog = state_.progress;
    const CounterRng dropout = prog.rng.split("dropout").split(static_cast<std::uint64_t>(prog.global_step));
    ad::Tape<T> tape;
    double loss_value = 0.0;
    try {
      ad::TapeScope<T> scope(tape);
      net_.params().zero_grad();
      const auto pred = net_.forward(batch.radar, batch.depth, ad::Mode::train, dropout);
      const auto loss = ad::bce_loss(pred, batch.mask);
      loss_value = static_cast<double>(loss.item());
      if (!std::isfinite(loss_value)) throw NumericError("loss is not finite");
      ad::backward(loss, tape);
      for (const auto& p : params_) ad::check_finite_grad(p, "parameter gradient");
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(prog.global_step) + " (epoch " + std::to_string(prog.epoch) +
                         "): " + e.what());
    }
    state_.adam->lr = state_.plateau->current_lr;
    ad::adam_step<T>(params_, *state_.adam);
    log_.add(StepRecord{prog.global_step, prog.epoch, loss_value, state_.adam->lr});
    ++prog.global_step;
    return loss_value;
  }

  /// Runs until max_epochs, early stop, or max_steps. Returns true when
  /// training finished (not merely paused by max_steps).
  bool run() {
    auto& prog = state_.progress;
    while (static_cast<std::size_t>(prog.epoch) < cfg_.max_epochs) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto batches = batcher_.epoch(static_cast<std::size_t>(prog.epoch));
      const double lr = state_.plateau->current_lr;
      while (static_cast<std::size_t>(prog.step_in_epoch) < batches.size()) {
        if (cfg_.max_steps && static_cast<std::size_t>(prog.global_step) >= cfg_.max_steps) {
          save();
          return false;
        }
        prog.epoch_loss_sum += step(batches[static_cast<std::size_t>(prog.step_in_epoch)]);
        ++prog.step_in_epoch;
      }
      EpochRecord rec;
      rec.epoch = prog.epoch;
      rec.train_loss = prog.epoch_loss_sum / static_cast<double>(batches.size());
      rec.lr = lr;
      if (!val_.empty()) rec.val_loss = evaluate_epoch(net_, ds_, val_, cfg_.batch_size);
      const double monitored = rec.val_loss.value_or(rec.train_loss);
      const double best_before = state_.plateau->best;
      ad::plateau_step(*state_.plateau, monitored);
      prog.stale_epochs = monitored < best_before - state_.plateau->min_delta ? 0 : prog.stale_epochs + 1;
      rec.next_lr = state_.plateau->current_lr;
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log_.add(rec);
      ++prog.epoch;
      prog.step_in_epoch = 0;
      prog.epoch_loss_sum = 0.0;
      if (cfg_.checkpoint_every && prog.epoch % static_cast<std::int64_t>(cfg_.checkpoint_every) == 0) save();
      if (state_.plateau->current_lr <= cfg_.min_lr &&
          static_cast<std::size_t>(prog.stale_epochs) >= cfg_.early_stop_window)
        break;
    }
    save();
    return true;
  }

  void save() const {
    if (!cfg_.checkpoint_path.empty()) data::save_checkpoint(cfg_.checkpoint_path, net_, state_);
  }

 private:
  model::MmSenseAF<T>& net_;
  const data::Dataset& ds_;
  std::vector<std::size_t> train_;
  std::vector<std::size_t> val_;
  TrainConfig cfg_;
  data::Batcher batcher_;
  data::TrainState<T> state_;
  std::vector<ad::Tensor<T>> params_;
  TrainLog log_;
};

}  // namespace mmsense::train
