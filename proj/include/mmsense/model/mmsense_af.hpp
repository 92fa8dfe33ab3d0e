#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmsense/core/rng.hpp"
#include "mmsense/model/config.hpp"
#include "mmsense/model/params.hpp"
#include "mmsense/tensor/engine.hpp"

namespace mmsense::model {

/// Name -> shape record of forward intermediates (introspection hook).
struct ShapeTrace {
  std::vector<std::pair<std::string, ad::Shape>> entries;

  template <class T>
  void add(const std::string& name, const ad::Tensor<T>& t) {
    entries.emplace_back(name, t.shape());
  }
  [[nodiscard]] const ad::Shape& at(const std::string& name) const {
    for (const auto& [n, s] : entries)
      if (n == name) return s;
    throw ConfigError("no traced intermediate named '" + name + "'");
  }
};

struct Conv2dSpec {
  std::string name;
  Pair kernel{1, 1};
  std::size_t cin = 0;
  std::size_t cout = 0;
  Pair stride{1, 1};
  Pair dilation{1, 1};
  bool depthwise = false;
  bool norm = false;     // batch-norm between conv and ReLU
  bool dropout = false;  // dropout after ReLU
};

struct LstmSpec {
  std::string name;
  std::size_t cin = 0;
  std::size_t hidden = 0;
  int stride = 1;
};

struct Conv1dSpec {
  std::string name;
  std::size_t cin = 0;
  std::size_t cout = 0;
  int stride = 1;
};

/// Radar + depth late-fusion segmentation network.
///
/// Radar branch: two ConvLSTM1D layers (the first returns its sequence, the
/// second its final state) and three Conv1D layers, reshaped 16xC -> 4x4xC.
/// Depth branch: four strided Conv2D layers down to 4x4xC. The branches are
/// concatenated on channels, refined by the feature-magnification stack and
/// decoded by three upsample/conv/FEE stages into a sigmoid mask.
template <class T>
class MmSenseAF {
 public:
  using Tensor = ad::Tensor<T>;

  explicit MmSenseAF(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    build_layers();
    register_params();
  }

  [[nodiscard]] const ModelConfig& config() const { return cfg_; }
  ModelParams<T>& params() { return params_; }
  [[nodiscard]] const ModelParams<T>& params() const { return params_; }

  /// Weights ~ Normal(0, init_stddev^2), biases 0, gamma 1, beta 0, running
  /// mean 0 / variance 1. Each tensor draws from its own named stream.
  void init_params(const CounterRng& rng) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& info = params_.info(i);
      auto data = params_.tensor(i).data();
      switch (info.kind) {
        case ParamKind::weight: {
          CounterRng r = rng.split(info.name);
          for (auto& v : data) v = static_cast<T>(r.normal(0.0, cfg_.init_stddev));
          break;
        }
        case ParamKind::bias:
        case ParamKind::beta:
        case ParamKind::running_mean: std::fill(data.begin(), data.end(), T{0}); break;
        case ParamKind::gamma:
        case ParamKind::running_var: std::fill(data.begin(), data.end(), T{1}); break;
      }
    }
  }

  /// Copy of this model in another precision.
  template <class U>
  [[nodiscard]] MmSenseAF<U> converted() const {
    MmSenseAF<U> out(cfg_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto src = params_.tensor(i).data();
      auto dst = out.params().tensor(i).data();
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] = static_cast<U>(src[k]);
    }
    return out;
  }

  /// [N, 1, 256, 4] normalized radar -> [N, 4, 4, C].
  Tensor radar_encoder(const Tensor& radar, ShapeTrace* trace = nullptr) {
    if (radar.rank() != 4 || radar.dim(2) != kRadarSamples || radar.dim(3) != kRadarChannels)
      throw ShapeError("radar_encoder: expected [N,T,256,4], got " + ad::to_string(radar.shape()));
    if (trace) trace->add("radar.input", radar);
    Tensor x = ad::conv_lstm1d(radar, lstm_weights(lstm_[0]), lstm_[0].stride, ad::LstmReturn::sequence);
    if (trace) trace->add(lstm_[0].name, x);
    x = ad::conv_lstm1d(x, lstm_weights(lstm_[1]), lstm_[1].stride, ad::LstmReturn::final_state);
    if (trace) trace->add(lstm_[1].name, x);
    for (const auto& c : radar_conv_) {
      x = ad::relu(ad::add_bias(ad::conv1d(x, params_[c.name + ".w"], c.stride), params_[c.name + ".b"]));
      if (trace) trace->add(c.name, x);
    }
    x = ad::reshape(x, {x.dim(0), ModelConfig::kLatent, ModelConfig::kLatent, x.dim(2)});
    if (trace) trace->add("radar.latent", x);
    return x;
  }

  /// [N, H, W, 1] standardized depth -> [N, 4, 4, C].
  Tensor tof_encoder(const Tensor& depth, ShapeTrace* trace = nullptr) {
    if (depth.rank() != 4 || depth.dim(1) != cfg_.height || depth.dim(2) != cfg_.width || depth.dim(3) != 1)
      throw ShapeError("tof_encoder: expected [N," + std::to_string(cfg_.height) + "," + std::to_string(cfg_.width) +
                       ",1], got " + ad::to_string(depth.shape()));
    if (trace) trace->add("tof.input", depth);
    Tensor x = depth;
    for (const auto& c : tof_) {
      x = apply(c, x, ad::Mode::infer, CounterRng());
      if (trace) trace->add(c.name, x);
    }
    if (trace) trace->add("tof.latent", x);
    return x;
  }

  Tensor dfm_block(const Tensor& fused, ad::Mode mode, const CounterRng& rng, ShapeTrace* trace = nullptr) {
    if (fused.rank() != 4 || fused.dim(3) != cfg_.fused_channels())
      throw ShapeError("dfm_block: expected " + std::to_string(cfg_.fused_channels()) + " channels, got " +
                       ad::to_string(fused.shape()));
    Tensor x = fused;
    for (const auto& c : dfm_) {
      x = apply(c, x, mode, rng);
      if (trace) trace->add(c.name, x);
    }
    if (trace) trace->add("dfm.out", x);
    return x;
  }

  /// Feature extraction and embedding: 1x1 then 4x4 conv, spatial size kept.
  Tensor fee_block(std::size_t stage, const Tensor& x, ad::Mode mode, const CounterRng& rng,
                   ShapeTrace* trace = nullptr) {
    Tensor y = x;
    for (const auto& c : decoder_.at(stage).fee) {
      y = apply(c, y, mode, rng);
      if (trace) trace->add(c.name, y);
    }
    return y;
  }

  /// [N, 4, 4, C] -> [N, H, W, 1] probabilities.
  Tensor decoder(const Tensor& latent, ad::Mode mode, const CounterRng& rng, ShapeTrace* trace = nullptr) {
    if (latent.rank() != 4 || latent.dim(1) != ModelConfig::kLatent || latent.dim(2) != ModelConfig::kLatent ||
        latent.dim(3) != cfg_.fused_channels())
      throw ShapeError("decoder: latent shape mismatch " + ad::to_string(latent.shape()));
    Tensor x = latent;
    for (std::size_t s = 0; s < decoder_.size(); ++s) {
      x = ad::upsample_nearest(x, cfg_.upsample[s]);
      const std::string prefix = "decoder.stage" + std::to_string(s);
      if (trace) trace->add(prefix + ".upsample", x);
      x = apply(decoder_[s].conv, x, mode, rng);
      if (trace) trace->add(decoder_[s].conv.name, x);
      x = fee_block(s, x, mode, rng, trace);
    }
    x = ad::add_bias(ad::conv2d(x, params_[head_.name + ".w"]), params_[head_.name + ".b"]);
    if (trace) trace->add("decoder.logits", x);
    x = ad::sigmoid(x);
    if (trace) trace->add("output", x);
    return x;
  }

  /// Full pipeline. `dropout_rng` seeds every dropout layer (each layer uses
  /// its own named child stream); it is ignored in infer mode.
  Tensor forward(const Tensor& radar, const Tensor& depth, ad::Mode mode, const CounterRng& dropout_rng = CounterRng(),
                 ShapeTrace* trace = nullptr) {
    if (radar.dim(0) != depth.dim(0)) throw ShapeError("forward: radar and depth batch sizes differ");
    const Tensor r = cfg_.modality == Modality::depth_only ? Tensor::zeros(radar.shape()) : radar;
    const Tensor d = cfg_.modality == Modality::radar_only ? Tensor::zeros(depth.shape()) : depth;
    Tensor latent = ad::concat_channels<T>({radar_encoder(r, trace), tof_encoder(d, trace)});
    if (trace) trace->add("fusion.concat", latent);
    latent = dfm_block(latent, mode, dropout_rng, trace);
    return decoder(latent, mode, dropout_rng, trace);
  }

  [[nodiscard]] const std::vector<Conv2dSpec>& tof_layers() const { return tof_; }
  [[nodiscard]] const std::vector<Conv2dSpec>& dfm_layers() const { return dfm_; }
  [[nodiscard]] const std::vector<LstmSpec>& lstm_layers() const { return lstm_; }
  [[nodiscard]] const std::vector<Conv1dSpec>& radar_conv_layers() const { return radar_conv_; }

 private:
  struct DecoderStage {
    Conv2dSpec conv;
    std::vector<Conv2dSpec> fee;
  };

  void build_layers() {
    lstm_ = {{"radar.lstm1", kRadarChannels, cfg_.radar_channels(0), cfg_.radar_lstm_strides[0]},
             {"radar.lstm2", cfg_.radar_channels(0), cfg_.radar_channels(1), cfg_.radar_lstm_strides[1]}};
    radar_conv_ = {{"radar.conv1", cfg_.radar_channels(1), cfg_.radar_channels(2), cfg_.radar_conv_strides[0]},
                   {"radar.conv2", cfg_.radar_channels(2), cfg_.radar_channels(3), cfg_.radar_conv_strides[1]},
                   {"radar.conv3", cfg_.radar_channels(3), cfg_.radar_channels(4), cfg_.radar_conv_strides[2]}};

    std::size_t cin = 1;
    for (std::size_t i = 0; i < 4; ++i) {
      Conv2dSpec c;
      c.name = "tof.conv" + std::to_string(i + 1);
      c.kernel = cfg_.tof_kernel;
      c.cin = cin;
      c.cout = cfg_.tof_channels(i);
      c.stride = cfg_.tof_strides[i];
      tof_.push_back(c);
      cin = c.cout;
    }

    const std::size_t f = cfg_.fused_channels();
    auto block = [](std::string name, Pair kernel, std::size_t ci, std::size_t co) {
      Conv2dSpec c;
      c.name = std::move(name);
      c.kernel = kernel;
      c.cin = ci;
      c.cout = co;
      c.norm = true;
      c.dropout = true;
      return c;
    };
    Conv2dSpec dw = block("dfm.depthwise3x3", {3, 3}, f, f);
    dw.depthwise = true;
    Conv2dSpec dil = block("dfm.dilated4x4", {4, 4}, f, f);
    dil.dilation = {cfg_.dfm_dilation, cfg_.dfm_dilation};
    dfm_ = {dw,
            block("dfm.pointwise1x1", {1, 1}, f, f),
            block("dfm.conv1x1a", {1, 1}, f, f),
            block("dfm.conv3x3", {3, 3}, f, f),
            block("dfm.conv1x1b", {1, 1}, f, f),
            block("dfm.conv4x4", {4, 4}, f, f),
            dil};

    cin = f;
    for (std::size_t s = 0; s < 3; ++s) {
      const std::string prefix = "decoder.stage" + std::to_string(s);
      const std::size_t co = cfg_.decoder_channels(s);
      DecoderStage st;
      st.conv = block(prefix + ".conv", {cfg_.decoder_kernel, cfg_.decoder_kernel}, cin, co);
      st.conv.dropout = false;
      st.fee = {block(prefix + ".fee.conv1x1", {1, 1}, co, co), block(prefix + ".fee.conv4x4", {4, 4}, co, co)};
      decoder_.push_back(st);
      cin = co;
    }
    head_.name = "head.conv1x1";
    head_.cin = cin;
    head_.cout = 1;
  }

  void register_conv(const Conv2dSpec& c) {
    const auto kh = static_cast<std::size_t>(c.kernel[0]), kw = static_cast<std::size_t>(c.kernel[1]);
    if (c.depthwise)
      params_.add(c.name + ".w", {kh, kw, c.cin}, ParamKind::weight);
    else
      params_.add(c.name + ".w", {kh, kw, c.cin, c.cout}, ParamKind::weight);
    params_.add(c.name + ".b", {c.cout}, ParamKind::bias);
    if (c.norm) {
      params_.add(c.name + ".bn.gamma", {c.cout}, ParamKind::gamma);
      params_.add(c.name + ".bn.beta", {c.cout}, ParamKind::beta);
      params_.add(c.name + ".bn.running_mean", {c.cout}, ParamKind::running_mean);
      params_.add(c.name + ".bn.running_var", {c.cout}, ParamKind::running_var);
    }
  }

  void register_params() {
    const auto k = static_cast<std::size_t>(cfg_.radar_kernel);
    for (const auto& l : lstm_) {
      params_.add(l.name + ".wx", {k, l.cin, 4 * l.hidden}, ParamKind::weight);
      params_.add(l.name + ".wh", {k, l.hidden, 4 * l.hidden}, ParamKind::weight);
      params_.add(l.name + ".b", {4 * l.hidden}, ParamKind::bias);
    }
    for (const auto& c : radar_conv_) {
      params_.add(c.name + ".w", {k, c.cin, c.cout}, ParamKind::weight);
      params_.add(c.name + ".b", {c.cout}, ParamKind::bias);
    }
    for (const auto& c : tof_) register_conv(c);
    for (const auto& c : dfm_) register_conv(c);
    for (const auto& s : decoder_) {
      register_conv(s.conv);
      for (const auto& c : s.fee) register_conv(c);
    }
    register_conv(head_);
  }

  ad::ConvLstmWeights<T> lstm_weights(const LstmSpec& l) {
    return {params_[l.name + ".wx"], params_[l.name + ".wh"], params_[l.name + ".b"]};
  }

  // conv (+ batch-norm) + ReLU (+ dropout).
  Tensor apply(const Conv2dSpec& c, const Tensor& x, ad::Mode mode, const CounterRng& rng) {
    Tensor y = c.depthwise ? ad::depthwise_conv2d(x, params_[c.name + ".w"], c.stride, ad::Padding::same, c.dilation)
                           : ad::conv2d(x, params_[c.name + ".w"], {c.stride, ad::Padding::same, c.dilation});
    y = ad::add_bias(y, params_[c.name + ".b"]);
    if (c.norm)
      y = ad::batch_norm(y, params_[c.name + ".bn.gamma"], params_[c.name + ".bn.beta"],
                         params_[c.name + ".bn.running_mean"], params_[c.name + ".bn.running_var"], mode);
    y = ad::relu(y);
    if (c.dropout) y = ad::dropout(y, cfg_.dropout_rate, mode, rng.split(c.name));
    return y;
  }

  ModelConfig cfg_;
  ModelParams<T> params_;
  std::vector<LstmSpec> lstm_;
  std::vector<Conv1dSpec> radar_conv_;
  std::vector<Conv2dSpec> tof_;
  std::vector<Conv2dSpec> dfm_;
  std::vector<DecoderStage> decoder_;
  Conv2dSpec head_;
};

}  // namespace mmsense::model
