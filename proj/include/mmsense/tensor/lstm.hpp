#pragma once

#include <vector>

#include "mmsense/tensor/conv.hpp"
#include "mmsense/tensor/ops.hpp"

namespace mmsense::ad {

/// Kernels of a 1-D convolutional LSTM with `hidden` channels.
/// Gate blocks along the output channel axis are ordered i, f, g, o.
template <class T>
struct ConvLstmWeights {
  Tensor<T> input_kernel;      // [k, Cin, 4*hidden]
  Tensor<T> recurrent_kernel;  // [k, hidden, 4*hidden]
  Tensor<T> bias;              // [4*hidden]
};

enum class LstmReturn { sequence, final_state };

/// Convolutional LSTM over time for inputs [N, T, L, Cin].
///
///   z_t = conv(x_t, Wx; stride) + conv(h_{t-1}, Wh; 1) + b
///   c_t = f * c_{t-1} + i * tanh(g),  h_t = o * tanh(c_t)
///
/// with sigmoid i, f, o and zero initial state. Returns [N, T, L', hidden]
/// for LstmReturn::sequence or the last hidden state [N, L', hidden].
template <class T>
Tensor<T> conv_lstm1d(const Tensor<T>& x, const ConvLstmWeights<T>& w, int stride = 1,
                      LstmReturn ret = LstmReturn::sequence) {
  if (x.rank() != 4) throw ShapeError("conv_lstm1d: expected input [N,T,L,C], got " + to_string(x.shape()));
  const auto& wx = w.input_kernel.shape();
  const auto& wh = w.recurrent_kernel.shape();
  if (wx.size() != 3 || wh.size() != 3 || w.bias.rank() != 1)
    throw ShapeError("conv_lstm1d: malformed kernels");
  const std::size_t gates = wx[2];
  if (gates % 4 != 0) throw ShapeError("conv_lstm1d: gate channels must be a multiple of 4");
  const std::size_t hidden = gates / 4;
  if (wh[1] != hidden || wh[2] != gates || w.bias.dim(0) != gates)
    throw ShapeError("conv_lstm1d: hidden-channel mismatch between input kernel " + to_string(wx) +
                     ", recurrent kernel " + to_string(wh) + " and bias");
  if (wx[1] != x.dim(3)) throw ShapeError("conv_lstm1d: input channels do not match kernel");
  const std::size_t steps = x.dim(1);

  Tensor<T> h, c;
  std::vector<Tensor<T>> outputs;
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor<T> z = conv1d(select_axis1(x, t), w.input_kernel, stride, Padding::same);
    // With zero initial state the recurrent term and f * c_{t-1} vanish at t = 0.
    if (t > 0) z = add(z, conv1d(h, w.recurrent_kernel, 1, Padding::same));
    z = add_bias(z, w.bias);
    const Tensor<T> i = sigmoid(slice_channels(z, 0, hidden));
    const Tensor<T> g = tanh(slice_channels(z, 2 * hidden, hidden));
    const Tensor<T> o = sigmoid(slice_channels(z, 3 * hidden, hidden));
    if (t > 0) {
      const Tensor<T> f = sigmoid(slice_channels(z, hidden, hidden));
      c = add(mul(f, c), mul(i, g));
    } else {
      c = mul(i, g);
    }
    h = mul(o, tanh(c));
    if (ret == LstmReturn::sequence) outputs.push_back(h);
  }
  return ret == LstmReturn::sequence ? stack_axis1(outputs) : h;
}

}  // namespace mmsense::ad
