// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mspred/ops.hpp"
#include "mspred/rng.hpp"

namespace mspred::nn {

template <class T>
using NamedParams = std::vector<std::pair<std::string, VarT<T>>>;

template <class T>
std::size_t param_count(const NamedParams<T>& params) {
  std::size_t n = 0;
  for (const auto& [name, p] : params) n += p->value.size();
  return n;
}

template <class T>
TensorT<T> xavier_uniform(typename TensorT<T>::Shape shape, long fan_in,
                          long fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  TensorT<T> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<T>(rng.uniform(-limit, limit));
  return t;
}

// ---------------------------------------------------------------------------
// Stateless layers
// ---------------------------------------------------------------------------

template <class T>
struct Conv2d {
  VarT<T> w, b;
  long stride = 1, pad = 0;

  Conv2d() = default;
  Conv2d(long in_ch, long out_ch, long k, long stride_, long pad_, Rng& rng,
         bool bias = true)
      : stride(stride_), pad(pad_) {
    w = parameter<T>(xavier_uniform<T>({out_ch, in_ch, k, k}, in_ch * k * k,
                                       out_ch * k * k, rng));
    if (bias) b = parameter<T>(TensorT<T>({out_ch}));
  }

  VarT<T> forward(const VarT<T>& x) const {
    return conv2d<T>(x, w, b, stride, pad);
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".w", w);
    if (b) out.emplace_back(prefix + ".b", b);
  }
};

template <class T>
struct ConvTranspose2d {
  VarT<T> w, b;
  long stride = 1, pad = 0;

  ConvTranspose2d() = default;
  ConvTranspose2d(long in_ch, long out_ch, long k, long stride_, long pad_,
                  Rng& rng, bool bias = true)
      : stride(stride_), pad(pad_) {
    w = parameter<T>(xavier_uniform<T>({in_ch, out_ch, k, k}, in_ch * k * k,
                                       out_ch * k * k, rng));
    if (bias) b = parameter<T>(TensorT<T>({out_ch}));
  }

  VarT<T> forward(const VarT<T>& x) const {
    return conv_transpose2d<T>(x, w, b, stride, pad);
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".w", w);
    if (b) out.emplace_back(prefix + ".b", b);
  }
};

template <class T>
struct Linear {
  VarT<T> w, b;

  Linear() = default;
  Linear(long in_dim, long out_dim, Rng& rng, bool bias = true) {
    w = parameter<T>(xavier_uniform<T>({out_dim, in_dim}, in_dim, out_dim, rng));
    if (bias) b = parameter<T>(TensorT<T>({out_dim}));
  }

  VarT<T> forward(const VarT<T>& x) const { return linear<T>(x, w, b); }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".w", w);
    if (b) out.emplace_back(prefix + ".b", b);
  }
};

// Picks the largest group count <= 32 that divides the channel count while
// keeping at least two channels per group, falling back to one group. A
// single-channel group over a 1x1 map would normalize to all zeros.
inline long pick_groups(long channels) {
  for (long g = std::min<long>(32, channels); g >= 2; --g)
    if (channels % g == 0 && channels / g >= 2) return g;
  return 1;
}

template <class T>
struct GroupNorm {
  VarT<T> gamma, beta;
  long groups = 1;

  GroupNorm() = default;
  explicit GroupNorm(long channels, long groups_ = -1)
      : groups(groups_ > 0 ? groups_ : pick_groups(channels)) {
    gamma = parameter<T>(TensorT<T>({channels}, T(1)));
    beta = parameter<T>(TensorT<T>({channels}));
  }

  VarT<T> forward(const VarT<T>& x) const {
    return group_norm<T>(x, gamma, beta, groups);
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".gamma", gamma);
    out.emplace_back(prefix + ".beta", beta);
  }
};

// ---------------------------------------------------------------------------
// Recurrent cells
// ---------------------------------------------------------------------------

template <class T>
struct CellState {
  VarT<T> h, c;
};

// Convolutional LSTM cell. Gates are computed from one convolution over the
// input plus one over the previous hidden state, chunked in i, f, g, o order:
//   i = sigmoid(.)   f = sigmoid(.)   g = tanh(.)   o = sigmoid(.)
//   c' = f * c + i * g
//   h' = o * tanh(c')
// No peephole terms. The forget-gate bias starts at +1 so memory is retained
// by default at the beginning of training.
template <class T>
struct ConvLSTMCell {
  VarT<T> wx, wh, b;
  long hidden = 0, kernel = 3;

  ConvLSTMCell() = default;
  ConvLSTMCell(long in_ch, long hidden_ch, long k, Rng& rng)
      : hidden(hidden_ch), kernel(k) {
    wx = parameter<T>(xavier_uniform<T>({4 * hidden_ch, in_ch, k, k},
                                        in_ch * k * k, hidden_ch * k * k, rng));
    wh = parameter<T>(xavier_uniform<T>({4 * hidden_ch, hidden_ch, k, k},
                                        hidden_ch * k * k, hidden_ch * k * k,
                                        rng));
    TensorT<T> bias({4 * hidden_ch});
    for (long i = hidden_ch; i < 2 * hidden_ch; ++i) bias[i] = T(1);
    b = parameter<T>(std::move(bias));
  }

  CellState<T> zero_state(long batch, long h, long w) const {
    return {constant<T>(TensorT<T>({batch, hidden, h, w})),
            constant<T>(TensorT<T>({batch, hidden, h, w}))};
  }

  CellState<T> forward(const VarT<T>& x, const CellState<T>& state) const {
    const long pad = (kernel - 1) / 2;
    auto gates = add(conv2d<T>(x, wx, b, 1, pad),
                     conv2d<T>(state.h, wh, nullptr, 1, pad));
    auto parts = chunk_channels<T>(gates, 4);
    auto i = sigmoid<T>(parts[0]);
    auto f = sigmoid<T>(parts[1]);
    auto g = tanh_act<T>(parts[2]);
    auto o = sigmoid<T>(parts[3]);
    auto c = add(mul(f, state.c), mul(i, g));
    auto h = mul(o, tanh_act<T>(c));
    return {h, c};
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".wx", wx);
    out.emplace_back(prefix + ".wh", wh);
    out.emplace_back(prefix + ".b", b);
  }
};

// Fully connected LSTM cell over flattened feature maps. Same gate equations
// and forget-bias initialization as the convolutional cell.
template <class T>
struct LinearLSTMCell {
  VarT<T> wx, wh, b;
  long hidden = 0;

  LinearLSTMCell() = default;
  LinearLSTMCell(long in_dim, long hidden_dim, Rng& rng) : hidden(hidden_dim) {
    wx = parameter<T>(
        xavier_uniform<T>({4 * hidden_dim, in_dim}, in_dim, hidden_dim, rng));
    wh = parameter<T>(xavier_uniform<T>({4 * hidden_dim, hidden_dim},
                                        hidden_dim, hidden_dim, rng));
    TensorT<T> bias({4 * hidden_dim});
    for (long i = hidden_dim; i < 2 * hidden_dim; ++i) bias[i] = T(1);
    b = parameter<T>(std::move(bias));
  }

  CellState<T> zero_state(long batch) const {
    return {constant<T>(TensorT<T>({batch, hidden})),
            constant<T>(TensorT<T>({batch, hidden}))};
  }

  // x: [B, in_dim]; state tensors: [B, hidden].
  CellState<T> forward(const VarT<T>& x, const CellState<T>& state) const {
    auto gates = add(linear<T>(x, wx, b), linear<T>(state.h, wh, nullptr));
    // chunk_channels wants rank 4; views keep this zero-cost enough here.
    const long batch = gates->value.dim(0);
    auto g4 = reshape<T>(gates, {batch, 4 * hidden, 1, 1});
    auto parts = chunk_channels<T>(g4, 4);
    auto i = sigmoid<T>(reshape<T>(parts[0], {batch, hidden}));
    auto f = sigmoid<T>(reshape<T>(parts[1], {batch, hidden}));
    auto g = tanh_act<T>(reshape<T>(parts[2], {batch, hidden}));
    auto o = sigmoid<T>(reshape<T>(parts[3], {batch, hidden}));
    auto c = add(mul(f, state.c), mul(i, g));
    auto h = mul(o, tanh_act<T>(c));
    return {h, c};
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".wx", wx);
    out.emplace_back(prefix + ".wh", wh);
    out.emplace_back(prefix + ".b", b);
  }
};

}  // namespace mspred::nn
