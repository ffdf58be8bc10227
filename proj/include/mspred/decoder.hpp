// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>

#include "mspred/encoder.hpp"
#include "mspred/layers.hpp"

namespace mspred::nn {

// Mirrored transposed-convolution decoder with three heads.
//
// Frame head: top-down over all levels. Skip features from the last observed
// frame are added element-wise to the RNN outputs, then levels are fused by
// channel-wise concatenation while upsampling back to frame resolution.
// Mid head: consumes levels 1 and 2 only, emits a heatmap at H/4 x W/4.
// High head: consumes level 2 only, emits coordinates in [0,1].
template <class T>
struct Decoder {
  long hidden = 128;
  long out_channels = 3;
  long coord_dim = 4;

  std::array<Conv2d<T>, 3> skip_proj;  // tap channels -> hidden, frame head only

  ConvTranspose2d<T> f_up1;  // hidden -> w3           H/16 -> H/8
  GroupNorm<T> f_n1;
  ConvTranspose2d<T> f_up2;  // w3 + hidden -> w2      H/8 -> H/4
  GroupNorm<T> f_n2;
  ConvTranspose2d<T> f_up3;  // w2 + hidden -> w1      H/4 -> H/2
  GroupNorm<T> f_n3;
  ConvTranspose2d<T> f_up4;  // w1 -> out_channels     H/2 -> H

  ConvTranspose2d<T> m_up1;  // hidden -> w3           H/16 -> H/8
  GroupNorm<T> m_n1;
  ConvTranspose2d<T> m_up2;  // w3 + hidden -> w2      H/8 -> H/4
  GroupNorm<T> m_n2;
  Conv2d<T> m_out;           // w2 -> 1

  Conv2d<T> h_conv;          // hidden -> w2, 3x3
  GroupNorm<T> h_norm;
  Linear<T> h_fc1;           // w2 * H/16 * W/16 -> hidden
  Linear<T> h_fc2;           // hidden -> coord_dim

  Decoder() = default;
  Decoder(std::array<long, 3> tap_channels, std::array<long, 4> widths,
          long hidden_, long out_channels_, long coord_dim_,
          std::pair<long, long> bottleneck_hw, Rng& rng)
      : hidden(hidden_), out_channels(out_channels_), coord_dim(coord_dim_) {
    const long w1 = widths[0], w2 = widths[1], w3 = widths[2];
    for (int l = 0; l < 3; ++l)
      skip_proj[static_cast<std::size_t>(l)] =
          Conv2d<T>(tap_channels[static_cast<std::size_t>(l)], hidden, 1, 1, 0,
                    rng);

    f_up1 = ConvTranspose2d<T>(hidden, w3, 4, 2, 1, rng);
    f_n1 = GroupNorm<T>(w3);
    f_up2 = ConvTranspose2d<T>(w3 + hidden, w2, 4, 2, 1, rng);
    f_n2 = GroupNorm<T>(w2);
    f_up3 = ConvTranspose2d<T>(w2 + hidden, w1, 4, 2, 1, rng);
    f_n3 = GroupNorm<T>(w1);
    f_up4 = ConvTranspose2d<T>(w1, out_channels, 4, 2, 1, rng);

    m_up1 = ConvTranspose2d<T>(hidden, w3, 4, 2, 1, rng);
    m_n1 = GroupNorm<T>(w3);
    m_up2 = ConvTranspose2d<T>(w3 + hidden, w2, 4, 2, 1, rng);
    m_n2 = GroupNorm<T>(w2);
    m_out = Conv2d<T>(w2, 1, 3, 1, 1, rng);

    h_conv = Conv2d<T>(hidden, w2, 3, 1, 1, rng);
    h_norm = GroupNorm<T>(w2);
    h_fc1 = Linear<T>(w2 * bottleneck_hw.first * bottleneck_hw.second, hidden,
                      rng);
    h_fc2 = Linear<T>(hidden, coord_dim, rng);
  }

  VarT<T> decode_frame(const VarT<T>& o0, const VarT<T>& o1, const VarT<T>& o2,
                       const FeaturePyramid<T>& skips) const {
    require(o0, "level 0");
    require(o1, "level 1");
    require(o2, "level 2");
    if (!skips.low || !skips.mid || !skips.high)
      throw StateError("decoder: skip pyramid not populated");
    auto r2 = add(o2, skip_proj[2].forward(skips.high));
    auto r1 = add(o1, skip_proj[1].forward(skips.mid));
    auto r0 = add(o0, skip_proj[0].forward(skips.low));
    auto h = leaky_relu<T>(f_n1.forward(f_up1.forward(r2)), T(0.2));
    h = concat_channels<T>({h, r1});
    h = leaky_relu<T>(f_n2.forward(f_up2.forward(h)), T(0.2));
    h = concat_channels<T>({h, r0});
    h = leaky_relu<T>(f_n3.forward(f_up3.forward(h)), T(0.2));
    return sigmoid<T>(f_up4.forward(h));
  }

  VarT<T> decode_mid(const VarT<T>& o1, const VarT<T>& o2) const {
    require(o1, "level 1");
    require(o2, "level 2");
    auto h = leaky_relu<T>(m_n1.forward(m_up1.forward(o2)), T(0.2));
    h = concat_channels<T>({h, o1});
    h = leaky_relu<T>(m_n2.forward(m_up2.forward(h)), T(0.2));
    return sigmoid<T>(m_out.forward(h));
  }

  VarT<T> decode_high(const VarT<T>& o2) const {
    require(o2, "level 2");
    auto h = leaky_relu<T>(h_norm.forward(h_conv.forward(o2)), T(0.2));
    const long batch = h->value.dim(0);
    const long flat = h->value.dim(1) * h->value.dim(2) * h->value.dim(3);
    auto v = leaky_relu<T>(h_fc1.forward(reshape<T>(h, {batch, flat})), T(0.2));
    return sigmoid<T>(h_fc2.forward(v));
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    for (int l = 0; l < 3; ++l)
      skip_proj[static_cast<std::size_t>(l)].collect(
          prefix + ".skip_proj" + std::to_string(l), out);
    f_up1.collect(prefix + ".frame.up1", out);
    f_n1.collect(prefix + ".frame.norm1", out);
    f_up2.collect(prefix + ".frame.up2", out);
    f_n2.collect(prefix + ".frame.norm2", out);
    f_up3.collect(prefix + ".frame.up3", out);
    f_n3.collect(prefix + ".frame.norm3", out);
    f_up4.collect(prefix + ".frame.up4", out);
    m_up1.collect(prefix + ".mid.up1", out);
    m_n1.collect(prefix + ".mid.norm1", out);
    m_up2.collect(prefix + ".mid.up2", out);
    m_n2.collect(prefix + ".mid.norm2", out);
    m_out.collect(prefix + ".mid.out", out);
    h_conv.collect(prefix + ".high.conv", out);
    h_norm.collect(prefix + ".high.norm", out);
    h_fc1.collect(prefix + ".high.fc1", out);
    h_fc2.collect(prefix + ".high.fc2", out);
  }

 private:
  static void require(const VarT<T>& v, const char* what) {
    if (!v)
      throw StateError(std::string("decoder: ") + what +
                       " feature buffer not populated");
  }
};

}  // namespace mspred::nn
