// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "mspred/layers.hpp"

namespace mspred::nn {

enum class EncoderStyle { dcgan, vgg };

// Per-frame feature taps at three resolutions: H/4 (after stage 2), H/8
// (after stage 3) and H/16 (after stage 4, the bottleneck).
template <class T>
struct FeaturePyramid {
  VarT<T> low, mid, high;
};

// Four-stage convolutional encoder; every stage halves the spatial size.
// dcgan style: one 4x4 stride-2 convolution per stage; vgg style: two 3x3
// convolutions followed by 2x2 max pooling. The first stage is left
// unnormalized in both styles.
template <class T>
class Encoder {
 public:
  Encoder() = default;
  Encoder(long in_channels, std::array<long, 4> widths, EncoderStyle style,
          Rng& rng)
      : style_(style), in_channels_(in_channels), widths_(widths) {
    long cin = in_channels;
    for (int s = 0; s < 4; ++s) {
      const long cout = widths_[static_cast<std::size_t>(s)];
      if (style_ == EncoderStyle::dcgan) {
        convs_.emplace_back(cin, cout, 4, 2, 1, rng);
        if (s > 0) norms_.emplace_back(cout);
      } else {
        convs_.emplace_back(cin, cout, 3, 1, 1, rng);
        convs_.emplace_back(cout, cout, 3, 1, 1, rng);
        if (s > 0) {
          norms_.emplace_back(cout);
          norms_.emplace_back(cout);
        }
      }
      cin = cout;
    }
  }

  long in_channels() const { return in_channels_; }
  const std::array<long, 4>& widths() const { return widths_; }

  FeaturePyramid<T> encode(const VarT<T>& x) {
    const auto& shape = x->value.shape();
    if (shape.size() != 4)
      throw ShapeError("encoder expects [B,C,H,W] input, got " +
                       x->value.shape_str());
    if (shape[1] != in_channels_)
      throw ShapeError("encoder expects " + std::to_string(in_channels_) +
                       " input channels, got " + std::to_string(shape[1]));
    if (shape[2] % 16 != 0 || shape[3] % 16 != 0 || shape[2] < 16 ||
        shape[3] < 16)
      throw ShapeError(
          "encoder input spatial size must be divisible by 16, got " +
          x->value.shape_str());
    ++calls_;

    FeaturePyramid<T> pyr;
    VarT<T> h = x;
    for (int s = 0; s < 4; ++s) {
      h = stage(s, h);
      if (s == 1) pyr.low = h;
      if (s == 2) pyr.mid = h;
    }
    pyr.high = h;
    return pyr;
  }

  // Number of encode() invocations since construction or the last reset.
  // The rollout uses this to prove the prediction phase never re-encodes.
  long calls() const { return calls_; }
  void reset_calls() { calls_ = 0; }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    const int per_stage = style_ == EncoderStyle::dcgan ? 1 : 2;
    int ni = 0;
    for (int s = 0; s < 4; ++s)
      for (int j = 0; j < per_stage; ++j) {
        const std::string base =
            prefix + ".stage" + std::to_string(s + 1) +
            (per_stage == 1 ? "" : ".conv" + std::to_string(j + 1));
        convs_[static_cast<std::size_t>(s * per_stage + j)].collect(
            base + ".conv", out);
        if (s > 0)
          norms_[static_cast<std::size_t>(ni++)].collect(base + ".norm", out);
      }
  }

 private:
  VarT<T> stage(int s, const VarT<T>& x) {
    VarT<T> h = x;
    if (style_ == EncoderStyle::dcgan) {
      h = convs_[static_cast<std::size_t>(s)].forward(h);
      if (s > 0) h = norms_[static_cast<std::size_t>(s - 1)].forward(h);
      h = leaky_relu<T>(h, T(0.2));
    } else {
      for (int j = 0; j < 2; ++j) {
        h = convs_[static_cast<std::size_t>(s * 2 + j)].forward(h);
        if (s > 0)
          h = norms_[static_cast<std::size_t>((s - 1) * 2 + j)].forward(h);
        h = leaky_relu<T>(h, T(0.2));
      }
      h = maxpool2d<T>(h, 2);
    }
    return h;
  }

  EncoderStyle style_ = EncoderStyle::dcgan;
  long in_channels_ = 3;
  std::array<long, 4> widths_{32, 64, 128, 256};
  std::vector<Conv2d<T>> convs_;
  std::vector<GroupNorm<T>> norms_;
  long calls_ = 0;
};

}  // namespace mspred::nn
