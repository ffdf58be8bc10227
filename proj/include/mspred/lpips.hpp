// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mspred/autograd.hpp"
#include "mspred/common.hpp"
#include "mspred/digest.hpp"
#include "mspred/ops.hpp"
#include "mspred/tensor.hpp"

namespace mspred::eval {

// One named feature stage produced by a plugin for a single image, plus the
// per-channel distance weights that apply to it. Empty weights mean all-ones.
struct FeatureStageResult {
  std::string name;
  TensorF features;  // [C,H,W]
  std::vector<float> weights;
};

// Perceptual-distance backbone. `extract` maps an image [C,H,W] to one or
// more feature stages; the distance sums a weighted, channel-normalized
// squared difference over the stages. Backbones with trained weights are
// supplied as files (see load_feature_plugin); the built-in identity plugin
// uses raw pixels and needs no external data.
struct FeatureExtractorPlugin {
  std::string name;
  std::vector<std::string> stage_names;
  std::function<std::vector<FeatureStageResult>(const TensorF&)> extract;

  static FeatureExtractorPlugin identity() {
    FeatureExtractorPlugin plugin;
    plugin.name = "identity";
    plugin.stage_names = {"pixels"};
    plugin.extract = [](const TensorF& image) {
      if (image.rank() != 3)
        throw ShapeError("identity plugin expects a [C,H,W] image, got " +
                         image.shape_str());
      std::vector<FeatureStageResult> out;
      out.push_back({"pixels", image, {}});
      return out;
    };
    return plugin;
  }
};

// Unit-normalizes the channel vector at every spatial location.
inline TensorF channel_normalize(const TensorF& f) {
  if (f.rank() != 3)
    throw ShapeError("channel_normalize expects [C,H,W], got " + f.shape_str());
  const long c = f.dim(0), h = f.dim(1), w = f.dim(2);
  const long plane = h * w;
  TensorF out(f.shape());
  for (long p = 0; p < plane; ++p) {
    double sq = 0.0;
    for (long ch = 0; ch < c; ++ch) {
      const double v = f[static_cast<std::size_t>(ch * plane + p)];
      sq += v * v;
    }
    const double inv = 1.0 / (std::sqrt(sq) + 1e-10);
    for (long ch = 0; ch < c; ++ch) {
      const std::size_t i = static_cast<std::size_t>(ch * plane + p);
      out[i] = static_cast<float>(f[i] * inv);
    }
  }
  return out;
}

inline double lpips(const TensorF& a, const TensorF& b,
                    const FeatureExtractorPlugin& plugin) {
  if (!plugin.extract)
    throw ConfigError(
        "LPIPS plugin has no extractor; use FeatureExtractorPlugin::identity() "
        "or load one with load_feature_plugin()");
  if (!a.same_shape(b))
    throw ShapeError("lpips: shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  auto fa = plugin.extract(a);
  auto fb = plugin.extract(b);
  if (fa.size() != fb.size())
    throw ContractError("plugin returned differing stage counts");
  double total = 0.0;
  for (std::size_t s = 0; s < fa.size(); ++s) {
    if (!fa[s].features.same_shape(fb[s].features))
      throw ContractError("plugin stage '" + fa[s].name +
                          "' returned differing feature shapes");
    const TensorF na = channel_normalize(fa[s].features);
    const TensorF nb = channel_normalize(fb[s].features);
    const long c = na.dim(0), plane = na.dim(1) * na.dim(2);
    const std::vector<float>& w = fa[s].weights;
    if (!w.empty() && static_cast<long>(w.size()) != c)
      throw ConfigError("LPIPS stage '" + fa[s].name + "' provides " +
                        std::to_string(w.size()) + " weights for " +
                        std::to_string(c) + " channels");
    double sum = 0.0;
    for (long p = 0; p < plane; ++p) {
      for (long ch = 0; ch < c; ++ch) {
        const std::size_t i = static_cast<std::size_t>(ch * plane + p);
        const double d = static_cast<double>(na[i]) - static_cast<double>(nb[i]);
        const double wc = w.empty() ? 1.0 : static_cast<double>(w[ch]);
        sum += wc * d * d;
      }
    }
    total += sum / static_cast<double>(plane);
  }
  return total;
}

// ---------------------------------------------------------------------------
// File-provided backbones: a chain of strided conv+ReLU stages with trained
// kernels and per-stage channel weights, stored in one binary container.
//
// Layout (little-endian):
//   magic "MSPLPIP1" | u32 version | u32 n_stages
//   per stage: u32 name_len, name bytes,
//              u32 out_ch, u32 in_ch, u32 kernel, u32 stride,
//              f32 conv_w[out*in*k*k], f32 conv_b[out], f32 lin_w[out]
//   u64 digest of all preceding bytes
// ---------------------------------------------------------------------------

inline constexpr const char kPluginMagic[] = "MSPLPIP1";
inline constexpr std::uint32_t kPluginVersion = 1;

struct PluginStageSpec {
  std::string name;
  long stride = 2;
  TensorF conv_w;  // [out,in,k,k]
  TensorF conv_b;  // [out]
  std::vector<float> lin_w;
};

struct PluginSpec {
  std::string name;
  std::vector<PluginStageSpec> stages;
};

namespace lpips_detail {

template <class T>
void append_raw(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take_raw(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size())
    throw DataError("truncated plugin file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

inline void append_floats(std::string& out, const float* p, std::size_t n) {
  out.append(reinterpret_cast<const char*>(p), n * sizeof(float));
}

inline void take_floats(const std::string& in, std::size_t& pos, float* p,
                        std::size_t n) {
  if (pos + n * sizeof(float) > in.size())
    throw DataError("truncated plugin file");
  std::memcpy(p, in.data() + pos, n * sizeof(float));
  pos += n * sizeof(float);
}

inline void validate_stage(const PluginStageSpec& st, long expect_in) {
  if (st.conv_w.rank() != 4)
    throw ConfigError("plugin stage '" + st.name +
                      "' kernel must be [out,in,k,k]");
  const long out = st.conv_w.dim(0), in = st.conv_w.dim(1);
  if (st.conv_w.dim(2) != st.conv_w.dim(3))
    throw ConfigError("plugin stage '" + st.name + "' kernel must be square");
  if (st.conv_b.rank() != 1 || st.conv_b.dim(0) != out)
    throw ConfigError("plugin stage '" + st.name + "' bias size mismatch");
  if (static_cast<long>(st.lin_w.size()) != out)
    throw ConfigError("plugin stage '" + st.name + "' needs " +
                      std::to_string(out) + " channel weights, has " +
                      std::to_string(st.lin_w.size()));
  if (st.stride < 1)
    throw ConfigError("plugin stage '" + st.name + "' stride must be >= 1");
  if (expect_in >= 0 && in != expect_in)
    throw DataError("plugin stage '" + st.name + "' expects " +
                    std::to_string(in) + " input channels, previous stage emits " +
                    std::to_string(expect_in));
}

}  // namespace lpips_detail

inline std::uint64_t save_feature_plugin(const std::string& path,
                                         const PluginSpec& spec) {
  namespace d = lpips_detail;
  if (spec.stages.empty())
    throw ConfigError("plugin must define at least one stage");
  long prev_out = -1;
  for (const auto& st : spec.stages) {
    d::validate_stage(st, prev_out);
    prev_out = st.conv_w.dim(0);
  }
  std::string out;
  out.append(kPluginMagic, 8);
  d::append_raw<std::uint32_t>(out, kPluginVersion);
  d::append_raw<std::uint32_t>(out,
                               static_cast<std::uint32_t>(spec.stages.size()));
  for (const auto& st : spec.stages) {
    d::append_raw<std::uint32_t>(out,
                                 static_cast<std::uint32_t>(st.name.size()));
    out.append(st.name);
    d::append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(st.conv_w.dim(0)));
    d::append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(st.conv_w.dim(1)));
    d::append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(st.conv_w.dim(2)));
    d::append_raw<std::uint32_t>(out, static_cast<std::uint32_t>(st.stride));
    d::append_floats(out, st.conv_w.data(), st.conv_w.size());
    d::append_floats(out, st.conv_b.data(), st.conv_b.size());
    d::append_floats(out, st.lin_w.data(), st.lin_w.size());
  }
  const std::uint64_t digest = Digest::value_of(out.data(), out.size());
  d::append_raw<std::uint64_t>(out, digest);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write plugin file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("cannot write plugin file: " + path);
  return digest;
}

// Loads a conv-stack plugin. The extractor chains the stages, normalizing and
// weighting each stage's post-activation features during the distance.
inline FeatureExtractorPlugin load_feature_plugin(
    const std::string& path, std::uint64_t* digest_out = nullptr) {
  namespace d = lpips_detail;
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw ConfigError(
        "LPIPS plugin weights not found at " + path +
        "; supply an MSPLPIP1 weight file (docs/formats.md documents the "
        "layout) or run with the identity plugin");
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 8 + sizeof(std::uint32_t) + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), kPluginMagic, 8) != 0)
    throw DataError("not an LPIPS plugin file: " + path);
  const std::size_t payload = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + payload, sizeof(stored));
  const std::uint64_t digest = Digest::value_of(bytes.data(), payload);
  if (stored != digest)
    throw DataError("checksum mismatch in " + path);
  std::size_t pos = 8;
  const auto version = d::take_raw<std::uint32_t>(bytes, pos);
  if (version != kPluginVersion)
    throw DataError("plugin version " + std::to_string(version) +
                    " unsupported, want " + std::to_string(kPluginVersion));
  const auto n_stages = d::take_raw<std::uint32_t>(bytes, pos);
  if (n_stages == 0) throw DataError("plugin file has no stages: " + path);

  auto spec = std::make_shared<PluginSpec>();
  long prev_out = -1;
  for (std::uint32_t s = 0; s < n_stages; ++s) {
    PluginStageSpec st;
    const auto name_len = d::take_raw<std::uint32_t>(bytes, pos);
    if (pos + name_len > payload) throw DataError("truncated plugin file");
    st.name.assign(bytes.data() + pos, name_len);
    pos += name_len;
    const long out = d::take_raw<std::uint32_t>(bytes, pos);
    const long in = d::take_raw<std::uint32_t>(bytes, pos);
    const long k = d::take_raw<std::uint32_t>(bytes, pos);
    st.stride = d::take_raw<std::uint32_t>(bytes, pos);
    st.conv_w = TensorF({out, in, k, k});
    st.conv_b = TensorF({out});
    st.lin_w.resize(static_cast<std::size_t>(out));
    d::take_floats(bytes, pos, st.conv_w.data(), st.conv_w.size());
    d::take_floats(bytes, pos, st.conv_b.data(), st.conv_b.size());
    d::take_floats(bytes, pos, st.lin_w.data(), st.lin_w.size());
    d::validate_stage(st, prev_out);
    prev_out = out;
    spec->stages.push_back(std::move(st));
  }
  if (pos != payload) throw DataError("trailing bytes in plugin file: " + path);

  FeatureExtractorPlugin plugin;
  plugin.name = path;
  for (const auto& st : spec->stages) plugin.stage_names.push_back(st.name);
  plugin.extract = [spec](const TensorF& image) {
    if (image.rank() != 3)
      throw ShapeError("plugin expects a [C,H,W] image, got " +
                       image.shape_str());
    if (image.dim(0) != spec->stages.front().conv_w.dim(1))
      throw ShapeError("plugin expects " +
                       std::to_string(spec->stages.front().conv_w.dim(1)) +
                       " image channels, got " + std::to_string(image.dim(0)));
    nn::NoGradGuard guard;
    auto x = nn::constant<float>(
        image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)}));
    std::vector<FeatureStageResult> out;
    for (const auto& st : spec->stages) {
      const long k = st.conv_w.dim(2);
      auto w = nn::constant<float>(st.conv_w);
      auto b = nn::constant<float>(st.conv_b);
      x = nn::relu(nn::conv2d(x, w, b, st.stride, k / 2));
      const auto& v = x->value;
      out.push_back({st.name, v.reshaped({v.dim(1), v.dim(2), v.dim(3)}),
                     st.lin_w});
    }
    return out;
  };
  if (digest_out) *digest_out = digest;
  return plugin;
}

}  // namespace mspred::eval
