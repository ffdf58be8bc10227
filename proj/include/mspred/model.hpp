// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "mspred/decoder.hpp"
#include "mspred/encoder.hpp"
#include "mspred/predictor.hpp"
#include "mspred/schedule.hpp"

namespace mspred::nn {

enum class CellKind { convolutional, linear };

struct ModelConfig {
  long in_channels = 3;
  long frame_h = 64, frame_w = 64;
  std::array<long, 4> stage_channels{32, 64, 128, 256};
  EncoderStyle encoder_style = EncoderStyle::dcgan;
  long hidden = 128, n_cells = 4, kernel = 3;
  long seed_len = 17, horizons = 5;
  long t1 = 4, t2 = 8;
  long n_digits = 2;
  CellKind cell = CellKind::convolutional;
  bool spatial_hierarchy = true;
  bool temporal_hierarchy = true;

  std::vector<long> periods() const {
    if (!temporal_hierarchy) return {1, 1, 1};
    return {1, t1, t2};
  }

  void validate() const {
    if (in_channels < 1) throw ConfigError("model: in_channels must be >= 1");
    if (frame_h < 16 || frame_w < 16 || frame_h % 16 != 0 || frame_w % 16 != 0)
      throw ConfigError("model: frame size must be divisible by 16");
    for (long c : stage_channels)
      if (c < 1) throw ConfigError("model: stage channels must be >= 1");
    if (hidden < 1) throw ConfigError("model: hidden must be >= 1");
    if (n_cells < 1) throw ConfigError("model: n_cells must be >= 1");
    if (kernel < 1 || kernel % 2 == 0)
      throw ConfigError("model: kernel must be odd");
    if (seed_len < 1) throw ConfigError("model: seed_len must be >= 1");
    if (horizons < 1) throw ConfigError("model: horizons must be >= 1");
    if (temporal_hierarchy && !(1 < t1 && t1 < t2))
      throw ConfigError("model: periods must satisfy 1 < t1 < t2");
    if (n_digits < 1) throw ConfigError("model: n_digits must be >= 1");
  }
};

// Ablation grid rows: cell kind, spatial hierarchy, temporal hierarchy.
inline ModelConfig make_variant(ModelConfig base, int row) {
  switch (row) {
    case 1:
      base.cell = CellKind::convolutional;
      base.spatial_hierarchy = true;
      base.temporal_hierarchy = true;
      break;
    case 2:
      base.cell = CellKind::linear;
      base.spatial_hierarchy = true;
      base.temporal_hierarchy = true;
      break;
    case 3:
      base.cell = CellKind::convolutional;
      base.spatial_hierarchy = false;
      base.temporal_hierarchy = true;
      break;
    case 4:
      base.cell = CellKind::convolutional;
      base.spatial_hierarchy = true;
      base.temporal_hierarchy = false;
      break;
    case 5:
      base.cell = CellKind::convolutional;
      base.spatial_hierarchy = false;
      base.temporal_hierarchy = false;
      break;
    case 6:
      base.cell = CellKind::linear;
      base.spatial_hierarchy = false;
      base.temporal_hierarchy = false;
      break;
    default:
      throw ConfigError("variant row must be 1..6, got " + std::to_string(row));
  }
  return base;
}

template <class T>
struct MultiScalePrediction {
  std::vector<VarT<T>> frames, mids, highs;
  std::vector<long> frame_times, mid_times, high_times;
};

struct TraceStep {
  long t = 0;
  std::array<bool, 3> ticked{};
  std::array<long, 3> buffer_time{};
  bool frame_emitted = false, mid_emitted = false, high_emitted = false;
};

struct RolloutTrace {
  std::vector<TraceStep> steps;
  long encoder_calls = 0;
  std::array<long, 3> level_invocations{};
};

template <class T>
struct RolloutResult {
  MultiScalePrediction<T> prediction;
  RolloutTrace trace;
};

template <class T>
struct Model {
  ModelConfig cfg;
  Schedule schedule{17, 5, {1, 4, 8}};
  Encoder<T> encoder;
  Predictor<T> predictor;
  Decoder<T> decoder;

  Model(const ModelConfig& config, Rng& rng)
      : cfg(config), schedule(make_schedule(config)) {
    cfg.validate();
    const auto& sc = cfg.stage_channels;
    const std::array<long, 3> taps =
        cfg.spatial_hierarchy ? std::array<long, 3>{sc[1], sc[2], sc[3]}
                              : std::array<long, 3>{sc[3], sc[3], sc[3]};
    const std::array<std::pair<long, long>, 3> level_hw{
        std::pair<long, long>{cfg.frame_h / 4, cfg.frame_w / 4},
        {cfg.frame_h / 8, cfg.frame_w / 8},
        {cfg.frame_h / 16, cfg.frame_w / 16}};
    encoder = Encoder<T>(cfg.in_channels, sc, cfg.encoder_style, rng);
    predictor =
        Predictor<T>(schedule, cfg.cell == CellKind::linear, taps, level_hw,
                     cfg.hidden, cfg.n_cells, cfg.kernel, rng);
    decoder = Decoder<T>(taps, sc, cfg.hidden, cfg.in_channels,
                         2 * cfg.n_digits, level_hw[2], rng);
  }

  NamedParams<T> params() const {
    NamedParams<T> out;
    encoder.collect("encoder", out);
    predictor.collect("predictor", out);
    decoder.collect("decoder", out);
    return out;
  }

  // Full rollout over a seed sequence [B, C, in_ch, H, W]: seed phase feeds
  // encoder taps to whichever levels tick; the prediction phase is
  // feature-space autoregression (the encoder is never called again), with
  // heads decoding from each level's most recent output.
  RolloutResult<T> run(const TensorT<T>& seq) {
    if (seq.rank() != 5)
      throw ConfigError("rollout expects [B,C,ch,H,W] input, got " +
                        seq.shape_str());
    if (seq.dim(1) != cfg.seed_len)
      throw ConfigError("rollout: got " + std::to_string(seq.dim(1)) +
                        " seed frames, config wants " +
                        std::to_string(cfg.seed_len));
    const long batch = seq.dim(0);

    RolloutResult<T> result;
    auto state = predictor.zero_state(batch);
    std::optional<FeaturePyramid<T>> skips;
    const long encoder_calls_before = encoder.calls();

    for (long t = 1; t <= schedule.total_steps(); ++t) {
      TraceStep ts;
      ts.t = t;
      if (schedule.in_seed(t)) {
        auto frame = constant<T>(slice_frame(seq, t - 1));
        auto pyramid = adapt_pyramid(encoder.encode(frame));
        predictor.tick(t, &pyramid, state);
        if (t == cfg.seed_len) skips = pyramid;
      } else {
        predictor.tick(t, nullptr, state);
      }
      for (int l = 0; l < 3; ++l) {
        const auto li = static_cast<std::size_t>(l);
        ts.ticked[li] = state.levels[li].last_tick == t;
        ts.buffer_time[li] = state.levels[li].last_tick;
      }
      if (!schedule.in_seed(t)) {
        const auto& o0 = state.levels[0].last_output;
        const auto& o1 = state.levels[1].last_output;
        const auto& o2 = state.levels[2].last_output;
        if (schedule.emits(0, t)) {
          result.prediction.frames.push_back(
              decoder.decode_frame(o0, o1, o2, *skips));
          result.prediction.frame_times.push_back(t);
          ts.frame_emitted = true;
        }
        if (schedule.emits(1, t)) {
          result.prediction.mids.push_back(decoder.decode_mid(o1, o2));
          result.prediction.mid_times.push_back(t);
          ts.mid_emitted = true;
        }
        if (schedule.emits(2, t)) {
          result.prediction.highs.push_back(decoder.decode_high(o2));
          result.prediction.high_times.push_back(t);
          ts.high_emitted = true;
        }
      }
      result.trace.steps.push_back(ts);
    }

    result.trace.encoder_calls = encoder.calls() - encoder_calls_before;
    for (int l = 0; l < 3; ++l)
      result.trace.level_invocations[static_cast<std::size_t>(l)] =
          state.levels[static_cast<std::size_t>(l)].invocations;
    return result;
  }

 private:
  static Schedule make_schedule(const ModelConfig& c) {
    c.validate();
    return Schedule(c.seed_len, c.horizons, c.periods());
  }

  TensorT<T> slice_frame(const TensorT<T>& seq, long index) const {
    const long batch = seq.dim(0), steps = seq.dim(1);
    const long chw = seq.dim(2) * seq.dim(3) * seq.dim(4);
    TensorT<T> frame({batch, seq.dim(2), seq.dim(3), seq.dim(4)});
    for (long b = 0; b < batch; ++b)
      std::memcpy(frame.data() + b * chw,
                  seq.data() + (b * steps + index) * chw,
                  sizeof(T) * static_cast<std::size_t>(chw));
    return frame;
  }

  // With the spatial hierarchy disabled every level consumes the bottleneck
  // tap, nearest-upsampled to the level's native resolution so downstream
  // shapes are unchanged.
  FeaturePyramid<T> adapt_pyramid(FeaturePyramid<T> pyr) const {
    if (cfg.spatial_hierarchy) return pyr;
    FeaturePyramid<T> out;
    out.high = pyr.high;
    out.mid = upsample_nearest<T>(pyr.high, 2);
    out.low = upsample_nearest<T>(pyr.high, 4);
    return out;
  }
};

// Baseline that repeats the last seed frame for every prediction step. Only
// frames are produced; there is nothing sensible to copy for the other heads.
template <class T>
MultiScalePrediction<T> copy_last_baseline(const TensorT<T>& seq,
                                           const Schedule& schedule) {
  if (seq.rank() != 5)
    throw ConfigError("baseline expects [B,C,ch,H,W] input, got " +
                      seq.shape_str());
  if (seq.dim(1) < schedule.seed_len())
    throw ConfigError("baseline: sequence shorter than the seed phase");
  const long batch = seq.dim(0), steps = seq.dim(1);
  const long chw = seq.dim(2) * seq.dim(3) * seq.dim(4);
  TensorT<T> last({batch, seq.dim(2), seq.dim(3), seq.dim(4)});
  for (long b = 0; b < batch; ++b)
    std::memcpy(last.data() + b * chw,
                seq.data() + (b * steps + schedule.seed_len() - 1) * chw,
                sizeof(T) * static_cast<std::size_t>(chw));

  MultiScalePrediction<T> pred;
  pred.frame_times = schedule.emission_times(0);
  for (std::size_t i = 0; i < pred.frame_times.size(); ++i)
    pred.frames.push_back(constant<T>(last));
  return pred;
}

}  // namespace mspred::nn
