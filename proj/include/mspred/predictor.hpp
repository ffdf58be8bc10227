// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "mspred/encoder.hpp"
#include "mspred/layers.hpp"
#include "mspred/schedule.hpp"

namespace mspred::nn {

template <class T>
struct LevelState {
  std::vector<CellState<T>> cells;
  VarT<T> last_output;  // output of the most recent active tick
  long last_tick = 0;   // 0 until the level first fires
  long invocations = 0;
};

template <class T>
struct PredictorState {
  std::vector<LevelState<T>> levels;
};

// Three-level clockwork hierarchy. Each level is a chain of LSTM cells over a
// fixed hidden width; 1x1 adapters map encoder taps (seed phase) and the
// level's own previous output (prediction phase) onto that width, so cell
// shapes are identical no matter where the input comes from.
template <class T>
struct Predictor {
  Schedule schedule{17, 5, {1, 4, 8}};
  bool linear_cells = false;
  long hidden = 128, n_cells = 4, kernel = 3;
  std::array<std::pair<long, long>, 3> level_hw{};  // native (H, W) per level

  std::array<Conv2d<T>, 3> seed_adapters;
  std::array<Conv2d<T>, 3> feedback_adapters;
  std::array<std::vector<ConvLSTMCell<T>>, 3> conv_cells;
  std::array<std::vector<LinearLSTMCell<T>>, 3> lin_cells;

  Predictor() = default;
  Predictor(Schedule schedule_, bool linear, std::array<long, 3> tap_channels,
            std::array<std::pair<long, long>, 3> level_hw_, long hidden_,
            long n_cells_, long kernel_, Rng& rng)
      : schedule(std::move(schedule_)),
        linear_cells(linear),
        hidden(hidden_),
        n_cells(n_cells_),
        kernel(kernel_),
        level_hw(level_hw_) {
    if (schedule.num_levels() != 3)
      throw ConfigError("predictor expects exactly 3 levels");
    for (int l = 0; l < 3; ++l) {
      const auto li = static_cast<std::size_t>(l);
      seed_adapters[li] = Conv2d<T>(tap_channels[li], hidden, 1, 1, 0, rng);
      feedback_adapters[li] = Conv2d<T>(hidden, hidden, 1, 1, 0, rng);
      if (linear_cells) {
        const long dim = hidden * level_hw[li].first * level_hw[li].second;
        for (long k = 0; k < n_cells; ++k)
          lin_cells[li].emplace_back(dim, dim, rng);
      } else {
        for (long k = 0; k < n_cells; ++k)
          conv_cells[li].emplace_back(hidden, hidden, kernel, rng);
      }
    }
  }

  PredictorState<T> zero_state(long batch) const {
    PredictorState<T> state;
    state.levels.resize(3);
    for (int l = 0; l < 3; ++l) {
      const auto li = static_cast<std::size_t>(l);
      auto& lv = state.levels[li];
      for (long k = 0; k < n_cells; ++k)
        lv.cells.push_back(linear_cells
                               ? lin_cells[li][static_cast<std::size_t>(k)]
                                     .zero_state(batch)
                               : conv_cells[li][static_cast<std::size_t>(k)]
                                     .zero_state(batch, level_hw[li].first,
                                                 level_hw[li].second));
    }
    return state;
  }

  // Runs one level's cell chain on an already-adapted input. Guards the
  // clock: calling this on an inactive tick is a programming bug.
  VarT<T> step_level(int level, long t, const VarT<T>& input,
                     PredictorState<T>& state) const {
    if (!schedule.ticks(level, t))
      throw ScheduleError("level " + std::to_string(level) +
                          " stepped at t=" + std::to_string(t) +
                          " where it is not active");
    auto& lv = state.levels[static_cast<std::size_t>(level)];
    VarT<T> h = input;
    if (linear_cells) {
      const auto [lh, lw] = level_hw[static_cast<std::size_t>(level)];
      const long batch = h->value.dim(0);
      h = reshape<T>(h, {batch, hidden * lh * lw});
      for (long k = 0; k < n_cells; ++k) {
        auto& cs = lv.cells[static_cast<std::size_t>(k)];
        cs = lin_cells[static_cast<std::size_t>(level)]
                      [static_cast<std::size_t>(k)]
                          .forward(h, cs);
        h = cs.h;
      }
      h = reshape<T>(h, {batch, hidden, lh, lw});
    } else {
      for (long k = 0; k < n_cells; ++k) {
        auto& cs = lv.cells[static_cast<std::size_t>(k)];
        cs = conv_cells[static_cast<std::size_t>(level)]
                       [static_cast<std::size_t>(k)]
                           .forward(h, cs);
        h = cs.h;
      }
    }
    lv.last_output = h;
    lv.last_tick = t;
    ++lv.invocations;
    return h;
  }

  // Advances every level that is due at t. Seed phase consumes the encoder
  // pyramid; prediction phase consumes each level's own last output.
  void tick(long t, const FeaturePyramid<T>* pyramid,
            PredictorState<T>& state) const {
    const bool seed = schedule.in_seed(t);
    if (seed && pyramid == nullptr)
      throw StateError("seed phase tick requires encoder features");
    if (!seed && pyramid != nullptr)
      throw StateError("prediction phase tick must not receive new encodings");
    for (int l = 0; l < 3; ++l) {
      if (!schedule.ticks(l, t)) continue;
      const auto li = static_cast<std::size_t>(l);
      VarT<T> input;
      if (seed) {
        const VarT<T>& tap = l == 0   ? pyramid->low
                             : l == 1 ? pyramid->mid
                                      : pyramid->high;
        input = seed_adapters[li].forward(tap);
      } else {
        input = feedback_adapters[li].forward(state.levels[li].last_output);
      }
      step_level(l, t, input, state);
    }
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    for (int l = 0; l < 3; ++l) {
      const auto li = static_cast<std::size_t>(l);
      const std::string base = prefix + ".level" + std::to_string(l);
      seed_adapters[li].collect(base + ".seed_adapter", out);
      feedback_adapters[li].collect(base + ".feedback_adapter", out);
      for (long k = 0; k < n_cells; ++k) {
        const std::string cell = base + ".cell" + std::to_string(k);
        if (linear_cells)
          lin_cells[li][static_cast<std::size_t>(k)].collect(cell, out);
        else
          conv_cells[li][static_cast<std::size_t>(k)].collect(cell, out);
      }
    }
  }
};

}  // namespace mspred::nn
