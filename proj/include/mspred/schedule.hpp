// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mspred/common.hpp"

namespace mspred {

// Clockwork timing for the level hierarchy. Time is 1-based. Level l runs at
// period p_l and is active exactly when (t - 1) mod p_l == 0, so every level
// fires at t = 1. After `seed_len` observed steps, each level keeps ticking
// until it has produced `horizons` prediction outputs, i.e. up to
// t = seed_len + p_l * horizons; any half-open window of that length contains
// exactly `horizons` active steps regardless of alignment.
class Schedule {
 public:
  Schedule(long seed_len, long horizons, std::vector<long> periods)
      : seed_len_(seed_len), horizons_(horizons), periods_(std::move(periods)) {
    if (seed_len_ < 1) throw ConfigError("schedule: seed_len must be >= 1");
    if (horizons_ < 1) throw ConfigError("schedule: horizons must be >= 1");
    if (periods_.empty()) throw ConfigError("schedule: no levels");
    if (periods_.front() != 1)
      throw ConfigError("schedule: lowest level must have period 1");
    for (std::size_t i = 0; i < periods_.size(); ++i) {
      if (periods_[i] < 1)
        throw ConfigError("schedule: period must be >= 1, got " +
                          std::to_string(periods_[i]));
      if (i > 0 && periods_[i] < periods_[i - 1])
        throw ConfigError("schedule: periods must be non-decreasing");
    }
  }

  long seed_len() const { return seed_len_; }
  long horizons() const { return horizons_; }
  int num_levels() const { return static_cast<int>(periods_.size()); }
  long period(int level) const { return periods_.at(static_cast<std::size_t>(level)); }
  const std::vector<long>& periods() const { return periods_; }

  // The bare clock rule, ignoring the stop time.
  bool active(int level, long t) const {
    if (t < 1) throw ScheduleError("schedule: time is 1-based");
    return (t - 1) % period(level) == 0;
  }

  // Last timestep at which the level still ticks.
  long stop_time(int level) const {
    return seed_len_ + period(level) * horizons_;
  }

  long total_steps() const { return stop_time(num_levels() - 1); }

  bool in_seed(long t) const { return t <= seed_len_; }

  // True when the level actually advances at t: active and not yet stopped.
  bool ticks(int level, long t) const {
    return t <= stop_time(level) && active(level, t);
  }

  // An output is emitted whenever a level ticks during the prediction phase.
  bool emits(int level, long t) const { return t > seed_len_ && ticks(level, t); }

  long tick_count(int level) const {
    return (stop_time(level) - 1) / period(level) + 1;
  }

  long seed_tick_count(int level) const {
    return (seed_len_ - 1) / period(level) + 1;
  }

  std::vector<long> emission_times(int level) const {
    std::vector<long> out;
    out.reserve(static_cast<std::size_t>(horizons_));
    for (long t = seed_len_ + 1; t <= stop_time(level); ++t)
      if (active(level, t)) out.push_back(t);
    return out;
  }

 private:
  long seed_len_;
  long horizons_;
  std::vector<long> periods_;
};

}  // namespace mspred
