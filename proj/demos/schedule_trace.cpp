// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0
//
// Prints the clockwork activation table: which levels tick at each timestep,
// and which timesteps produce frame, heatmap and coordinate outputs.

#include <cstdio>

#include "mspred/schedule.hpp"

int main() {
  mspred::Schedule sched(17, 5, {1, 4, 8});
  std::printf("seed frames 1..%ld, predictions to t=%ld\n\n", sched.seed_len(),
              sched.total_steps());
  std::printf("  t | ticks   | emits\n");
  std::printf("----+---------+------\n");
  for (long t = 1; t <= sched.total_steps(); ++t) {
    std::printf("%3ld | ", t);
    for (int l = 0; l < sched.num_levels(); ++l)
      std::printf("%c ", sched.ticks(l, t) ? '0' + l : '.');
    std::printf("  | ");
    const char* names[] = {"frame", "mid", "high"};
    bool any = false;
    for (int l = 0; l < sched.num_levels(); ++l)
      if (sched.emits(l, t)) {
        std::printf("%s%s", any ? "+" : "", names[l]);
        any = true;
      }
    std::printf("\n");
  }
  for (int l = 0; l < sched.num_levels(); ++l) {
    std::printf("\nlevel %d emission times:", l);
    for (long t : sched.emission_times(l)) std::printf(" %ld", t);
  }
  std::printf("\n");
  return 0;
}
