// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mspred/checkpoint.hpp"
#include "mspred/datagen.hpp"
#include "mspred/loss.hpp"
#include "mspred/model.hpp"
#include "mspred/optim.hpp"

namespace mspred::train {

struct Batch {
  TensorF seed;  // [B, C, in_channels, H, W]
  TargetSet targets;
};

// Maps a 0-based step index to its training batch; must be deterministic.
using BatchSource = std::function<Batch(long step)>;

struct TrainConfig {
  long steps = 200;
  long batch_size = 4;
  long ckpt_every = 100;
  long val_every = 0;  // 0 disables validation
  AdamConfig adam;
  LossWeights weights;
  bool true_norm = false;
  std::string run_dir;  // empty writes no artifacts

  void validate() const {
    if (steps < 1) throw ConfigError("steps must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (ckpt_every < 1) throw ConfigError("ckpt_every must be positive");
    if (val_every < 0) throw ConfigError("val_every must be >= 0");
    adam.validate();
    weights.validate();
  }
};

struct TrainRecord {
  long step = 0;
  double total = 0.0;
  double frame = 0.0;
  double mid = 0.0;
  double high = 0.0;
  double grad_norm = 0.0;
  double wall_time = 0.0;
};

// Builds batches from any sequence source exposing spec() and sequence(i).
// Step k draws indices k*batch_size + b (plus `index_offset`); a positive
// `fixed_pool` folds indices back onto the first `fixed_pool` sequences.
template <class Source>
BatchSource make_batch_source(std::shared_ptr<const Source> gen,
                              const Schedule& sched, long batch_size,
                              long fixed_pool = 0, long index_offset = 0) {
  check_length(gen->spec(), sched.total_steps());
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  return [gen, sched, batch_size, fixed_pool, index_offset](long step) {
    const auto& spec = gen->spec();
    const long C = sched.seed_len();
    const long H = spec.canvas_h, W = spec.canvas_w;
    const long mh = spec.mid_h(), mw = spec.mid_w();
    const long hd = 2 * spec.n_digits;
    Batch out;
    out.seed = TensorF({batch_size, C, 3, H, W});
    out.targets.frame_times = sched.emission_times(0);
    out.targets.mid_times = sched.emission_times(1);
    out.targets.high_times = sched.emission_times(2);
    for (std::size_t i = 0; i < out.targets.frame_times.size(); ++i)
      out.targets.frames.emplace_back(TensorF::Shape{batch_size, 3, H, W});
    for (std::size_t i = 0; i < out.targets.mid_times.size(); ++i)
      out.targets.mids.emplace_back(TensorF::Shape{batch_size, 1, mh, mw});
    for (std::size_t i = 0; i < out.targets.high_times.size(); ++i)
      out.targets.highs.emplace_back(TensorF::Shape{batch_size, hd});
    const long frame_sz = 3 * H * W;
    const long mid_sz = mh * mw;
    for (long b = 0; b < batch_size; ++b) {
      long idx = step * batch_size + b + index_offset;
      if (fixed_pool > 0) idx %= fixed_pool;
      const auto seq = gen->sequence(idx);
      std::memcpy(out.seed.data() + b * C * frame_sz, seq.frames.data(),
                  sizeof(float) * static_cast<std::size_t>(C * frame_sz));
      for (std::size_t i = 0; i < out.targets.frames.size(); ++i) {
        const long t = out.targets.frame_times[i];
        std::memcpy(out.targets.frames[i].data() + b * frame_sz,
                    seq.frames.data() + (t - 1) * frame_sz,
                    sizeof(float) * static_cast<std::size_t>(frame_sz));
      }
      for (std::size_t i = 0; i < out.targets.mids.size(); ++i) {
        const long t = out.targets.mid_times[i];
        std::memcpy(out.targets.mids[i].data() + b * mid_sz,
                    seq.mid_targets.data() + (t - 1) * mid_sz,
                    sizeof(float) * static_cast<std::size_t>(mid_sz));
      }
      for (std::size_t i = 0; i < out.targets.highs.size(); ++i) {
        const long t = out.targets.high_times[i];
        std::memcpy(out.targets.highs[i].data() + b * hd,
                    seq.high_targets.data() + (t - 1) * hd,
                    sizeof(float) * static_cast<std::size_t>(hd));
      }
    }
    return out;
  };
}

inline BatchSource make_datagen_source(
    std::shared_ptr<const data::SequenceGenerator> gen, const Schedule& sched,
    long batch_size, long fixed_pool = 0, long index_offset = 0) {
  return make_batch_source(gen, sched, batch_size, fixed_pool, index_offset);
}

class Trainer {
 public:
  Trainer(nn::Model<float>& model, BatchSource source, TrainConfig cfg,
          uint64_t config_digest = 0, BatchSource val_source = nullptr)
      : model_(model),
        source_(std::move(source)),
        val_source_(std::move(val_source)),
        cfg_(cfg),
        config_digest_(config_digest),
        opt_(model.params(), cfg.adam),
        start_(std::chrono::steady_clock::now()) {
    cfg_.validate();
    if (!source_) throw ConfigError("trainer needs a batch source");
  }

  TrainState& state() { return state_; }
  Adam<float>& optimizer() { return opt_; }
  const TrainConfig& config() const { return cfg_; }

  // Returns true when the stored config digest matches this trainer's.
  bool resume_from(const std::string& ckpt_path) {
    return load_checkpoint(ckpt_path, opt_, state_, config_digest_);
  }

  TrainRecord step_once() {
    const Batch batch = source_(state_.step);
    auto rollout = model_.run(batch.seed);
    auto terms =
        compute_loss(rollout.prediction, batch.targets, cfg_.weights,
                     !cfg_.true_norm);
    opt_.zero_grad();
    nn::backward(terms.total);
    const double gn = opt_.grad_norm();

    TrainRecord rec;
    rec.step = state_.step + 1;
    rec.total = terms.total_v;
    rec.frame = terms.frame_v;
    rec.mid = terms.mid_v;
    rec.high = terms.high_v;
    rec.grad_norm = gn;
    rec.wall_time = elapsed();
    if (!std::isfinite(rec.total) || !std::isfinite(gn))
      throw NumericError(
          "non-finite loss at step " + std::to_string(rec.step) + ": total=" +
          std::to_string(rec.total) + " frame=" + std::to_string(rec.frame) +
          " mid=" + std::to_string(rec.mid) + " high=" +
          std::to_string(rec.high) + " grad_norm=" + std::to_string(gn));
    opt_.step();
    ++state_.step;
    return rec;
  }

  // Runs from the current step to cfg.steps, appending loss records and
  // writing periodic checkpoints when a run directory is configured.
  void run() {
    namespace fs = std::filesystem;
    const bool artifacts = !cfg_.run_dir.empty();
    if (artifacts) {
      fs::create_directories(fs::path(cfg_.run_dir) / "checkpoints");
      if (!fs::exists(loss_csv_path()))
        append_line(loss_csv_path(), "step,total,frame,mid,high,grad_norm");
      if (val_source_ && cfg_.val_every > 0 && !fs::exists(val_csv_path()))
        append_line(val_csv_path(), "step,total,frame,mid,high");
    }
    while (state_.step < cfg_.steps) {
      const TrainRecord rec = step_once();
      if (artifacts) append_line(loss_csv_path(), format_record(rec));
      if (val_source_ && cfg_.val_every > 0 &&
          (state_.step % cfg_.val_every == 0 || state_.step == cfg_.steps))
        validate_once(artifacts);
      if (artifacts &&
          (state_.step % cfg_.ckpt_every == 0 || state_.step == cfg_.steps))
        save_snapshot();
    }
  }

  std::string loss_csv_path() const {
    return (std::filesystem::path(cfg_.run_dir) / "loss.csv").string();
  }
  std::string val_csv_path() const {
    return (std::filesystem::path(cfg_.run_dir) / "val.csv").string();
  }
  std::string latest_ckpt_path() const {
    return (std::filesystem::path(cfg_.run_dir) / "checkpoints" /
            "latest.mspckpt")
        .string();
  }

  // Wall time stays out of the log so identical runs write identical bytes.
  static std::string format_record(const TrainRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%.9g,%.9g,%.9g", r.step,
                  r.total, r.frame, r.mid, r.high, r.grad_norm);
    return std::string(buf);
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

  static void append_line(const std::string& path, const std::string& line) {
    std::ofstream f(path, std::ios::app);
    if (!f) throw DataError("cannot write log: " + path);
    f << line << "\n";
  }

  void validate_once(bool artifacts) {
    nn::NoGradGuard guard;
    const Batch batch = val_source_(state_.step);
    auto rollout = model_.run(batch.seed);
    auto terms =
        compute_loss(rollout.prediction, batch.targets, cfg_.weights,
                     !cfg_.true_norm);
    if (terms.total_v < state_.best_val) state_.best_val = terms.total_v;
    if (artifacts) {
      char buf[192];
      std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%.9g,%.9g", state_.step,
                    terms.total_v, terms.frame_v, terms.mid_v, terms.high_v);
      append_line(val_csv_path(), std::string(buf));
    }
  }

  void save_snapshot() {
    namespace fs = std::filesystem;
    char name[64];
    std::snprintf(name, sizeof(name), "step_%06ld.mspckpt", state_.step);
    const auto dir = fs::path(cfg_.run_dir) / "checkpoints";
    save_checkpoint((dir / name).string(), opt_, state_, config_digest_);
    save_checkpoint(latest_ckpt_path(), opt_, state_, config_digest_);
  }

  nn::Model<float>& model_;
  BatchSource source_;
  BatchSource val_source_;
  TrainConfig cfg_;
  uint64_t config_digest_;
  Adam<float> opt_;
  TrainState state_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace mspred::train
