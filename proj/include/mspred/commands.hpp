// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the mspred binary: dataset generation,
// training, evaluation, prediction galleries, and ablation sweeps. Each
// command returns the process exit code on success and reports failures
// through the shared error taxonomy.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <cstring>
#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mspred/checkpoint.hpp"
#include "mspred/config.hpp"
#include "mspred/image_io.hpp"
#include "mspred/metrics.hpp"
#include "mspred/plot.hpp"
#include "mspred/trainer.hpp"

namespace mspred::cli {

// Index offsets carving disjoint sequence streams out of one generator seed.
inline constexpr long kValIndexOffset = 1L << 20;
inline constexpr long kAblateEvalOffset = 1L << 21;

inline RunConfig load_run_config(const std::string& config_file,
                                 const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!config_file.empty()) apply_config_file(cfg, config_file);
  for (const auto& kv : overrides) apply_assignment(cfg, kv);
  return cfg;
}

inline void check_model_data(const nn::ModelConfig& model,
                             const data::DatasetSpec& spec,
                             const Schedule& sched) {
  if (model.in_channels != 3)
    throw ConfigError("the data pipeline is 3-channel; set model.in_channels = 3");
  if (model.frame_h != spec.canvas_h || model.frame_w != spec.canvas_w)
    throw ConfigError("model frame size " + std::to_string(model.frame_h) +
                      "x" + std::to_string(model.frame_w) +
                      " must match the data canvas " +
                      std::to_string(spec.canvas_h) + "x" +
                      std::to_string(spec.canvas_w));
  if (model.n_digits != spec.n_digits)
    throw ConfigError("model.n_digits must match the dataset's digit count");
  data::check_length(spec, sched.total_steps());
}

// Restores a checkpoint into a freshly built model; returns the stored step.
// A digest mismatch is reported as a warning, not an error, so checkpoints
// can still be inspected under deliberately changed settings.
inline long restore_weights(const std::string& ckpt_path,
                            nn::Model<float>& model, const RunConfig& cfg) {
  train::Adam<float> opt(model.params(), cfg.optim);
  train::TrainState st;
  const bool match =
      train::load_checkpoint(ckpt_path, opt, st, config_digest(cfg));
  if (!match)
    std::fprintf(stderr,
                 "warning: config digest stored in %s does not match the "
                 "resolved config; weights loaded, but flags may describe a "
                 "different run\n",
                 ckpt_path.c_str());
  return st.step;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::uint64_t seed = 1;
  long n = 256;
  long length = 57;
  long digits = 2;
  long canvas = 64;
  double sigma = 1.5;
  std::string out = "dataset.mspdset";
  bool force = false;
};

inline int cmd_generate(const GenerateArgs& a) {
  data::DatasetSpec spec;
  spec.seed = a.seed;
  spec.n_sequences = a.n;
  spec.sequence_length = a.length;
  spec.n_digits = a.digits;
  spec.canvas_h = a.canvas;
  spec.canvas_w = a.canvas;
  spec.sigma = a.sigma;
  spec.validate();
  const Schedule sched(17, 5, {1, 4, 8});
  data::check_length(spec, sched.total_steps());
  if (std::filesystem::exists(a.out) && !a.force)
    throw DataError("refusing to overwrite existing file " + a.out +
                    " (pass --force to replace it)");
  data::SequenceGenerator gen(data::synthetic_glyphs(), spec);
  const std::uint64_t digest = data::write_dataset(a.out, gen);
  std::printf("wrote %s: %ld sequences, %ld frames each, %ldx%ld, digest %016llx\n",
              a.out.c_str(), spec.n_sequences, spec.sequence_length,
              spec.canvas_h, spec.canvas_w,
              static_cast<unsigned long long>(digest));
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  bool resume = false;
};

inline int cmd_train(const TrainArgs& a) {
  namespace fs = std::filesystem;
  RunConfig cfg = load_run_config(a.config_file, a.overrides);
  validate_config(cfg);

  Rng rng(cfg.init_seed);
  nn::Model<float> model(cfg.model, rng);
  const Schedule& sched = model.schedule;

  train::BatchSource source, val_source;
  if (!cfg.data_path.empty()) {
    auto ds = std::make_shared<const data::StoredDataset>(
        data::StoredDataset::open(cfg.data_path));
    check_model_data(cfg.model, ds->spec(), sched);
    long pool = ds->size();
    if (cfg.fixed_pool > 0) pool = std::min(pool, cfg.fixed_pool);
    source = train::make_batch_source(ds, sched, cfg.batch_size, pool);
    val_source = source;
  } else {
    validate_for_training(cfg);
    auto gen = std::make_shared<const data::SequenceGenerator>(
        data::synthetic_glyphs(), cfg.data);
    source =
        train::make_batch_source(gen, sched, cfg.batch_size, cfg.fixed_pool);
    val_source = train::make_batch_source(gen, sched, cfg.batch_size, 0,
                                          kValIndexOffset);
  }

  fs::create_directories(fs::path(cfg.run_dir) / "plots");
  fs::create_directories(fs::path(cfg.run_dir) / "checkpoints");
  write_resolved(cfg, (fs::path(cfg.run_dir) / "config.resolved").string());

  train::Trainer trainer(model, source, to_train_config(cfg),
                         config_digest(cfg), val_source);
  if (a.resume) {
    const std::string ckpt = trainer.latest_ckpt_path();
    const bool match = trainer.resume_from(ckpt);
    if (!match)
      std::fprintf(stderr,
                   "warning: %s was written under a different config digest\n",
                   ckpt.c_str());
    std::printf("resumed %s at step %ld\n", ckpt.c_str(),
                trainer.state().step);
  }
  trainer.run();
  img::plot_loss_csv(trainer.loss_csv_path(),
                     (fs::path(cfg.run_dir) / "plots" / "loss.png").string());
  std::printf("trained to step %ld; artifacts in %s\n", trainer.state().step,
              cfg.run_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string baseline;
  std::string dataset;
  std::string out = "runs/eval";
  std::string lpips = "identity";
  long limit = -1;
};

inline void write_horizon_plots(const eval::MetricReport& report,
                                const std::string& plots_dir) {
  for (const auto& m : report.metrics) {
    img::LinePlot plot;
    plot.title = m.name + " per horizon";
    plot.x_label = "t";
    plot.y_label = m.name;
    img::Series s;
    s.label = m.name;
    s.color = img::kBlue;
    for (std::size_t k = 0; k < m.per_horizon.size(); ++k)
      s.pts.emplace_back(static_cast<double>(report.horizons[k]),
                         m.per_horizon[k]);
    plot.series.push_back(std::move(s));
    img::write_png(
        (std::filesystem::path(plots_dir) / (m.name + ".png")).string(),
        plot.render());
  }
}

inline int cmd_eval(const EvalArgs& a) {
  namespace fs = std::filesystem;
  if (a.dataset.empty()) throw ConfigError("eval needs --dataset <file>");
  const bool use_ckpt = !a.checkpoint.empty();
  const bool use_base = !a.baseline.empty();
  if (use_ckpt == use_base)
    throw ConfigError(
        "eval needs exactly one of --checkpoint <file> or --baseline copylast");
  if (use_base && a.baseline != "copylast")
    throw ConfigError("unknown baseline '" + a.baseline +
                      "'; supported: copylast");

  RunConfig cfg = load_run_config(a.config_file, a.overrides);
  auto ds = std::make_shared<const data::StoredDataset>(
      data::StoredDataset::open(a.dataset));
  const Schedule sched(cfg.model.seed_len, cfg.model.horizons,
                       cfg.model.periods());

  std::unique_ptr<nn::Model<float>> model;
  eval::FramePredictor pred;
  if (use_ckpt) {
    cfg.model.validate();
    check_model_data(cfg.model, ds->spec(), sched);
    Rng rng(cfg.init_seed);
    model = std::make_unique<nn::Model<float>>(cfg.model, rng);
    const long step = restore_weights(a.checkpoint, *model, cfg);
    std::printf("evaluating %s (step %ld) on %s\n", a.checkpoint.c_str(), step,
                a.dataset.c_str());
    pred = eval::make_model_predictor(*model);
  } else {
    data::check_length(ds->spec(), sched.total_steps());
    std::printf("evaluating copylast baseline on %s\n", a.dataset.c_str());
    pred = eval::make_copylast_predictor(sched);
  }

  eval::FeatureExtractorPlugin plugin;
  eval::EvalConfig ec;
  ec.limit = a.limit;
  if (a.lpips == "identity") {
    plugin = eval::FeatureExtractorPlugin::identity();
    ec.lpips_plugin = &plugin;
  } else if (a.lpips != "none") {
    plugin = eval::load_feature_plugin(a.lpips);
    ec.lpips_plugin = &plugin;
  }

  const auto report = eval::evaluate(pred, *ds, sched, ec);
  fs::create_directories(fs::path(a.out) / "plots");
  const std::string csv = (fs::path(a.out) / "report.csv").string();
  eval::write_report_csv(csv, report);
  write_horizon_plots(report, (fs::path(a.out) / "plots").string());
  std::fputs(eval::format_report(report).c_str(), stdout);
  std::printf("report: %s\n", csv.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string dataset;
  long index = 0;
  std::string out = "predict_out";
};

inline std::pair<long, long> heat_argmax(const TensorF& heat, long mh,
                                         long mw) {
  const float* p = heat.data();
  long best = 0;
  for (long i = 1; i < mh * mw; ++i)
    if (p[i] > p[best]) best = i;
  return {best / mw, best % mw};
}

inline int cmd_predict(const PredictArgs& a) {
  namespace fs = std::filesystem;
  if (a.checkpoint.empty()) throw ConfigError("predict needs --checkpoint <file>");
  if (a.dataset.empty()) throw ConfigError("predict needs --dataset <file>");
  RunConfig cfg = load_run_config(a.config_file, a.overrides);
  const auto ds = data::StoredDataset::open(a.dataset);
  const auto seq = ds.sequence(a.index);

  cfg.model.validate();
  const Schedule sched(cfg.model.seed_len, cfg.model.horizons,
                       cfg.model.periods());
  check_model_data(cfg.model, ds.spec(), sched);
  Rng rng(cfg.init_seed);
  nn::Model<float> model(cfg.model, rng);
  restore_weights(a.checkpoint, model, cfg);

  const long C = sched.seed_len();
  const long H = ds.spec().canvas_h, W = ds.spec().canvas_w;
  const long mh = ds.spec().mid_h(), mw = ds.spec().mid_w();
  const long n = ds.spec().n_digits;
  TensorF seed({1, C, 3, H, W});
  std::memcpy(seed.data(), seq.frames.data(), sizeof(float) * seed.size());
  nn::NoGradGuard guard;
  const auto pred = model.run(seed).prediction;

  const long scale = 2, tile = W * scale, pad = 6, strip = 12, margin = 52;
  const long cell_y = (H / mh) * scale, cell_x = (W / mw) * scale;
  const long cols = static_cast<long>(pred.frame_times.size());
  const long seed_show = std::min(C, cols);
  const long row_h = strip + tile + pad;
  img::ImageU8 grid(pad + 5 * row_h, margin + cols * (tile + pad) + pad,
                    img::kWhite);

  auto gt_frame = [&](long t) {
    TensorF fr({3, H, W});
    std::memcpy(fr.data(), seq.frames.data() + (t - 1) * 3 * H * W,
                sizeof(float) * fr.size());
    return fr;
  };
  auto tile_origin = [&](long row, long col) {
    return std::pair<long, long>{pad + row * row_h,
                                 margin + col * (tile + pad)};
  };
  auto label_tile = [&](long row, long col, long t) {
    const auto [y0, x0] = tile_origin(row, col);
    img::draw_text(grid, "t=" + std::to_string(t), y0, x0, img::kBlack);
    return std::pair<long, long>{y0 + strip, x0};
  };
  const char* row_names[] = {"seed", "truth", "frame", "mid", "high"};
  for (long r = 0; r < 5; ++r)
    img::draw_text(grid, row_names[r], tile_origin(r, 0).first + strip + 4, 4,
                   img::kBlack);

  for (long k = 0; k < seed_show; ++k) {
    const long t = C - seed_show + 1 + k;
    const auto [y, x] = label_tile(0, k, t);
    img::blit_frame(grid, gt_frame(t), y, x, scale);
  }
  for (long k = 0; k < cols; ++k) {
    const long t = pred.frame_times[static_cast<std::size_t>(k)];
    const auto [y, x] = label_tile(1, k, t);
    img::blit_frame(grid, gt_frame(t), y, x, scale);
    const auto [py, px] = label_tile(2, k, t);
    img::blit_frame(grid,
                    pred.frames[static_cast<std::size_t>(k)]->value.reshaped(
                        {3, H, W}),
                    py, px, scale);
  }
  for (std::size_t k = 0; k < pred.mid_times.size(); ++k) {
    const long t = pred.mid_times[k];
    const auto [y, x] = label_tile(3, static_cast<long>(k), t);
    img::blit_frame(grid, gt_frame(t), y, x, scale);
    const TensorF heat = pred.mids[k]->value.reshaped({mh, mw});
    img::overlay_heatmap(grid, heat.data(), mh, mw, y, x, cell_y);
    const auto [ci, cj] = heat_argmax(heat, mh, mw);
    img::draw_cross(grid, y + ci * cell_y + cell_y / 2,
                    x + cj * cell_x + cell_x / 2, 4, img::kGreen);
    std::printf("mid t=%ld argmax=(%ld,%ld)\n", t, ci, cj);
  }
  for (std::size_t k = 0; k < pred.high_times.size(); ++k) {
    const long t = pred.high_times[k];
    const auto [y, x] = label_tile(4, static_cast<long>(k), t);
    img::blit_frame(grid, gt_frame(t), y, x, scale);
    const auto& coords = pred.highs[k]->value;
    std::printf("high t=%ld centers=", t);
    for (long d = 0; d < n; ++d) {
      const double cx = coords[static_cast<std::size_t>(2 * d)] * W;
      const double cy = coords[static_cast<std::size_t>(2 * d + 1)] * H;
      img::draw_cross(grid, y + std::lround(cy * scale),
                      x + std::lround(cx * scale), 4, img::kBlue);
      std::printf("(%.1f,%.1f)", cx, cy);
    }
    std::printf("\n");
  }

  fs::create_directories(a.out);
  const std::string grid_path = (fs::path(a.out) / "grid.png").string();
  img::write_png(grid_path, grid);

  const std::string anim_path = (fs::path(a.out) / "anim.gif").string();
  img::GifWriter gif(anim_path, strip + tile, 2 * tile + pad, 12);
  for (long t = 1; t <= ds.spec().sequence_length; ++t) {
    img::ImageU8 cell(strip + tile, 2 * tile + pad, img::kBlack);
    img::blit_frame(cell, gt_frame(t), strip, 0, scale);
    for (std::size_t k = 0; k < pred.mid_times.size(); ++k)
      if (pred.mid_times[k] == t)
        img::overlay_heatmap(cell,
                             pred.mids[k]->value.data(), mh, mw, strip, 0,
                             cell_y);
    for (std::size_t k = 0; k < pred.high_times.size(); ++k)
      if (pred.high_times[k] == t) {
        const auto& coords = pred.highs[k]->value;
        for (long d = 0; d < n; ++d)
          img::draw_cross(
              cell,
              strip + std::lround(coords[static_cast<std::size_t>(2 * d + 1)] *
                                  H * scale),
              std::lround(coords[static_cast<std::size_t>(2 * d)] * W * scale),
              4, img::kBlue);
      }
    for (std::size_t k = 0; k < pred.frame_times.size(); ++k)
      if (pred.frame_times[k] == t)
        img::blit_frame(cell, pred.frames[k]->value.reshaped({3, H, W}), strip,
                        tile + pad, scale);
    std::string label = "t=" + std::to_string(t);
    label += t <= C ? " seed" : " pred";
    img::draw_text(cell, label, 2, 2, img::kWhite);
    gif.add_frame(cell);
  }
  gif.close();
  std::printf("wrote %s and %s\n", grid_path.c_str(), anim_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string rows = "1,2,3,4,5,6";
  long eval_n = 64;
};

// Evaluation window over a generator: `n` sequences starting at `offset`,
// disjoint from the training stream by construction.
struct WindowSource {
  std::shared_ptr<const data::SequenceGenerator> gen;
  data::DatasetSpec window;
  long offset = 0;

  const data::DatasetSpec& spec() const { return window; }
  data::AnnotatedSequence sequence(long i) const {
    return gen->sequence(i + offset);
  }
};

struct AblateRow {
  int row = 0;
  nn::ModelConfig model;
  double mse = 0, psnr = 0, ssim = 0, lpips = 0;
};

inline std::string ablation_csv(const std::vector<AblateRow>& rows) {
  std::string out = "row,cell,spatial,temporal,mse,psnr,ssim,lpips\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%s,%s,%.9g,%.9g,%.9g,%.9g\n", r.row,
                  r.model.cell == nn::CellKind::convolutional ? "conv"
                                                              : "linear",
                  r.model.spatial_hierarchy ? "yes" : "no",
                  r.model.temporal_hierarchy ? "yes" : "no", r.mse, r.psnr,
                  r.ssim, r.lpips);
    out += buf;
  }
  return out;
}

inline std::string ablation_markdown(const std::vector<AblateRow>& rows) {
  std::string out =
      "| Row | Cell | Spatial | Temporal | MSE | PSNR | SSIM | LPIPS |\n"
      "|-----|------|---------|----------|-----|------|------|-------|\n";
  char buf[192];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "| %d | %s | %s | %s | %.5g | %.5g | %.5g | %.5g |\n", r.row,
                  r.model.cell == nn::CellKind::convolutional ? "conv"
                                                              : "linear",
                  r.model.spatial_hierarchy ? "yes" : "no",
                  r.model.temporal_hierarchy ? "yes" : "no", r.mse, r.psnr,
                  r.ssim, r.lpips);
    out += buf;
  }
  return out;
}

inline int cmd_ablate(const AblateArgs& a) {
  namespace fs = std::filesystem;
  RunConfig base = load_run_config(a.config_file, a.overrides);
  if (a.eval_n < 1) throw ConfigError("eval_n must be >= 1");

  std::vector<int> rows;
  std::stringstream ss(a.rows);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto b = tok.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = tok.find_last_not_of(" \t");
    rows.push_back(static_cast<int>(
        config_detail::parse_long("rows", tok.substr(b, e - b + 1))));
  }
  if (rows.empty()) throw ConfigError("ablate needs at least one row id");
  for (int r : rows) (void)nn::make_variant(base.model, r);

  const auto identity = eval::FeatureExtractorPlugin::identity();
  std::vector<AblateRow> results;
  for (int r : rows) {
    RunConfig cfg = base;
    cfg.model = nn::make_variant(base.model, r);
    cfg.run_dir =
        (fs::path(base.run_dir) / ("row_" + std::to_string(r))).string();
    validate_for_training(cfg);
    fs::create_directories(fs::path(cfg.run_dir) / "plots");
    write_resolved(cfg,
                   (fs::path(cfg.run_dir) / "config.resolved").string());

    Rng rng(cfg.init_seed);
    nn::Model<float> model(cfg.model, rng);
    auto gen = std::make_shared<const data::SequenceGenerator>(
        data::synthetic_glyphs(), cfg.data);
    auto source = train::make_batch_source(gen, model.schedule,
                                           cfg.batch_size, cfg.fixed_pool);
    auto val = train::make_batch_source(gen, model.schedule, cfg.batch_size,
                                        0, kValIndexOffset);
    train::Trainer trainer(model, source, to_train_config(cfg),
                           config_digest(cfg), val);
    trainer.run();
    img::plot_loss_csv(trainer.loss_csv_path(),
                       (fs::path(cfg.run_dir) / "plots" / "loss.png").string());

    WindowSource es{gen, cfg.data, kAblateEvalOffset};
    es.window.n_sequences = a.eval_n;
    eval::EvalConfig ec;
    ec.lpips_plugin = &identity;
    const auto report =
        eval::evaluate(eval::make_model_predictor(model), es, model.schedule,
                       ec);
    eval::write_report_csv((fs::path(cfg.run_dir) / "report.csv").string(),
                           report);

    AblateRow out;
    out.row = r;
    out.model = cfg.model;
    out.mse = report.find("mse")->overall;
    out.psnr = report.find("psnr")->overall;
    out.ssim = report.find("ssim")->overall;
    out.lpips = report.find("lpips")->overall;
    results.push_back(out);
    std::printf("row %d: mse %.6g psnr %.5g ssim %.5g lpips %.6g\n", r,
                out.mse, out.psnr, out.ssim, out.lpips);
  }

  fs::create_directories(base.run_dir);
  const std::string md = ablation_markdown(results);
  auto write_text = [](const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot write " + path);
    f << text;
  };
  write_text((fs::path(base.run_dir) / "ablation.csv").string(),
             ablation_csv(results));
  write_text((fs::path(base.run_dir) / "ablation.md").string(), md);
  std::fputs(md.c_str(), stdout);
  std::printf("table: %s/ablation.md\n", base.run_dir.c_str());
  return 0;
}

}  // namespace mspred::cli
