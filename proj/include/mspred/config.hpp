// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mspred/common.hpp"
#include "mspred/datagen.hpp"
#include "mspred/digest.hpp"
#include "mspred/model.hpp"
#include "mspred/trainer.hpp"

namespace mspred::cli {

// Every run is described by one flat dotted-key document. The same document
// drives training, evaluation and ablations; its canonical rendering is
// digested and stored in checkpoints so artifacts can be traced to settings.
struct RunConfig {
  nn::ModelConfig model;
  train::AdamConfig optim;
  train::LossWeights loss;
  bool true_norm = false;
  data::DatasetSpec data;
  std::string data_path;  // optional dataset container; empty generates on the fly
  long steps = 200;
  long batch_size = 16;
  long ckpt_every = 100;
  long val_every = 50;
  long fixed_pool = 0;
  std::uint64_t init_seed = 7;
  std::string run_dir = "runs/latest";
};

namespace config_detail {

inline long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long out = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v +
                      "' as an integer");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::uint64_t out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v +
                      "' as an unsigned integer");
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v +
                      "' as a number");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': cannot parse '" + v +
                    "' as a bool (use true/false)");
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace config_detail

struct FieldDef {
  std::string key;
  std::string doc;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<FieldDef>& config_schema() {
  namespace d = config_detail;
  using Set = std::function<void(RunConfig&, const std::string&)>;
  using Get = std::function<std::string(const RunConfig&)>;
  auto L = [](std::string key, std::string doc, long RunConfig::*p) {
    return FieldDef{key, doc,
                    [key, p](RunConfig& c, const std::string& v) {
                      c.*p = d::parse_long(key, v);
                    },
                    [p](const RunConfig& c) { return std::to_string(c.*p); }};
  };
  auto field = [](std::string key, std::string doc, Set set, Get get) {
    return FieldDef{std::move(key), std::move(doc), std::move(set),
                    std::move(get)};
  };
  static const std::vector<FieldDef> schema = [&] {
    std::vector<FieldDef> s;
    // model
    s.push_back(field(
        "model.in_channels", "image channels fed to the encoder",
        [](RunConfig& c, const std::string& v) {
          c.model.in_channels = d::parse_long("model.in_channels", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.in_channels); }));
    s.push_back(field(
        "model.frame_h", "frame height (divisible by 16)",
        [](RunConfig& c, const std::string& v) {
          c.model.frame_h = d::parse_long("model.frame_h", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.frame_h); }));
    s.push_back(field(
        "model.frame_w", "frame width (divisible by 16)",
        [](RunConfig& c, const std::string& v) {
          c.model.frame_w = d::parse_long("model.frame_w", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.frame_w); }));
    s.push_back(field(
        "model.stages", "encoder stage channels as c1,c2,c3,c4",
        [](RunConfig& c, const std::string& v) {
          std::array<long, 4> out{};
          std::size_t pos = 0;
          for (int i = 0; i < 4; ++i) {
            const std::size_t comma = v.find(',', pos);
            const bool last = i == 3;
            if (last != (comma == std::string::npos))
              throw ConfigError(
                  "config key 'model.stages': want four comma-separated "
                  "integers, got '" + v + "'");
            out[static_cast<std::size_t>(i)] = d::parse_long(
                "model.stages", v.substr(pos, last ? std::string::npos
                                                   : comma - pos));
            pos = comma + 1;
          }
          c.model.stage_channels = out;
        },
        [](const RunConfig& c) {
          std::string out;
          for (int i = 0; i < 4; ++i)
            out += (i ? "," : "") +
                   std::to_string(c.model.stage_channels[static_cast<std::size_t>(i)]);
          return out;
        }));
    s.push_back(field(
        "model.encoder", "encoder style: dcgan or vgg",
        [](RunConfig& c, const std::string& v) {
          if (v == "dcgan")
            c.model.encoder_style = nn::EncoderStyle::dcgan;
          else if (v == "vgg")
            c.model.encoder_style = nn::EncoderStyle::vgg;
          else
            throw ConfigError(
                "config key 'model.encoder': want dcgan or vgg, got '" + v +
                "'");
        },
        [](const RunConfig& c) {
          return c.model.encoder_style == nn::EncoderStyle::dcgan
                     ? std::string("dcgan")
                     : std::string("vgg");
        }));
    s.push_back(field(
        "model.hidden", "recurrent state channels per cell",
        [](RunConfig& c, const std::string& v) {
          c.model.hidden = d::parse_long("model.hidden", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.hidden); }));
    s.push_back(field(
        "model.n_cells", "chained recurrent cells per level",
        [](RunConfig& c, const std::string& v) {
          c.model.n_cells = d::parse_long("model.n_cells", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.n_cells); }));
    s.push_back(field(
        "model.kernel", "recurrent conv kernel size (odd)",
        [](RunConfig& c, const std::string& v) {
          c.model.kernel = d::parse_long("model.kernel", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.kernel); }));
    s.push_back(field(
        "model.seed_len", "observed context frames per sequence",
        [](RunConfig& c, const std::string& v) {
          c.model.seed_len = d::parse_long("model.seed_len", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.seed_len); }));
    s.push_back(field(
        "model.horizons", "predictions emitted per head",
        [](RunConfig& c, const std::string& v) {
          c.model.horizons = d::parse_long("model.horizons", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.horizons); }));
    s.push_back(field(
        "model.t1", "period of the middle level",
        [](RunConfig& c, const std::string& v) {
          c.model.t1 = d::parse_long("model.t1", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.t1); }));
    s.push_back(field(
        "model.t2", "period of the top level",
        [](RunConfig& c, const std::string& v) {
          c.model.t2 = d::parse_long("model.t2", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.t2); }));
    s.push_back(field(
        "model.n_digits", "objects whose centers the high head regresses",
        [](RunConfig& c, const std::string& v) {
          c.model.n_digits = d::parse_long("model.n_digits", v);
        },
        [](const RunConfig& c) { return std::to_string(c.model.n_digits); }));
    s.push_back(field(
        "model.cell", "recurrent cell kind: conv or linear",
        [](RunConfig& c, const std::string& v) {
          if (v == "conv")
            c.model.cell = nn::CellKind::convolutional;
          else if (v == "linear")
            c.model.cell = nn::CellKind::linear;
          else
            throw ConfigError(
                "config key 'model.cell': want conv or linear, got '" + v +
                "'");
        },
        [](const RunConfig& c) {
          return c.model.cell == nn::CellKind::convolutional
                     ? std::string("conv")
                     : std::string("linear");
        }));
    s.push_back(field(
        "model.spatial_hierarchy", "per-level encoder taps vs shared bottleneck",
        [](RunConfig& c, const std::string& v) {
          c.model.spatial_hierarchy = d::parse_bool("model.spatial_hierarchy", v);
        },
        [](const RunConfig& c) {
          return std::string(c.model.spatial_hierarchy ? "true" : "false");
        }));
    s.push_back(field(
        "model.temporal_hierarchy", "slow periods (1,t1,t2) vs all-ones",
        [](RunConfig& c, const std::string& v) {
          c.model.temporal_hierarchy =
              d::parse_bool("model.temporal_hierarchy", v);
        },
        [](const RunConfig& c) {
          return std::string(c.model.temporal_hierarchy ? "true" : "false");
        }));
    // optimizer
    s.push_back(field(
        "optim.lr", "Adam learning rate",
        [](RunConfig& c, const std::string& v) {
          c.optim.lr = d::parse_double("optim.lr", v);
        },
        [](const RunConfig& c) { return d::format_double(c.optim.lr); }));
    s.push_back(field(
        "optim.beta1", "Adam first-moment decay",
        [](RunConfig& c, const std::string& v) {
          c.optim.beta1 = d::parse_double("optim.beta1", v);
        },
        [](const RunConfig& c) { return d::format_double(c.optim.beta1); }));
    s.push_back(field(
        "optim.beta2", "Adam second-moment decay",
        [](RunConfig& c, const std::string& v) {
          c.optim.beta2 = d::parse_double("optim.beta2", v);
        },
        [](const RunConfig& c) { return d::format_double(c.optim.beta2); }));
    s.push_back(field(
        "optim.eps", "Adam denominator epsilon",
        [](RunConfig& c, const std::string& v) {
          c.optim.eps = d::parse_double("optim.eps", v);
        },
        [](const RunConfig& c) { return d::format_double(c.optim.eps); }));
    // loss
    s.push_back(field(
        "loss.lambda1", "weight of the heatmap loss term",
        [](RunConfig& c, const std::string& v) {
          c.loss.lambda1 = d::parse_double("loss.lambda1", v);
        },
        [](const RunConfig& c) { return d::format_double(c.loss.lambda1); }));
    s.push_back(field(
        "loss.lambda2", "weight of the coordinate loss term",
        [](RunConfig& c, const std::string& v) {
          c.loss.lambda2 = d::parse_double("loss.lambda2", v);
        },
        [](const RunConfig& c) { return d::format_double(c.loss.lambda2); }));
    s.push_back(field(
        "loss.true_norm", "use unsquared distances instead of squared",
        [](RunConfig& c, const std::string& v) {
          c.true_norm = d::parse_bool("loss.true_norm", v);
        },
        [](const RunConfig& c) {
          return std::string(c.true_norm ? "true" : "false");
        }));
    // training loop
    s.push_back(L("train.steps", "optimizer steps to run", &RunConfig::steps));
    s.push_back(L("train.batch_size", "sequences per step",
                  &RunConfig::batch_size));
    s.push_back(L("train.ckpt_every", "checkpoint cadence in steps",
                  &RunConfig::ckpt_every));
    s.push_back(L("train.val_every", "validation cadence in steps, 0 disables",
                  &RunConfig::val_every));
    s.push_back(L("train.fixed_pool",
                  "restrict training to the first K sequences, 0 disables",
                  &RunConfig::fixed_pool));
    s.push_back(field(
        "train.seed", "parameter initialization seed",
        [](RunConfig& c, const std::string& v) {
          c.init_seed = d::parse_u64("train.seed", v);
        },
        [](const RunConfig& c) { return std::to_string(c.init_seed); }));
    // data
    s.push_back(field(
        "data.seed", "sequence generator seed",
        [](RunConfig& c, const std::string& v) {
          c.data.seed = d::parse_u64("data.seed", v);
        },
        [](const RunConfig& c) { return std::to_string(c.data.seed); }));
    s.push_back(field(
        "data.n", "sequences in the dataset",
        [](RunConfig& c, const std::string& v) {
          c.data.n_sequences = d::parse_long("data.n", v);
        },
        [](const RunConfig& c) { return std::to_string(c.data.n_sequences); }));
    s.push_back(field(
        "data.length", "frames per sequence",
        [](RunConfig& c, const std::string& v) {
          c.data.sequence_length = d::parse_long("data.length", v);
        },
        [](const RunConfig& c) {
          return std::to_string(c.data.sequence_length);
        }));
    s.push_back(field(
        "data.n_digits", "digits per sequence",
        [](RunConfig& c, const std::string& v) {
          c.data.n_digits = d::parse_long("data.n_digits", v);
        },
        [](const RunConfig& c) { return std::to_string(c.data.n_digits); }));
    s.push_back(field(
        "data.canvas_h", "canvas height in pixels",
        [](RunConfig& c, const std::string& v) {
          c.data.canvas_h = d::parse_long("data.canvas_h", v);
        },
        [](const RunConfig& c) { return std::to_string(c.data.canvas_h); }));
    s.push_back(field(
        "data.canvas_w", "canvas width in pixels",
        [](RunConfig& c, const std::string& v) {
          c.data.canvas_w = d::parse_long("data.canvas_w", v);
        },
        [](const RunConfig& c) { return std::to_string(c.data.canvas_w); }));
    s.push_back(field(
        "data.sigma", "heatmap Gaussian width",
        [](RunConfig& c, const std::string& v) {
          c.data.sigma = d::parse_double("data.sigma", v);
        },
        [](const RunConfig& c) { return d::format_double(c.data.sigma); }));
    s.push_back(field(
        "data.path", "dataset container file; empty renders on the fly",
        [](RunConfig& c, const std::string& v) { c.data_path = v; },
        [](const RunConfig& c) { return c.data_path; }));
    // run
    s.push_back(field(
        "run.dir", "directory for checkpoints, logs, plots and samples",
        [](RunConfig& c, const std::string& v) { c.run_dir = v; },
        [](const RunConfig& c) { return c.run_dir; }));
    return s;
  }();
  return schema;
}

inline const FieldDef* find_field(const std::string& key) {
  for (const auto& f : config_schema())
    if (f.key == key) return &f;
  return nullptr;
}

inline void apply_kv(RunConfig& cfg, const std::string& key,
                     const std::string& value) {
  const FieldDef* f = find_field(key);
  if (!f) throw ConfigError("unknown config key '" + key + "'");
  f->set(cfg, value);
}

// Accepts "key=value" with optional spaces around '='.
inline void apply_assignment(RunConfig& cfg, const std::string& text) {
  const std::size_t eq = text.find('=');
  if (eq == std::string::npos)
    throw ConfigError("config override '" + text + "' is not key=value");
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  apply_kv(cfg, trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::string line;
  long lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      apply_assignment(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

// Canonical rendering: schema order, one "key = value" per line. The digest
// of this text names the configuration in checkpoints and reports.
inline std::string resolved_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : config_schema())
    out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

inline std::uint64_t config_digest(const RunConfig& cfg) {
  const std::string text = resolved_text(cfg);
  return Digest::value_of(text.data(), text.size());
}

inline void write_resolved(const RunConfig& cfg, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write resolved config: " + path);
  f << resolved_text(cfg);
  if (!f) throw DataError("cannot write resolved config: " + path);
}

inline void validate_config(const RunConfig& cfg) {
  cfg.model.validate();
  cfg.optim.validate();
  cfg.loss.validate();
  cfg.data.validate();
  if (cfg.steps < 1) throw ConfigError("train.steps must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (cfg.ckpt_every < 1) throw ConfigError("train.ckpt_every must be >= 1");
  if (cfg.val_every < 0) throw ConfigError("train.val_every must be >= 0");
  if (cfg.fixed_pool < 0) throw ConfigError("train.fixed_pool must be >= 0");
  if (cfg.run_dir.empty()) throw ConfigError("run.dir must not be empty");
}

// Cross-checks between the model and the data it will be trained on.
inline void validate_for_training(const RunConfig& cfg) {
  validate_config(cfg);
  if (cfg.model.in_channels != 3)
    throw ConfigError("training data is 3-channel; set model.in_channels = 3");
  if (cfg.model.frame_h != cfg.data.canvas_h ||
      cfg.model.frame_w != cfg.data.canvas_w)
    throw ConfigError("model frame size must match the data canvas");
  if (cfg.model.n_digits != cfg.data.n_digits)
    throw ConfigError("model.n_digits must match data.n_digits");
  const Schedule sched(cfg.model.seed_len, cfg.model.horizons,
                       cfg.model.periods());
  data::check_length(cfg.data, sched.total_steps());
}

inline train::TrainConfig to_train_config(const RunConfig& cfg) {
  train::TrainConfig out;
  out.steps = cfg.steps;
  out.batch_size = cfg.batch_size;
  out.ckpt_every = cfg.ckpt_every;
  out.val_every = cfg.val_every;
  out.adam = cfg.optim;
  out.weights = cfg.loss;
  out.true_norm = cfg.true_norm;
  out.run_dir = cfg.run_dir;
  return out;
}

}  // namespace mspred::cli
