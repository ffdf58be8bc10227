// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mspred/common.hpp"
#include "mspred/datagen.hpp"
#include "mspred/lpips.hpp"
#include "mspred/model.hpp"
#include "mspred/schedule.hpp"
#include "mspred/tensor.hpp"

namespace mspred::eval {

// All metrics consume pixels in [0,1]. Reports additionally emit MSE in the
// integer-pixel convention (scaled by 255^2) so both scales are unambiguous.
inline constexpr double kPixel255Scale = 255.0 * 255.0;
inline constexpr double kPsnrCapDb = 100.0;

namespace metric_detail {

inline void check_pair(const TensorF& a, const TensorF& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
  if (a.size() == 0) throw ShapeError(std::string(op) + ": empty tensor");
}

}  // namespace metric_detail

inline double mse(const TensorF& a, const TensorF& b) {
  metric_detail::check_pair(a, b, "mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

inline double mse_255(const TensorF& a, const TensorF& b) {
  return mse(a, b) * kPixel255Scale;
}

inline double psnr_from_mse(double m, double max_value = 1.0) {
  if (!(max_value > 0.0))
    throw ConfigError("psnr: max_value must be > 0");
  if (m <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb,
                  10.0 * std::log10(max_value * max_value / m));
}

inline double psnr(const TensorF& a, const TensorF& b,
                   double max_value = 1.0) {
  return psnr_from_mse(mse(a, b), max_value);
}

// ---------------------------------------------------------------------------
// SSIM: 11x11 Gaussian window, sigma 1.5, C1=(0.01 L)^2, C2=(0.03 L)^2,
// averaged over all fully-contained windows and all channels.
// ---------------------------------------------------------------------------

inline constexpr long kSsimWindow = 11;

namespace metric_detail {

inline const std::array<double, kSsimWindow>& ssim_window_1d() {
  static const std::array<double, kSsimWindow> g = [] {
    std::array<double, kSsimWindow> w{};
    const double sigma = 1.5;
    double sum = 0.0;
    for (long i = 0; i < kSsimWindow; ++i) {
      const double d = static_cast<double>(i) - (kSsimWindow - 1) / 2.0;
      w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
      sum += w[static_cast<std::size_t>(i)];
    }
    for (auto& v : w) v /= sum;
    return w;
  }();
  return g;
}

// Valid-mode separable Gaussian filter; in is H*W row-major, out (H-10)*(W-10).
inline void gauss_valid(const std::vector<double>& in, long h, long w,
                        std::vector<double>& tmp, std::vector<double>& out) {
  const auto& g = ssim_window_1d();
  const long ow = w - (kSsimWindow - 1), oh = h - (kSsimWindow - 1);
  tmp.assign(static_cast<std::size_t>(h * ow), 0.0);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < ow; ++x) {
      double s = 0.0;
      for (long j = 0; j < kSsimWindow; ++j)
        s += g[static_cast<std::size_t>(j)] *
             in[static_cast<std::size_t>(y * w + x + j)];
      tmp[static_cast<std::size_t>(y * ow + x)] = s;
    }
  out.assign(static_cast<std::size_t>(oh * ow), 0.0);
  for (long y = 0; y < oh; ++y)
    for (long x = 0; x < ow; ++x) {
      double s = 0.0;
      for (long i = 0; i < kSsimWindow; ++i)
        s += g[static_cast<std::size_t>(i)] *
             tmp[static_cast<std::size_t>((y + i) * ow + x)];
      out[static_cast<std::size_t>(y * ow + x)] = s;
    }
}

}  // namespace metric_detail

inline double ssim(const TensorF& a, const TensorF& b, double peak = 1.0) {
  metric_detail::check_pair(a, b, "ssim");
  if (a.rank() < 2)
    throw ShapeError("ssim expects at least [H,W], got " + a.shape_str());
  const long h = a.dim(a.rank() - 2), w = a.dim(a.rank() - 1);
  if (h < kSsimWindow || w < kSsimWindow)
    throw ShapeError("ssim: image " + std::to_string(h) + "x" +
                     std::to_string(w) + " smaller than the " +
                     std::to_string(kSsimWindow) + "x" +
                     std::to_string(kSsimWindow) + " window");
  const long planes = static_cast<long>(a.size()) / (h * w);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const std::size_t plane_n = static_cast<std::size_t>(h * w);
  std::vector<double> x(plane_n), y(plane_n), xx(plane_n), yy(plane_n),
      xy(plane_n);
  std::vector<double> tmp, mx, my, sxx, syy, sxy;
  double total = 0.0;
  long windows = 0;
  for (long p = 0; p < planes; ++p) {
    const float* pa = a.data() + static_cast<std::size_t>(p) * plane_n;
    const float* pb = b.data() + static_cast<std::size_t>(p) * plane_n;
    for (std::size_t i = 0; i < plane_n; ++i) {
      x[i] = pa[i];
      y[i] = pb[i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    metric_detail::gauss_valid(x, h, w, tmp, mx);
    metric_detail::gauss_valid(y, h, w, tmp, my);
    metric_detail::gauss_valid(xx, h, w, tmp, sxx);
    metric_detail::gauss_valid(yy, h, w, tmp, syy);
    metric_detail::gauss_valid(xy, h, w, tmp, sxy);
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double ux = mx[i], uy = my[i];
      const double vx = sxx[i] - ux * ux;
      const double vy = syy[i] - uy * uy;
      const double cov = sxy[i] - ux * uy;
      // Denominators are written as numerator plus a residual that vanishes
      // bitwise for identical windows, keeping ssim(x, x) == 1 exactly.
      const double n1 = 2.0 * ux * uy + c1;
      const double d1 = n1 + (ux - uy) * (ux - uy);
      const double n2 = 2.0 * cov + c2;
      const double d2 = n2 + (vx - cov) + (vy - cov);
      total += (n1 * n2) / (d1 * d2);
    }
    windows += static_cast<long>(mx.size());
  }
  return total / static_cast<double>(windows);
}

// ---------------------------------------------------------------------------
// Evaluation protocol: run a frame predictor over a seeded test set, score
// every predicted frame against ground truth at its absolute timestep, average
// over sequences per horizon, then average the horizons into the overall value.
// ---------------------------------------------------------------------------

struct MetricSeries {
  std::string name;
  std::vector<double> per_horizon;
  double overall = 0.0;
};

struct MetricReport {
  std::vector<long> horizons;
  long n_sequences = 0;
  std::vector<MetricSeries> metrics;

  const MetricSeries* find(std::string_view name) const {
    for (const auto& m : metrics)
      if (m.name == name) return &m;
    return nullptr;
  }
};

using FramePredictor =
    std::function<nn::MultiScalePrediction<float>(const TensorF& seed)>;

inline FramePredictor make_copylast_predictor(Schedule sched) {
  return [sched](const TensorF& seed) {
    return nn::copy_last_baseline<float>(seed, sched);
  };
}

inline FramePredictor make_model_predictor(nn::Model<float>& model) {
  return [&model](const TensorF& seed) {
    nn::NoGradGuard guard;
    return model.run(seed).prediction;
  };
}

struct EvalConfig {
  const FeatureExtractorPlugin* lpips_plugin = nullptr;  // null skips lpips
  long limit = -1;  // cap on sequences, <0 means all
};

// Source needs .spec() -> data::DatasetSpec and .sequence(i) -> AnnotatedSequence.
template <class Source>
MetricReport evaluate(const FramePredictor& predict, const Source& source,
                      const Schedule& sched, const EvalConfig& cfg = {}) {
  const auto& spec = source.spec();
  long n = spec.n_sequences;
  if (cfg.limit >= 0) n = std::min(n, cfg.limit);
  if (n <= 0) throw DataError("empty test set: nothing to evaluate");
  data::check_length(spec, sched.total_steps());

  const std::vector<long> times = sched.emission_times(0);
  const std::size_t nh = times.size();
  const bool with_lpips = cfg.lpips_plugin != nullptr;
  std::vector<std::string> names = {"mse", "mse_255", "psnr", "ssim"};
  if (with_lpips) names.push_back("lpips");
  std::vector<std::vector<double>> accum(names.size(),
                                         std::vector<double>(nh, 0.0));

  const long seed_len = sched.seed_len();
  for (long i = 0; i < n; ++i) {
    const auto seq = source.sequence(i);
    const long t_total = seq.frames.dim(0), ch = seq.frames.dim(1);
    const long fh = seq.frames.dim(2), fw = seq.frames.dim(3);
    if (t_total < sched.total_steps())
      throw DataError("sequence " + std::to_string(i) +
                      " shorter than the prediction schedule");
    const std::size_t frame_n = static_cast<std::size_t>(ch * fh * fw);
    TensorF seed({1, seed_len, ch, fh, fw});
    std::memcpy(seed.data(), seq.frames.data(),
                sizeof(float) * frame_n * static_cast<std::size_t>(seed_len));
    const auto pred = predict(seed);
    if (pred.frame_times != times)
      throw ContractError(
          "predictor emission times do not match the schedule");
    TensorF target({ch, fh, fw});
    for (std::size_t k = 0; k < nh; ++k) {
      const auto& pv = pred.frames[k]->value;
      if (pv.rank() != 4 || pv.dim(0) != 1)
        throw ContractError("evaluate expects batch-1 predictions, got " +
                            pv.shape_str());
      const TensorF out = pv.reshaped({ch, fh, fw});
      std::memcpy(target.data(),
                  seq.frames.data() +
                      static_cast<std::size_t>(times[k] - 1) * frame_n,
                  sizeof(float) * frame_n);
      const double m = mse(out, target);
      accum[0][k] += m;
      accum[1][k] += m * kPixel255Scale;
      accum[2][k] += psnr_from_mse(m);
      accum[3][k] += ssim(out, target);
      if (with_lpips) accum[4][k] += lpips(out, target, *cfg.lpips_plugin);
    }
  }

  MetricReport report;
  report.horizons = times;
  report.n_sequences = n;
  for (std::size_t s = 0; s < names.size(); ++s) {
    MetricSeries series;
    series.name = names[s];
    series.per_horizon.resize(nh);
    double sum = 0.0;
    for (std::size_t k = 0; k < nh; ++k) {
      series.per_horizon[k] = accum[s][k] / static_cast<double>(n);
      sum += series.per_horizon[k];
    }
    series.overall = sum / static_cast<double>(nh);
    report.metrics.push_back(std::move(series));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report emission.
// ---------------------------------------------------------------------------

inline std::string report_csv(const MetricReport& r) {
  std::string out = "metric,horizon,value,n\n";
  char buf[96];
  for (const auto& m : r.metrics) {
    for (std::size_t k = 0; k < m.per_horizon.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%s,%ld,%.9g,%ld\n", m.name.c_str(),
                    r.horizons[k], m.per_horizon[k], r.n_sequences);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%s,overall,%.9g,%ld\n", m.name.c_str(),
                  m.overall, r.n_sequences);
    out += buf;
  }
  return out;
}

inline void write_report_csv(const std::string& path, const MetricReport& r) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write report: " + path);
  f << report_csv(r);
  if (!f) throw DataError("cannot write report: " + path);
}

inline std::string format_report(const MetricReport& r) {
  char buf[64];
  std::string out = "metric    ";
  for (long t : r.horizons) {
    std::snprintf(buf, sizeof(buf), "%12s", ("t=" + std::to_string(t)).c_str());
    out += buf;
  }
  out += "     overall\n";
  for (const auto& m : r.metrics) {
    std::snprintf(buf, sizeof(buf), "%-10s", m.name.c_str());
    out += buf;
    for (double v : m.per_horizon) {
      std::snprintf(buf, sizeof(buf), "%12.5g", v);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%12.5g\n", m.overall);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "sequences %ld\n", r.n_sequences);
  out += buf;
  return out;
}

}  // namespace mspred::eval
