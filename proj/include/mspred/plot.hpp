// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mspred/common.hpp"
#include "mspred/image_io.hpp"

namespace mspred::img {

struct Series {
  std::string label;
  Color color{0, 0, 0};
  std::vector<std::pair<double, double>> pts;
};

// Minimal line chart: axes with rounded tick labels, optional log-scale y,
// one polyline per series, legend in the top-right corner.
struct LinePlot {
  long width = 640, height = 400;
  std::string title, x_label, y_label;
  bool log_y = false;
  std::vector<Series> series;

  ImageU8 render() const {
    ImageU8 im(height, width, kWhite);
    const long left = 56, right = 12, top = 22, bottom = 34;
    const long px0 = left, px1 = width - right;
    const long py0 = top, py1 = height - bottom;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series)
      for (const auto& [x, y] : s.pts) {
        if (log_y && y <= 0) continue;
        const double yv = log_y ? std::log10(y) : y;
        if (first) {
          xmin = xmax = x;
          ymin = ymax = yv;
          first = false;
        } else {
          xmin = std::min(xmin, x);
          xmax = std::max(xmax, x);
          ymin = std::min(ymin, yv);
          ymax = std::max(ymax, yv);
        }
      }
    if (first) {
      draw_text(im, "no data", height / 2, width / 2 - 20, kGray);
      return im;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + (log_y ? 0.5 : 1);
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto to_px = [&](double x) {
      return px0 + static_cast<long>(std::lround((x - xmin) / (xmax - xmin) *
                                                 (px1 - px0)));
    };
    auto to_py = [&](double yv) {
      return py1 - static_cast<long>(std::lround((yv - ymin) / (ymax - ymin) *
                                                 (py1 - py0)));
    };

    draw_rect(im, py0, px0, py1 - py0 + 1, px1 - px0 + 1, kGray);

    char buf[48];
    const int n_ticks = 5;
    for (int i = 0; i <= n_ticks; ++i) {
      const double fy = ymin + (ymax - ymin) * i / n_ticks;
      const long y = to_py(fy);
      for (long x = px0; x <= px1; x += 4) im.set(y, x, {225, 225, 225});
      const double shown = log_y ? std::pow(10.0, fy) : fy;
      std::snprintf(buf, sizeof(buf), "%.3g", shown);
      draw_text(im, buf, y - 3, 4, kBlack);
      const double fx = xmin + (xmax - xmin) * i / n_ticks;
      const long x = to_px(fx);
      std::snprintf(buf, sizeof(buf), "%.4g", fx);
      draw_text(im, buf, py1 + 6, x - 8, kBlack);
    }

    for (const auto& s : series) {
      long prev_x = 0, prev_y = 0;
      bool started = false;
      for (const auto& [x, y] : s.pts) {
        if (log_y && y <= 0) continue;
        const double yv = log_y ? std::log10(y) : y;
        const long cx = std::clamp(to_px(x), px0, px1);
        const long cy = std::clamp(to_py(yv), py0, py1);
        if (started) draw_line(im, prev_y, prev_x, cy, cx, s.color);
        prev_x = cx;
        prev_y = cy;
        started = true;
      }
    }

    if (!title.empty()) draw_text(im, title, 6, px0, kBlack);
    if (!x_label.empty())
      draw_text(im, x_label, height - 12, (px0 + px1) / 2 - 12, kBlack);
    if (!y_label.empty()) draw_text(im, y_label, py0 - 14, 4, kBlack);
    long ly = py0 + 4;
    for (const auto& s : series) {
      if (s.label.empty()) continue;
      const long lx = px1 - 90;
      fill_rect(im, ly + 2, lx, 3, 12, s.color);
      draw_text(im, s.label, ly, lx + 16, kBlack);
      ly += 11;
    }
    return im;
  }
};

// Lays panels out left to right, wrapping after `cols`.
inline ImageU8 panel_grid(const std::vector<ImageU8>& panels, long cols) {
  if (panels.empty()) throw ShapeError("panel_grid: no panels");
  cols = std::max(1L, std::min(cols, static_cast<long>(panels.size())));
  const long rows =
      (static_cast<long>(panels.size()) + cols - 1) / cols;
  const long ph = panels[0].h, pw = panels[0].w;
  ImageU8 out(rows * ph, cols * pw, kWhite);
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const long r = static_cast<long>(i) / cols, c = static_cast<long>(i) % cols;
    for (long y = 0; y < panels[i].h; ++y)
      std::memcpy(out.at(r * ph + y, c * pw), panels[i].at(y, 0),
                  static_cast<std::size_t>(3 * panels[i].w));
  }
  return out;
}

// Renders the training loss log (step,total,frame,mid,high,...) as one chart.
inline void plot_loss_csv(const std::string& csv_path,
                          const std::string& out_png) {
  std::ifstream f(csv_path);
  if (!f) throw DataError("cannot open loss log: " + csv_path);
  std::string line;
  std::getline(f, line);  // header
  LinePlot plot;
  plot.title = "training loss";
  plot.x_label = "step";
  plot.log_y = true;
  plot.series = {{"total", kBlack, {}},
                 {"frame", kBlue, {}},
                 {"mid", kOrange, {}},
                 {"high", kGreen, {}}};
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() < 5) continue;
    for (int s = 0; s < 4; ++s)
      plot.series[static_cast<std::size_t>(s)].pts.emplace_back(
          row[0], row[static_cast<std::size_t>(s + 1)]);
  }
  write_png(out_png, plot.render());
}

}  // namespace mspred::img
