// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0
//
// Renders one generated sequence as a still gallery (frames, heat map
// overlays, digit centers), an animated GIF, and a trajectory plot.
// Output directory defaults to ./gallery_out, override with argv[1].

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "mspred/datagen.hpp"
#include "mspred/image_io.hpp"
#include "mspred/plot.hpp"
#include "mspred/schedule.hpp"

namespace {

using mspred::TensorF;

TensorF frame_at(const TensorF& frames, long t) {
  const long c = frames.dim(1), h = frames.dim(2), w = frames.dim(3);
  TensorF out({c, h, w});
  std::memcpy(out.data(), frames.data() + t * c * h * w,
              sizeof(float) * static_cast<std::size_t>(c * h * w));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out_dir = argc > 1 ? argv[1] : "gallery_out";
  std::filesystem::create_directories(out_dir);

  mspred::data::DatasetSpec spec;
  spec.seed = 7;
  spec.n_sequences = 1;
  mspred::data::SequenceGenerator gen(mspred::data::synthetic_glyphs(), spec);
  const auto seq = gen.sequence(0);
  const mspred::Schedule sched(17, 5, {1, 4, 8});

  const long H = spec.canvas_h, W = spec.canvas_w;
  const long mh = spec.mid_h(), mw = spec.mid_w();
  const long n = spec.n_digits;
  const long scale = 2, tile = W * scale, pad = 6, strip = 12;

  // Still gallery: one column per sampled timestep, raw frames on top,
  // heat map overlay and center markers below.
  const std::vector<long> picks = {1, 9, 17, 18, 21, 33, 45, 57};
  const long cols = static_cast<long>(picks.size());
  mspred::img::ImageU8 grid(strip + 2 * (tile + pad) + pad,
                            pad + cols * (tile + pad), mspred::img::kWhite);
  for (long col = 0; col < cols; ++col) {
    const long t = picks[static_cast<std::size_t>(col)];
    const long x0 = pad + col * (tile + pad);
    const auto fr = frame_at(seq.frames, t - 1);
    std::string label = "t=" + std::to_string(t);
    if (!sched.in_seed(t)) label += " pred";
    mspred::img::draw_text(grid, label, 2, x0, mspred::img::kBlack);
    mspred::img::blit_frame(grid, fr, strip, x0, scale);
    const long y1 = strip + tile + pad;
    mspred::img::blit_frame(grid, fr, y1, x0, scale);
    mspred::img::overlay_heatmap(
        grid, seq.mid_targets.data() + (t - 1) * mh * mw, mh, mw, y1, x0,
        scale * (H / mh));
    for (long d = 0; d < n; ++d) {
      const long cx = std::lround(
          seq.centers[static_cast<std::size_t>(((t - 1) * n + d) * 2)]);
      const long cy = std::lround(
          seq.centers[static_cast<std::size_t>(((t - 1) * n + d) * 2 + 1)]);
      mspred::img::draw_cross(grid, y1 + cy * scale, x0 + cx * scale, 4,
                              mspred::img::kGreen);
    }
  }
  mspred::img::write_png(out_dir + "/gallery.png", grid);

  // Animated GIF over the full sequence with the same overlay.
  mspred::img::GifWriter gif(out_dir + "/sequence.gif", strip + tile, tile, 12);
  for (long t = 1; t <= spec.sequence_length; ++t) {
    mspred::img::ImageU8 cell(strip + tile, tile, mspred::img::kBlack);
    mspred::img::blit_frame(cell, frame_at(seq.frames, t - 1), strip, 0, scale);
    mspred::img::overlay_heatmap(cell,
                                 seq.mid_targets.data() + (t - 1) * mh * mw, mh,
                                 mw, strip, 0, scale * (H / mh));
    mspred::img::draw_text(cell, "t=" + std::to_string(t), 2, 2,
                           mspred::img::kWhite);
    gif.add_frame(cell);
  }
  gif.close();

  // Digit center trajectories.
  mspred::img::LinePlot plot;
  plot.title = "digit centers, sequence 0";
  plot.x_label = "t";
  plot.y_label = "pixels";
  const mspred::img::Color palette[] = {mspred::img::kBlue, mspred::img::kRed,
                                        mspred::img::kGreen,
                                        mspred::img::kOrange};
  for (long d = 0; d < n; ++d)
    for (int axis = 0; axis < 2; ++axis) {
      mspred::img::Series s;
      s.label = std::string("d") + std::to_string(d) + (axis ? ".y" : ".x");
      s.color = palette[(2 * d + axis) % 4];
      for (long t = 0; t < spec.sequence_length; ++t)
        s.pts.emplace_back(
            static_cast<double>(t + 1),
            static_cast<double>(
                seq.centers[static_cast<std::size_t>((t * n + d) * 2 + axis)]));
      plot.series.push_back(std::move(s));
    }
  mspred::img::write_png(out_dir + "/centers.png", plot.render());

  std::printf("wrote %s/gallery.png %s/sequence.gif %s/centers.png\n",
              out_dir.c_str(), out_dir.c_str(), out_dir.c_str());
  std::printf("gif frames: %ld\n", gif.frame_count());
  return 0;
}
