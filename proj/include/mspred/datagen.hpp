// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mspred/common.hpp"
#include "mspred/digest.hpp"
#include "mspred/font.hpp"
#include "mspred/rng.hpp"
#include "mspred/tensor.hpp"

namespace mspred::data {

// Digit bitmaps stored as 8-bit grayscale; at() rescales to [0,1].
struct DigitGlyphSet {
  long height = 28;
  long width = 28;
  std::vector<uint8_t> pixels;
  std::vector<int> labels;

  long count() const { return static_cast<long>(labels.size()); }
  float at(long g, long r, long c) const {
    return static_cast<float>(
               pixels[static_cast<std::size_t>((g * height + r) * width + c)]) /
           255.0f;
  }
};

namespace detail {

inline uint32_t be32(const uint8_t* p) {
  return (static_cast<uint32_t>(p[0]) << 24) |
         (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

inline std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("read failure: " + path);
  return bytes;
}

}  // namespace detail

constexpr uint32_t kIdxImageMagic = 2051;
constexpr uint32_t kIdxLabelMagic = 2049;

// Reads a standard IDX image/label file pair.
inline DigitGlyphSet load_idx(const std::string& images_path,
                              const std::string& labels_path) {
  auto img = detail::read_file(images_path);
  if (img.size() < 16)
    throw DataError("truncated image file: " + images_path);
  if (detail::be32(img.data()) != kIdxImageMagic)
    throw DataError("bad magic number in " + images_path + ": got " +
                    std::to_string(detail::be32(img.data())) + ", want " +
                    std::to_string(kIdxImageMagic));
  const long n = static_cast<long>(detail::be32(img.data() + 4));
  const long rows = static_cast<long>(detail::be32(img.data() + 8));
  const long cols = static_cast<long>(detail::be32(img.data() + 12));
  if (n < 1) throw DataError("empty image file: " + images_path);
  if (img.size() != static_cast<std::size_t>(16 + n * rows * cols))
    throw DataError("size mismatch in " + images_path);

  auto lab = detail::read_file(labels_path);
  if (lab.size() < 8)
    throw DataError("truncated label file: " + labels_path);
  if (detail::be32(lab.data()) != kIdxLabelMagic)
    throw DataError("bad magic number in " + labels_path + ": got " +
                    std::to_string(detail::be32(lab.data())) + ", want " +
                    std::to_string(kIdxLabelMagic));
  const long ln = static_cast<long>(detail::be32(lab.data() + 4));
  if (ln != n)
    throw DataError("label count " + std::to_string(ln) +
                    " does not match image count " + std::to_string(n));
  if (lab.size() != static_cast<std::size_t>(8 + ln))
    throw DataError("size mismatch in " + labels_path);

  DigitGlyphSet set;
  set.height = rows;
  set.width = cols;
  set.pixels.assign(img.begin() + 16, img.end());
  set.labels.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i)
    set.labels[static_cast<std::size_t>(i)] =
        static_cast<int>(lab[static_cast<std::size_t>(8 + i)]);
  return set;
}

// Looks for the standard MNIST file names under `dir`.
inline DigitGlyphSet load_digit_glyphs(const std::string& dir) {
  namespace fs = std::filesystem;
  static const std::array<std::pair<const char*, const char*>, 2> names = {
      {{"train-images-idx3-ubyte", "train-labels-idx1-ubyte"},
       {"t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"}}};
  for (const auto& [img, lab] : names) {
    fs::path ip = fs::path(dir) / img;
    fs::path lp = fs::path(dir) / lab;
    if (fs::exists(ip) && fs::exists(lp))
      return load_idx(ip.string(), lp.string());
  }
  throw DataError("no IDX files found in " + dir +
                  " (tried train-images-idx3-ubyte and t10k-images-idx3-ubyte "
                  "with matching label files)");
}

// Ten deterministic 28x28 glyphs built from the bitmap font, one per digit.
inline DigitGlyphSet synthetic_glyphs() {
  DigitGlyphSet set;
  set.pixels.resize(10 * 28 * 28, 0);
  set.labels.resize(10);
  const int scale = 4;
  for (int d = 0; d < 10; ++d) {
    set.labels[static_cast<std::size_t>(d)] = d;
    std::array<uint8_t, 28 * 28> raw{};
    const auto& g = font::glyph(static_cast<char>('0' + d));
    for (int r = 0; r < font::kGlyphH; ++r)
      for (int c = 0; c < font::kGlyphW; ++c)
        if (g[static_cast<std::size_t>(r)] & (1u << (font::kGlyphW - 1 - c)))
          for (int dr = 0; dr < scale; ++dr)
            for (int dc = 0; dc < scale; ++dc)
              raw[static_cast<std::size_t>((r * scale + dr) * 28 + 4 +
                                           c * scale + dc)] = 255;
    for (int r = 0; r < 28; ++r) {
      for (int c = 0; c < 28; ++c) {
        int sum = 0;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if (rr >= 0 && rr < 28 && cc >= 0 && cc < 28)
              sum += raw[static_cast<std::size_t>(rr * 28 + cc)];
          }
        set.pixels[static_cast<std::size_t>((d * 28 + r) * 28 + c)] =
            static_cast<uint8_t>(sum / 9);
      }
    }
  }
  return set;
}

struct TrajectoryState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  double speed() const { return std::hypot(vx, vy); }
};

constexpr double kMinSpeed = 2.0;
constexpr double kMaxSpeed = 5.0;

// Draw order: x, y, speed, direction.
inline TrajectoryState init_trajectory(Rng& rng, long canvas_h, long canvas_w,
                                       long glyph_h, long glyph_w) {
  if (canvas_h < glyph_h || canvas_w < glyph_w)
    throw ConfigError("canvas " + std::to_string(canvas_h) + "x" +
                      std::to_string(canvas_w) + " smaller than glyph " +
                      std::to_string(glyph_h) + "x" + std::to_string(glyph_w));
  TrajectoryState s;
  s.x = rng.uniform(0.0, static_cast<double>(canvas_w - glyph_w));
  s.y = rng.uniform(0.0, static_cast<double>(canvas_h - glyph_h));
  const double speed = rng.uniform(kMinSpeed, kMaxSpeed);
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  s.vx = speed * std::cos(theta);
  s.vy = speed * std::sin(theta);
  return s;
}

// Advances one frame; overshoot past a wall is mirrored back inside.
inline TrajectoryState step_trajectory(TrajectoryState s, long canvas_h,
                                       long canvas_w, long glyph_h,
                                       long glyph_w) {
  const double lim_x = static_cast<double>(canvas_w - glyph_w);
  const double lim_y = static_cast<double>(canvas_h - glyph_h);
  s.x += s.vx;
  s.y += s.vy;
  while (s.x < 0.0 || s.x > lim_x) {
    if (s.x < 0.0) s.x = -s.x;
    else s.x = 2.0 * lim_x - s.x;
    s.vx = -s.vx;
  }
  while (s.y < 0.0 || s.y > lim_y) {
    if (s.y < 0.0) s.y = -s.y;
    else s.y = 2.0 * lim_y - s.y;
    s.vy = -s.vy;
  }
  return s;
}

struct AnnotatedSequence {
  TensorF frames;        // [T, 3, H, W]
  TensorF centers;       // [T, n_digits, 2], (x, y) pixels
  TensorF mid_targets;   // [T, 1, mid_h, mid_w]
  TensorF high_targets;  // [T, 2 * n_digits], (x, y) / canvas in [0,1]
};

// Heatmaps are sums of unit-peak Gaussians at the projected centers,
// clamped to [0,1]; cell (i,j) samples projected coordinate (j,i).
inline std::pair<TensorF, TensorF> make_targets(const TensorF& centers,
                                                long canvas_h, long canvas_w,
                                                long mid_h, long mid_w,
                                                double sigma = 1.5) {
  const long T = centers.dim(0);
  const long n = centers.dim(1);
  TensorF mid({T, 1, mid_h, mid_w});
  TensorF high({T, 2 * n});
  const double sx = static_cast<double>(mid_w) / static_cast<double>(canvas_w);
  const double sy = static_cast<double>(mid_h) / static_cast<double>(canvas_h);
  const double denom = 2.0 * sigma * sigma;
  for (long t = 0; t < T; ++t) {
    for (long d = 0; d < n; ++d) {
      const double cx =
          static_cast<double>(centers[static_cast<std::size_t>((t * n + d) * 2)]);
      const double cy = static_cast<double>(
          centers[static_cast<std::size_t>((t * n + d) * 2 + 1)]);
      high[static_cast<std::size_t>(t * 2 * n + 2 * d)] =
          static_cast<float>(cx / static_cast<double>(canvas_w));
      high[static_cast<std::size_t>(t * 2 * n + 2 * d + 1)] =
          static_cast<float>(cy / static_cast<double>(canvas_h));
      const double mx = cx * sx;
      const double my = cy * sy;
      for (long i = 0; i < mid_h; ++i) {
        for (long j = 0; j < mid_w; ++j) {
          const double dx = static_cast<double>(j) - mx;
          const double dy = static_cast<double>(i) - my;
          const double v = std::exp(-(dx * dx + dy * dy) / denom);
          auto& cell =
              mid[static_cast<std::size_t>((t * mid_h + i) * mid_w + j)];
          cell = static_cast<float>(
              std::min(1.0, static_cast<double>(cell) + v));
        }
      }
    }
  }
  return {std::move(mid), std::move(high)};
}

// Composites glyphs by pixel-wise max onto a black canvas, replicates the
// gray channel to 3, and records glyph centers per frame.
inline AnnotatedSequence render_sequence(const DigitGlyphSet& glyphs,
                                         const std::vector<long>& glyph_ids,
                                         std::vector<TrajectoryState> states,
                                         long T, long canvas_h, long canvas_w,
                                         long mid_h, long mid_w,
                                         double sigma = 1.5) {
  if (glyph_ids.size() != states.size())
    throw ConfigError("glyph/state count mismatch");
  if (T < 1) throw ConfigError("sequence length must be positive");
  const long n = static_cast<long>(glyph_ids.size());
  const long gh = glyphs.height, gw = glyphs.width;

  AnnotatedSequence seq;
  seq.frames = TensorF({T, 3, canvas_h, canvas_w});
  seq.centers = TensorF({T, n, 2});
  float* frames = seq.frames.data();
  const long chw = canvas_h * canvas_w;
  for (long t = 0; t < T; ++t) {
    float* gray = frames + t * 3 * chw;
    for (long d = 0; d < n; ++d) {
      const auto& s = states[static_cast<std::size_t>(d)];
      const long px = std::clamp(std::lround(s.x), 0L, canvas_w - gw);
      const long py = std::clamp(std::lround(s.y), 0L, canvas_h - gh);
      const long g = glyph_ids[static_cast<std::size_t>(d)];
      for (long r = 0; r < gh; ++r)
        for (long c = 0; c < gw; ++c) {
          float* px_out = gray + (py + r) * canvas_w + px + c;
          *px_out = std::max(*px_out, glyphs.at(g, r, c));
        }
      seq.centers[static_cast<std::size_t>((t * n + d) * 2)] =
          static_cast<float>(s.x + static_cast<double>(gw) / 2.0);
      seq.centers[static_cast<std::size_t>((t * n + d) * 2 + 1)] =
          static_cast<float>(s.y + static_cast<double>(gh) / 2.0);
    }
    std::memcpy(gray + chw, gray, sizeof(float) * static_cast<std::size_t>(chw));
    std::memcpy(gray + 2 * chw, gray,
                sizeof(float) * static_cast<std::size_t>(chw));
    for (auto& s : states) s = step_trajectory(s, canvas_h, canvas_w, gh, gw);
  }
  auto targets = make_targets(seq.centers, canvas_h, canvas_w, mid_h, mid_w,
                              sigma);
  seq.mid_targets = std::move(targets.first);
  seq.high_targets = std::move(targets.second);
  return seq;
}

struct DatasetSpec {
  uint64_t seed = 1;
  long n_sequences = 256;
  long sequence_length = 57;
  long n_digits = 2;
  long canvas_h = 64;
  long canvas_w = 64;
  double sigma = 1.5;

  long mid_h() const { return canvas_h / 4; }
  long mid_w() const { return canvas_w / 4; }

  void validate() const {
    if (n_sequences < 1) throw ConfigError("n_sequences must be positive");
    if (sequence_length < 1)
      throw ConfigError("sequence_length must be positive");
    if (n_digits < 1) throw ConfigError("n_digits must be positive");
    if (canvas_h % 4 != 0 || canvas_w % 4 != 0)
      throw ConfigError("canvas dimensions must be divisible by 4");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  }
};

inline void check_length(const DatasetSpec& spec, long required) {
  if (spec.sequence_length < required)
    throw ConfigError("sequence_length " +
                      std::to_string(spec.sequence_length) +
                      " too short: the prediction schedule requires at least " +
                      std::to_string(required) + " frames");
}

// Pure function of (spec.seed, index); any index >= 0 is valid, so the
// training stream is unbounded while size() bounds the stored test set.
// Per index the draw order is: glyph ids, then one trajectory per digit.
// Digits are ordered by (label, initial x) before rendering.
class SequenceGenerator {
 public:
  SequenceGenerator(DigitGlyphSet glyphs, DatasetSpec spec)
      : glyphs_(std::move(glyphs)), spec_(spec) {
    spec_.validate();
    if (glyphs_.count() < 1) throw DataError("empty glyph set");
    if (glyphs_.height > spec_.canvas_h || glyphs_.width > spec_.canvas_w)
      throw ConfigError("glyphs larger than canvas");
  }

  const DatasetSpec& spec() const { return spec_; }
  long size() const { return spec_.n_sequences; }

  AnnotatedSequence sequence(long index) const {
    Rng rng(Rng::mix(spec_.seed, static_cast<uint64_t>(index)));
    const long n = spec_.n_digits;
    std::vector<long> ids(static_cast<std::size_t>(n));
    for (long d = 0; d < n; ++d)
      ids[static_cast<std::size_t>(d)] =
          static_cast<long>(rng.below(static_cast<uint64_t>(glyphs_.count())));
    std::vector<TrajectoryState> states(static_cast<std::size_t>(n));
    for (long d = 0; d < n; ++d)
      states[static_cast<std::size_t>(d)] =
          init_trajectory(rng, spec_.canvas_h, spec_.canvas_w, glyphs_.height,
                          glyphs_.width);
    std::vector<long> order(static_cast<std::size_t>(n));
    for (long d = 0; d < n; ++d) order[static_cast<std::size_t>(d)] = d;
    std::sort(order.begin(), order.end(), [&](long a, long b) {
      const int la = glyphs_.labels[static_cast<std::size_t>(
          ids[static_cast<std::size_t>(a)])];
      const int lb = glyphs_.labels[static_cast<std::size_t>(
          ids[static_cast<std::size_t>(b)])];
      if (la != lb) return la < lb;
      return states[static_cast<std::size_t>(a)].x <
             states[static_cast<std::size_t>(b)].x;
    });
    std::vector<long> sorted_ids(static_cast<std::size_t>(n));
    std::vector<TrajectoryState> sorted_states(static_cast<std::size_t>(n));
    for (long d = 0; d < n; ++d) {
      sorted_ids[static_cast<std::size_t>(d)] =
          ids[static_cast<std::size_t>(order[static_cast<std::size_t>(d)])];
      sorted_states[static_cast<std::size_t>(d)] =
          states[static_cast<std::size_t>(order[static_cast<std::size_t>(d)])];
    }
    return render_sequence(glyphs_, sorted_ids, std::move(sorted_states),
                           spec_.sequence_length, spec_.canvas_h,
                           spec_.canvas_w, spec_.mid_h(), spec_.mid_w(),
                           spec_.sigma);
  }

 private:
  DigitGlyphSet glyphs_;
  DatasetSpec spec_;
};

constexpr std::array<char, 8> kDatasetMagic = {'M', 'S', 'P', 'D',
                                               'S', 'E', 'T', '1'};
constexpr uint32_t kDatasetVersion = 1;

namespace detail {

template <class T>
void append_raw(std::vector<uint8_t>& out, T v) {
  uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <class T>
T take_raw(const std::vector<uint8_t>& in, std::size_t& off,
           const std::string& path) {
  if (off + sizeof(T) > in.size())
    throw DataError("truncated dataset file: " + path);
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace detail

// Container layout (little-endian):
//   magic "MSPDSET1", u32 version, u64 seed, u32 {n, T, n_digits, H, W,
//   mid_h, mid_w}, f64 sigma, then per sequence: u8 gray frames [T,H,W],
//   f32 centers [T,n,2], f32 mid [T,mid_h,mid_w], f32 high [T,2n],
//   then u64 FNV-1a digest of all preceding bytes.
inline uint64_t write_dataset(const std::string& path,
                              const SequenceGenerator& gen) {
  const auto& spec = gen.spec();
  std::vector<uint8_t> out;
  out.insert(out.end(), kDatasetMagic.begin(), kDatasetMagic.end());
  detail::append_raw<uint32_t>(out, kDatasetVersion);
  detail::append_raw<uint64_t>(out, spec.seed);
  detail::append_raw<uint32_t>(out, static_cast<uint32_t>(spec.n_sequences));
  detail::append_raw<uint32_t>(out,
                               static_cast<uint32_t>(spec.sequence_length));
  detail::append_raw<uint32_t>(out, static_cast<uint32_t>(spec.n_digits));
  detail::append_raw<uint32_t>(out, static_cast<uint32_t>(spec.canvas_h));
  detail::append_raw<uint32_t>(out, static_cast<uint32_t>(spec.canvas_w));
  detail::append_raw<uint32_t>(out, static_cast<uint32_t>(spec.mid_h()));
  detail::append_raw<uint32_t>(out, static_cast<uint32_t>(spec.mid_w()));
  detail::append_raw<double>(out, spec.sigma);
  for (long i = 0; i < spec.n_sequences; ++i) {
    auto seq = gen.sequence(i);
    const long chw = spec.canvas_h * spec.canvas_w;
    for (long t = 0; t < spec.sequence_length; ++t)
      for (long p = 0; p < chw; ++p)
        out.push_back(static_cast<uint8_t>(std::lround(
            seq.frames[static_cast<std::size_t>(t * 3 * chw + p)] * 255.0f)));
    auto append_floats = [&out](const TensorF& x) {
      const std::size_t base = out.size();
      out.resize(base + sizeof(float) * x.size());
      std::memcpy(out.data() + base, x.data(), sizeof(float) * x.size());
    };
    append_floats(seq.centers);
    append_floats(seq.mid_targets);
    append_floats(seq.high_targets);
  }
  const uint64_t digest = Digest::value_of(out.data(), out.size());
  detail::append_raw<uint64_t>(out, digest);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write file: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failure: " + path);
  return digest;
}

// File-backed test set; frames stay 8-bit in memory and sequences are
// materialized on demand.
class StoredDataset {
 public:
  static StoredDataset open(const std::string& path) {
    auto bytes = detail::read_file(path);
    if (bytes.size() < kDatasetMagic.size() + 8 ||
        std::memcmp(bytes.data(), kDatasetMagic.data(),
                    kDatasetMagic.size()) != 0)
      throw DataError("not a dataset file: " + path);
    const uint64_t stored = [&] {
      uint64_t v;
      std::memcpy(&v, bytes.data() + bytes.size() - 8, 8);
      return v;
    }();
    if (Digest::value_of(bytes.data(), bytes.size() - 8) != stored)
      throw DataError("checksum mismatch in " + path);

    StoredDataset ds;
    std::size_t off = kDatasetMagic.size();
    const auto version = detail::take_raw<uint32_t>(bytes, off, path);
    if (version != kDatasetVersion)
      throw DataError("dataset version " + std::to_string(version) +
                      " unsupported, want " + std::to_string(kDatasetVersion));
    ds.spec_.seed = detail::take_raw<uint64_t>(bytes, off, path);
    ds.spec_.n_sequences =
        static_cast<long>(detail::take_raw<uint32_t>(bytes, off, path));
    ds.spec_.sequence_length =
        static_cast<long>(detail::take_raw<uint32_t>(bytes, off, path));
    ds.spec_.n_digits =
        static_cast<long>(detail::take_raw<uint32_t>(bytes, off, path));
    ds.spec_.canvas_h =
        static_cast<long>(detail::take_raw<uint32_t>(bytes, off, path));
    ds.spec_.canvas_w =
        static_cast<long>(detail::take_raw<uint32_t>(bytes, off, path));
    const long mid_h =
        static_cast<long>(detail::take_raw<uint32_t>(bytes, off, path));
    const long mid_w =
        static_cast<long>(detail::take_raw<uint32_t>(bytes, off, path));
    ds.spec_.sigma = detail::take_raw<double>(bytes, off, path);
    if (mid_h != ds.spec_.mid_h() || mid_w != ds.spec_.mid_w())
      throw DataError("inconsistent heatmap resolution in " + path);

    const long n = ds.spec_.n_sequences;
    const long T = ds.spec_.sequence_length;
    const long chw = ds.spec_.canvas_h * ds.spec_.canvas_w;
    const long nd = ds.spec_.n_digits;
    const std::size_t frames_sz = static_cast<std::size_t>(n * T * chw);
    const std::size_t centers_sz = static_cast<std::size_t>(n * T * nd * 2);
    const std::size_t mids_sz = static_cast<std::size_t>(n * T * mid_h * mid_w);
    const std::size_t highs_sz = static_cast<std::size_t>(n * T * 2 * nd);
    const std::size_t want = off + frames_sz +
                             sizeof(float) * (centers_sz + mids_sz + highs_sz) +
                             8;
    if (bytes.size() != want)
      throw DataError("size mismatch in " + path + ": got " +
                      std::to_string(bytes.size()) + " bytes, want " +
                      std::to_string(want));
    ds.frames_.resize(frames_sz);
    ds.centers_.resize(centers_sz);
    ds.mids_.resize(mids_sz);
    ds.highs_.resize(highs_sz);
    const long per_seq_u8 = T * chw;
    const long per_seq_c = T * nd * 2;
    const long per_seq_m = T * mid_h * mid_w;
    const long per_seq_h = T * 2 * nd;
    for (long i = 0; i < n; ++i) {
      std::memcpy(ds.frames_.data() + i * per_seq_u8, bytes.data() + off,
                  static_cast<std::size_t>(per_seq_u8));
      off += static_cast<std::size_t>(per_seq_u8);
      auto take_floats = [&](float* dst, long cnt) {
        std::memcpy(dst, bytes.data() + off,
                    sizeof(float) * static_cast<std::size_t>(cnt));
        off += sizeof(float) * static_cast<std::size_t>(cnt);
      };
      take_floats(ds.centers_.data() + i * per_seq_c, per_seq_c);
      take_floats(ds.mids_.data() + i * per_seq_m, per_seq_m);
      take_floats(ds.highs_.data() + i * per_seq_h, per_seq_h);
    }
    return ds;
  }

  const DatasetSpec& spec() const { return spec_; }
  long size() const { return spec_.n_sequences; }

  AnnotatedSequence sequence(long index) const {
    if (index < 0 || index >= spec_.n_sequences)
      throw DataError("sequence index " + std::to_string(index) +
                      " out of range [0, " +
                      std::to_string(spec_.n_sequences) + ")");
    const long T = spec_.sequence_length;
    const long chw = spec_.canvas_h * spec_.canvas_w;
    const long nd = spec_.n_digits;
    AnnotatedSequence seq;
    seq.frames = TensorF({T, 3, spec_.canvas_h, spec_.canvas_w});
    const uint8_t* src = frames_.data() + index * T * chw;
    float* dst = seq.frames.data();
    for (long t = 0; t < T; ++t) {
      float* gray = dst + t * 3 * chw;
      for (long p = 0; p < chw; ++p)
        gray[p] = static_cast<float>(src[t * chw + p]) / 255.0f;
      std::memcpy(gray + chw, gray,
                  sizeof(float) * static_cast<std::size_t>(chw));
      std::memcpy(gray + 2 * chw, gray,
                  sizeof(float) * static_cast<std::size_t>(chw));
    }
    auto copy_floats = [](const std::vector<float>& v, long base,
                          TensorF& out) {
      std::memcpy(out.data(), v.data() + base, sizeof(float) * out.size());
    };
    seq.centers = TensorF({T, nd, 2});
    copy_floats(centers_, index * T * nd * 2, seq.centers);
    seq.mid_targets = TensorF({T, 1, spec_.mid_h(), spec_.mid_w()});
    copy_floats(mids_, index * T * spec_.mid_h() * spec_.mid_w(),
                seq.mid_targets);
    seq.high_targets = TensorF({T, 2 * nd});
    copy_floats(highs_, index * T * 2 * nd, seq.high_targets);
    return seq;
  }

 private:
  DatasetSpec spec_;
  std::vector<uint8_t> frames_;
  std::vector<float> centers_;
  std::vector<float> mids_;
  std::vector<float> highs_;
};

}  // namespace mspred::data
