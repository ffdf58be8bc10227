// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mspred/common.hpp"
#include "mspred/font.hpp"
#include "mspred/tensor.hpp"

namespace mspred::img {

using Color = std::array<std::uint8_t, 3>;

inline constexpr Color kBlack{0, 0, 0};
inline constexpr Color kWhite{255, 255, 255};
inline constexpr Color kRed{220, 40, 40};
inline constexpr Color kGreen{40, 180, 70};
inline constexpr Color kBlue{60, 90, 220};
inline constexpr Color kOrange{240, 150, 30};
inline constexpr Color kGray{128, 128, 128};

// Row-major 8-bit RGB raster.
struct ImageU8 {
  long h = 0, w = 0;
  std::vector<std::uint8_t> pix;  // 3 * h * w

  ImageU8() = default;
  ImageU8(long height, long width, Color fill = kWhite)
      : h(height), w(width),
        pix(static_cast<std::size_t>(3 * height * width)) {
    for (long i = 0; i < h * w; ++i) {
      pix[static_cast<std::size_t>(3 * i)] = fill[0];
      pix[static_cast<std::size_t>(3 * i + 1)] = fill[1];
      pix[static_cast<std::size_t>(3 * i + 2)] = fill[2];
    }
  }

  bool contains(long y, long x) const {
    return y >= 0 && y < h && x >= 0 && x < w;
  }
  std::uint8_t* at(long y, long x) {
    return pix.data() + static_cast<std::size_t>(3 * (y * w + x));
  }
  const std::uint8_t* at(long y, long x) const {
    return pix.data() + static_cast<std::size_t>(3 * (y * w + x));
  }
  void set(long y, long x, Color c) {
    if (!contains(y, x)) return;
    std::uint8_t* p = at(y, x);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
};

// ---------------------------------------------------------------------------
// Drawing primitives.
// ---------------------------------------------------------------------------

inline void fill_rect(ImageU8& im, long y0, long x0, long h, long w, Color c) {
  for (long y = std::max(0L, y0); y < std::min(im.h, y0 + h); ++y)
    for (long x = std::max(0L, x0); x < std::min(im.w, x0 + w); ++x)
      im.set(y, x, c);
}

inline void draw_rect(ImageU8& im, long y0, long x0, long h, long w, Color c) {
  for (long x = x0; x < x0 + w; ++x) {
    im.set(y0, x, c);
    im.set(y0 + h - 1, x, c);
  }
  for (long y = y0; y < y0 + h; ++y) {
    im.set(y, x0, c);
    im.set(y, x0 + w - 1, c);
  }
}

inline void draw_line(ImageU8& im, long y0, long x0, long y1, long x1,
                      Color c) {
  const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  long err = dx + dy, x = x0, y = y0;
  while (true) {
    im.set(y, x, c);
    if (x == x1 && y == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

inline void draw_cross(ImageU8& im, long y, long x, long arm, Color c) {
  for (long d = -arm; d <= arm; ++d) {
    im.set(y + d, x, c);
    im.set(y, x + d, c);
  }
}

inline void draw_text(ImageU8& im, const std::string& text, long y, long x,
                      Color c, long scale = 1) {
  font::draw_text(text, 0, 0, [&](long gx, long gy) {
    for (long sy = 0; sy < scale; ++sy)
      for (long sx = 0; sx < scale; ++sx)
        im.set(y + gy * scale + sy, x + gx * scale + sx, c);
  });
}

// Pastes a single-channel map as grayscale, nearest-neighbor upscaled.
// Values are clipped to [lo, hi] and mapped to 0..255.
inline void blit_gray(ImageU8& im, const float* plane, long ph, long pw,
                      long y0, long x0, long scale, float lo = 0.0f,
                      float hi = 1.0f) {
  const float range = hi - lo;
  for (long y = 0; y < ph; ++y)
    for (long x = 0; x < pw; ++x) {
      float v = (plane[y * pw + x] - lo) / (range > 0 ? range : 1.0f);
      v = std::min(1.0f, std::max(0.0f, v));
      const auto g = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      fill_rect(im, y0 + y * scale, x0 + x * scale, scale, scale, {g, g, g});
    }
}

// Pastes the first channel of [C,H,W] (or averages three channels) as gray.
inline void blit_frame(ImageU8& im, const TensorF& frame, long y0, long x0,
                       long scale) {
  if (frame.rank() != 3)
    throw ShapeError("blit_frame expects [C,H,W], got " + frame.shape_str());
  const long c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
  if (c == 3) {
    for (long y = 0; y < h; ++y)
      for (long x = 0; x < w; ++x) {
        Color px;
        for (int ch = 0; ch < 3; ++ch) {
          float v = frame[static_cast<std::size_t>((ch * h + y) * w + x)];
          v = std::min(1.0f, std::max(0.0f, v));
          px[static_cast<std::size_t>(ch)] =
              static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
        fill_rect(im, y0 + y * scale, x0 + x * scale, scale, scale, px);
      }
  } else {
    blit_gray(im, frame.data(), h, w, y0, x0, scale);
  }
}

// Alpha-blends a heat map over the target area with a red-yellow ramp.
inline void overlay_heatmap(ImageU8& im, const float* heat, long ph, long pw,
                            long y0, long x0, long scale, float gain = 0.8f) {
  for (long y = 0; y < ph; ++y)
    for (long x = 0; x < pw; ++x) {
      float v = heat[y * pw + x];
      v = std::min(1.0f, std::max(0.0f, v));
      if (v <= 0.0f) continue;
      const float a = gain * v;
      const float r = 255.0f, g = 200.0f * v, b = 30.0f;
      for (long sy = 0; sy < scale; ++sy)
        for (long sx = 0; sx < scale; ++sx) {
          const long yy = y0 + y * scale + sy, xx = x0 + x * scale + sx;
          if (!im.contains(yy, xx)) continue;
          std::uint8_t* p = im.at(yy, xx);
          p[0] = static_cast<std::uint8_t>(p[0] * (1 - a) + r * a);
          p[1] = static_cast<std::uint8_t>(p[1] * (1 - a) + g * a);
          p[2] = static_cast<std::uint8_t>(p[2] * (1 - a) + b * a);
        }
    }
}

// ---------------------------------------------------------------------------
// PNG writer: 8-bit RGB, one zlib-compressed IDAT, filter 0 on every row.
// ---------------------------------------------------------------------------

namespace io_detail {

inline void be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

inline void png_chunk(std::string& out, const char type[4],
                      const std::string& data) {
  be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.append(type, 4);
  out += data;
  const auto crc = crc32(
      0L, reinterpret_cast<const Bytef*>(out.data() + start),
      static_cast<uInt>(out.size() - start));
  be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace io_detail

inline std::string encode_png(const ImageU8& im) {
  if (im.h < 1 || im.w < 1) throw ShapeError("encode_png: empty image");
  std::string raw;
  raw.reserve(static_cast<std::size_t>(im.h * (1 + 3 * im.w)));
  for (long y = 0; y < im.h; ++y) {
    raw.push_back('\0');
    raw.append(reinterpret_cast<const char*>(im.at(y, 0)),
               static_cast<std::size_t>(3 * im.w));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<Bytef> packed(bound);
  if (compress2(packed.data(), &bound,
                reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw DataError("png compression failed");

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  io_detail::be32(ihdr, static_cast<std::uint32_t>(im.w));
  io_detail::be32(ihdr, static_cast<std::uint32_t>(im.h));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // deflate
  ihdr.push_back(0);   // adaptive filtering
  ihdr.push_back(0);   // no interlace
  io_detail::png_chunk(out, "IHDR", ihdr);
  io_detail::png_chunk(
      out, "IDAT",
      std::string(reinterpret_cast<const char*>(packed.data()), bound));
  io_detail::png_chunk(out, "IEND", "");
  return out;
}

inline void write_png(const std::string& path, const ImageU8& im) {
  const std::string bytes = encode_png(im);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write image: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("cannot write image: " + path);
}

// ---------------------------------------------------------------------------
// Animated GIF writer with a fixed 256-entry palette (6x6x6 color cube plus
// 40 gray levels) and standard LZW compression.
// ---------------------------------------------------------------------------

namespace io_detail {

inline const std::array<Color, 256>& gif_palette() {
  static const std::array<Color, 256> pal = [] {
    std::array<Color, 256> p{};
    for (int r = 0; r < 6; ++r)
      for (int g = 0; g < 6; ++g)
        for (int b = 0; b < 6; ++b)
          p[static_cast<std::size_t>(36 * r + 6 * g + b)] = {
              static_cast<std::uint8_t>(51 * r),
              static_cast<std::uint8_t>(51 * g),
              static_cast<std::uint8_t>(51 * b)};
    for (int i = 0; i < 40; ++i) {
      const auto v = static_cast<std::uint8_t>((255 * i + 19) / 39);
      p[static_cast<std::size_t>(216 + i)] = {v, v, v};
    }
    return p;
  }();
  return pal;
}

inline std::uint8_t gif_quantize(std::uint8_t r, std::uint8_t g,
                                 std::uint8_t b) {
  auto level = [](std::uint8_t v) { return (v * 5 + 127) / 255; };
  const int cube = 36 * level(r) + 6 * level(g) + level(b);
  const int lum = (299 * r + 587 * g + 114 * b) / 1000;
  const int gray = 216 + (lum * 39 + 127) / 255;
  const auto& pal = gif_palette();
  auto dist = [&](int idx) {
    const auto& c = pal[static_cast<std::size_t>(idx)];
    const int dr = r - c[0], dg = g - c[1], db = b - c[2];
    return dr * dr + dg * dg + db * db;
  };
  return static_cast<std::uint8_t>(dist(gray) < dist(cube) ? gray : cube);
}

inline void le16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

// LZW with 8-bit roots; emits the code stream packed into <=255-byte blocks.
inline std::string gif_lzw(const std::vector<std::uint8_t>& idx) {
  constexpr int kClear = 256, kEnd = 257;
  std::string codes;
  std::uint32_t acc = 0;
  int bits = 0, cs = 9;
  auto put = [&](int code) {
    acc |= static_cast<std::uint32_t>(code) << bits;
    bits += cs;
    while (bits >= 8) {
      codes.push_back(static_cast<char>(acc & 0xFF));
      acc >>= 8;
      bits -= 8;
    }
  };
  std::unordered_map<std::uint32_t, int> dict;
  int next = kEnd + 1;
  put(kClear);
  int cur = idx[0];
  for (std::size_t i = 1; i < idx.size(); ++i) {
    const int k = idx[i];
    const std::uint32_t key =
        (static_cast<std::uint32_t>(cur) << 8) | static_cast<std::uint32_t>(k);
    auto it = dict.find(key);
    if (it != dict.end()) {
      cur = it->second;
      continue;
    }
    put(cur);
    if (next < 4096) {
      dict.emplace(key, next++);
      if (next == (1 << cs) + 1 && cs < 12) ++cs;
    } else {
      put(kClear);
      dict.clear();
      cs = 9;
      next = kEnd + 1;
    }
    cur = k;
  }
  put(cur);
  put(kEnd);
  if (bits > 0) codes.push_back(static_cast<char>(acc & 0xFF));

  std::string out;
  out.push_back(8);  // minimum code size
  for (std::size_t pos = 0; pos < codes.size(); pos += 255) {
    const std::size_t n = std::min<std::size_t>(255, codes.size() - pos);
    out.push_back(static_cast<char>(n));
    out.append(codes, pos, n);
  }
  out.push_back('\0');
  return out;
}

}  // namespace io_detail

class GifWriter {
 public:
  GifWriter(std::string path, long h, long w, int delay_cs = 20)
      : path_(std::move(path)), h_(h), w_(w), delay_(delay_cs) {
    if (h < 1 || w < 1) throw ShapeError("GifWriter: empty canvas");
    out_.append("GIF89a");
    io_detail::le16(out_, static_cast<std::uint16_t>(w));
    io_detail::le16(out_, static_cast<std::uint16_t>(h));
    out_.push_back(static_cast<char>(0xF7));  // global 256-color table
    out_.push_back('\0');                     // background index
    out_.push_back('\0');                     // aspect
    for (const auto& c : io_detail::gif_palette())
      out_.append(reinterpret_cast<const char*>(c.data()), 3);
    // loop forever
    const char netscape[] = "\x21\xFF\x0BNETSCAPE2.0\x03\x01\x00\x00\x00";
    out_.append(netscape, sizeof(netscape) - 1);
  }

  void add_frame(const ImageU8& im) {
    if (im.h != h_ || im.w != w_)
      throw ShapeError("GifWriter: frame size differs from canvas");
    out_.push_back('\x21');  // graphic control
    out_.push_back('\xF9');
    out_.push_back(4);
    out_.push_back(4);  // do not dispose
    io_detail::le16(out_, static_cast<std::uint16_t>(delay_));
    out_.push_back('\0');
    out_.push_back('\0');
    out_.push_back('\x2C');  // image descriptor
    io_detail::le16(out_, 0);
    io_detail::le16(out_, 0);
    io_detail::le16(out_, static_cast<std::uint16_t>(w_));
    io_detail::le16(out_, static_cast<std::uint16_t>(h_));
    out_.push_back('\0');
    std::vector<std::uint8_t> idx(static_cast<std::size_t>(h_ * w_));
    for (long i = 0; i < h_ * w_; ++i) {
      const std::uint8_t* p = im.pix.data() + 3 * i;
      idx[static_cast<std::size_t>(i)] =
          io_detail::gif_quantize(p[0], p[1], p[2]);
    }
    out_ += io_detail::gif_lzw(idx);
    ++frames_;
  }

  long frame_count() const { return frames_; }

  void close() {
    if (closed_) return;
    out_.push_back('\x3B');
    std::ofstream f(path_, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write animation: " + path_);
    f.write(out_.data(), static_cast<std::streamsize>(out_.size()));
    if (!f) throw DataError("cannot write animation: " + path_);
    closed_ = true;
  }

  ~GifWriter() {
    try {
      close();
    } catch (...) {
    }
  }

 private:
  std::string path_;
  long h_, w_;
  int delay_;
  std::string out_;
  long frames_ = 0;
  bool closed_ = false;
};

}  // namespace mspred::img
