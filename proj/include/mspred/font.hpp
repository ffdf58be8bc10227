// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace mspred::font {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr int kAdvance = 6;

// Each glyph is 7 row bytes; bit 4 is the leftmost column.
inline const std::array<uint8_t, 7>& glyph(char c) {
  static const std::array<uint8_t, 7> blank{};
  static const std::array<uint8_t, 7> digits[10] = {
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},
      {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},
      {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},
      {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},
      {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}};
  static const std::array<uint8_t, 7> letters[26] = {
      {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
      {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
      {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E},
      {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F},
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F},
      {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
      {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},
      {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
      {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11},
      {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
      {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11},
      {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
      {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},
      {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D},
      {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
      {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E},
      {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
      {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11},
      {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
      {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04},
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}};
  static const std::array<uint8_t, 7> dot{0x00, 0x00, 0x00, 0x00,
                                          0x00, 0x0C, 0x0C};
  static const std::array<uint8_t, 7> comma{0x00, 0x00, 0x00, 0x00,
                                            0x0C, 0x04, 0x08};
  static const std::array<uint8_t, 7> colon{0x00, 0x0C, 0x0C, 0x00,
                                            0x0C, 0x0C, 0x00};
  static const std::array<uint8_t, 7> minus{0x00, 0x00, 0x00, 0x1F,
                                            0x00, 0x00, 0x00};
  static const std::array<uint8_t, 7> underscore{0x00, 0x00, 0x00, 0x00,
                                                 0x00, 0x00, 0x1F};
  static const std::array<uint8_t, 7> slash{0x00, 0x01, 0x02, 0x04,
                                            0x08, 0x10, 0x00};
  static const std::array<uint8_t, 7> lparen{0x02, 0x04, 0x08, 0x08,
                                             0x08, 0x04, 0x02};
  static const std::array<uint8_t, 7> rparen{0x08, 0x04, 0x02, 0x02,
                                             0x02, 0x04, 0x08};
  static const std::array<uint8_t, 7> plus{0x00, 0x04, 0x04, 0x1F,
                                           0x04, 0x04, 0x00};
  static const std::array<uint8_t, 7> equals{0x00, 0x00, 0x1F, 0x00,
                                             0x1F, 0x00, 0x00};
  static const std::array<uint8_t, 7> percent{0x18, 0x19, 0x02, 0x04,
                                              0x08, 0x13, 0x03};
  static const std::array<uint8_t, 7> star{0x00, 0x0A, 0x04, 0x1F,
                                           0x04, 0x0A, 0x00};
  if (c >= '0' && c <= '9') return digits[c - '0'];
  if (c >= 'A' && c <= 'Z') return letters[c - 'A'];
  if (c >= 'a' && c <= 'z') return letters[c - 'a'];
  switch (c) {
    case '.': return dot;
    case ',': return comma;
    case ':': return colon;
    case '-': return minus;
    case '_': return underscore;
    case '/': return slash;
    case '(': return lparen;
    case ')': return rparen;
    case '+': return plus;
    case '=': return equals;
    case '%': return percent;
    case '*': return star;
    default: return blank;
  }
}

// Calls set(x, y) for each lit pixel of `text` starting at (x0, y0).
template <class SetPixel>
void draw_text(std::string_view text, long x0, long y0, SetPixel&& set) {
  long x = x0;
  for (char c : text) {
    const auto& g = glyph(c);
    for (int r = 0; r < kGlyphH; ++r)
      for (int col = 0; col < kGlyphW; ++col)
        if (g[static_cast<std::size_t>(r)] & (1u << (kGlyphW - 1 - col)))
          set(x + col, y0 + r);
    x += kAdvance;
  }
}

inline long text_width(std::string_view text) {
  return text.empty() ? 0
                      : static_cast<long>(text.size()) * kAdvance - 1;
}

}  // namespace mspred::font
