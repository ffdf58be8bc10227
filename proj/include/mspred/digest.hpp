// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace mspred {

// FNV-1a 64-bit. Used for config digests and file checksums; integrity
// checking, not cryptography.
class Digest {
 public:
  Digest() = default;

  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ull;
    }
  }

  void update(std::string_view s) { update(s.data(), s.size()); }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(state_));
    return std::string(buf);
  }

  static std::string of(std::string_view s) {
    Digest d;
    d.update(s);
    return d.hex();
  }

  static std::uint64_t value_of(const void* data, std::size_t n) {
    Digest d;
    d.update(data, n);
    return d.value();
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

}  // namespace mspred
