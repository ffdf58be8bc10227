// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "mspred/common.hpp"
#include "mspred/digest.hpp"
#include "mspred/layers.hpp"
#include "mspred/optim.hpp"

namespace mspred::train {

struct TrainState {
  long step = 0;
  double best_val = std::numeric_limits<double>::infinity();
  uint64_t data_seed = 0;
};

constexpr std::array<char, 8> kCheckpointMagic = {'M', 'S', 'P', 'C',
                                                  'K', 'P', 'T', '1'};
constexpr uint32_t kCheckpointVersion = 1;

namespace ckpt_detail {

template <class T>
void append_raw(std::vector<uint8_t>& out, T v) {
  uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

inline void append_tensor(std::vector<uint8_t>& out, const TensorF& t) {
  const std::size_t base = out.size();
  out.resize(base + sizeof(float) * t.size());
  std::memcpy(out.data() + base, t.data(), sizeof(float) * t.size());
}

template <class T>
T take_raw(const std::vector<uint8_t>& in, std::size_t& off,
           const std::string& path) {
  if (off + sizeof(T) > in.size())
    throw DataError("truncated checkpoint: " + path);
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

inline void take_tensor(const std::vector<uint8_t>& in, std::size_t& off,
                        TensorF& t, const std::string& path) {
  const std::size_t bytes = sizeof(float) * t.size();
  if (off + bytes > in.size())
    throw DataError("truncated checkpoint: " + path);
  std::memcpy(t.data(), in.data() + off, bytes);
  off += bytes;
}

}  // namespace ckpt_detail

// Layout (little-endian): magic "MSPCKPT1", u32 version, u64 config digest,
// u64 step, f64 best validation loss, u64 data seed, u64 optimizer step,
// u32 param count, then per parameter: u32 name length, name bytes,
// u32 rank, i64 dims, f32 value/m/v blobs; finally a u64 FNV-1a digest
// of all preceding bytes.
inline void save_checkpoint(const std::string& path,
                            const Adam<float>& opt, const TrainState& state,
                            uint64_t config_digest) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kCheckpointMagic.begin(), kCheckpointMagic.end());
  ckpt_detail::append_raw<uint32_t>(out, kCheckpointVersion);
  ckpt_detail::append_raw<uint64_t>(out, config_digest);
  ckpt_detail::append_raw<uint64_t>(out, static_cast<uint64_t>(state.step));
  ckpt_detail::append_raw<double>(out, state.best_val);
  ckpt_detail::append_raw<uint64_t>(out, state.data_seed);
  ckpt_detail::append_raw<uint64_t>(out,
                                    static_cast<uint64_t>(opt.step_count()));
  const auto& params = opt.params();
  ckpt_detail::append_raw<uint32_t>(out,
                                    static_cast<uint32_t>(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& [name, p] = params[k];
    ckpt_detail::append_raw<uint32_t>(out,
                                      static_cast<uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    ckpt_detail::append_raw<uint32_t>(
        out, static_cast<uint32_t>(p->value.rank()));
    for (long d = 0; d < p->value.rank(); ++d)
      ckpt_detail::append_raw<int64_t>(out, p->value.dim(d));
    ckpt_detail::append_tensor(out, p->value);
    ckpt_detail::append_tensor(out, opt.moments_m()[k]);
    ckpt_detail::append_tensor(out, opt.moments_v()[k]);
  }
  ckpt_detail::append_raw<uint64_t>(out,
                                    Digest::value_of(out.data(), out.size()));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write checkpoint: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failure: " + path);
}

// Restores parameter values and optimizer moments in place. The optimizer
// must hold the same named parameters in the same order as the writer.
// Returns true when the stored config digest matches `config_digest`.
inline bool load_checkpoint(const std::string& path, Adam<float>& opt,
                            TrainState& state, uint64_t config_digest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < kCheckpointMagic.size() + 8 ||
      std::memcmp(bytes.data(), kCheckpointMagic.data(),
                  kCheckpointMagic.size()) != 0)
    throw DataError("not a checkpoint file: " + path);
  uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  if (Digest::value_of(bytes.data(), bytes.size() - 8) != stored)
    throw DataError("checksum mismatch in " + path);

  std::size_t off = kCheckpointMagic.size();
  const auto version = ckpt_detail::take_raw<uint32_t>(bytes, off, path);
  if (version != kCheckpointVersion)
    throw DataError("checkpoint version " + std::to_string(version) +
                    " unsupported, want " +
                    std::to_string(kCheckpointVersion));
  const auto stored_digest = ckpt_detail::take_raw<uint64_t>(bytes, off, path);
  state.step = static_cast<long>(
      ckpt_detail::take_raw<uint64_t>(bytes, off, path));
  state.best_val = ckpt_detail::take_raw<double>(bytes, off, path);
  state.data_seed = ckpt_detail::take_raw<uint64_t>(bytes, off, path);
  const auto opt_step = ckpt_detail::take_raw<uint64_t>(bytes, off, path);
  const auto count = ckpt_detail::take_raw<uint32_t>(bytes, off, path);
  const auto& params = opt.params();
  if (count != params.size())
    throw DataError("checkpoint holds " + std::to_string(count) +
                    " parameters, model has " +
                    std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& [name, p] = params[k];
    const auto name_len = ckpt_detail::take_raw<uint32_t>(bytes, off, path);
    if (off + name_len > bytes.size())
      throw DataError("truncated checkpoint: " + path);
    std::string stored_name(
        reinterpret_cast<const char*>(bytes.data() + off), name_len);
    off += name_len;
    if (stored_name != name)
      throw DataError("parameter name mismatch at slot " + std::to_string(k) +
                      ": checkpoint has '" + stored_name + "', model has '" +
                      name + "'");
    const auto rank = ckpt_detail::take_raw<uint32_t>(bytes, off, path);
    if (static_cast<long>(rank) != p->value.rank())
      throw DataError("parameter rank mismatch for " + name);
    for (long d = 0; d < p->value.rank(); ++d) {
      const auto dim = ckpt_detail::take_raw<int64_t>(bytes, off, path);
      if (dim != p->value.dim(d))
        throw DataError("parameter shape mismatch for " + name);
    }
    ckpt_detail::take_tensor(bytes, off, p->value, path);
    ckpt_detail::take_tensor(bytes, off, opt.moments_m()[k], path);
    ckpt_detail::take_tensor(bytes, off, opt.moments_v()[k], path);
  }
  if (off + 8 != bytes.size())
    throw DataError("trailing bytes in checkpoint: " + path);
  opt.set_step_count(static_cast<long>(opt_step));
  return stored_digest == config_digest;
}

}  // namespace mspred::train
