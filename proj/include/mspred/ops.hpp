// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "mspred/autograd.hpp"
#include "mspred/blas.hpp"
#include "mspred/tensor.hpp"

namespace mspred::nn {

// ---------------------------------------------------------------------------
// im2col / col2im
//
// col layout: [C*kh*kw, gridH*gridW], one column per output-grid position.
// Source coordinate for column (gy,gx), row (c,ky,kx):
//   sy = gy*stride - pad + ky,  sx = gx*stride - pad + kx
// ---------------------------------------------------------------------------

template <class T>
void im2col(const T* src, long c_dim, long src_h, long src_w, long kh, long kw,
            long stride, long pad, long grid_h, long grid_w, T* col) {
  const long cols = grid_h * grid_w;
  for (long c = 0; c < c_dim; ++c) {
    for (long ky = 0; ky < kh; ++ky) {
      for (long kx = 0; kx < kw; ++kx) {
        T* row = col + ((c * kh + ky) * kw + kx) * cols;
        for (long gy = 0; gy < grid_h; ++gy) {
          const long sy = gy * stride - pad + ky;
          T* out = row + gy * grid_w;
          if (sy < 0 || sy >= src_h) {
            std::memset(out, 0, sizeof(T) * static_cast<std::size_t>(grid_w));
            continue;
          }
          const T* in = src + (c * src_h + sy) * src_w;
          if (stride == 1) {
            const long sx0 = kx - pad;
            long g_lo = sx0 < 0 ? -sx0 : 0;
            long g_hi = src_w - sx0;
            if (g_hi > grid_w) g_hi = grid_w;
            if (g_hi < g_lo) g_hi = g_lo;
            for (long g = 0; g < g_lo; ++g) out[g] = T(0);
            if (g_hi > g_lo)
              std::memcpy(out + g_lo, in + sx0 + g_lo,
                          sizeof(T) * static_cast<std::size_t>(g_hi - g_lo));
            for (long g = g_hi; g < grid_w; ++g) out[g] = T(0);
          } else {
            for (long gx = 0; gx < grid_w; ++gx) {
              const long sx = gx * stride - pad + kx;
              out[gx] = (sx >= 0 && sx < src_w) ? in[sx] : T(0);
            }
          }
        }
      }
    }
  }
}

// Scatter-add transpose of im2col: dst[c, sy, sx] += col[(c,ky,kx), (gy,gx)].
template <class T>
void col2im_add(const T* col, long c_dim, long dst_h, long dst_w, long kh,
                long kw, long stride, long pad, long grid_h, long grid_w,
                T* dst) {
  const long cols = grid_h * grid_w;
  for (long c = 0; c < c_dim; ++c) {
    for (long ky = 0; ky < kh; ++ky) {
      for (long kx = 0; kx < kw; ++kx) {
        const T* row = col + ((c * kh + ky) * kw + kx) * cols;
        for (long gy = 0; gy < grid_h; ++gy) {
          const long sy = gy * stride - pad + ky;
          if (sy < 0 || sy >= dst_h) continue;
          T* out = dst + (c * dst_h + sy) * dst_w;
          const T* in = row + gy * grid_w;
          if (stride == 1) {
            const long sx0 = kx - pad;
            long g_lo = sx0 < 0 ? -sx0 : 0;
            long g_hi = dst_w - sx0;
            if (g_hi > grid_w) g_hi = grid_w;
            for (long g = g_lo; g < g_hi; ++g) out[sx0 + g] += in[g];
          } else {
            for (long gx = 0; gx < grid_w; ++gx) {
              const long sx = gx * stride - pad + kx;
              if (sx >= 0 && sx < dst_w) out[sx] += in[gx];
            }
          }
        }
      }
    }
  }
}

template <class T>
std::vector<T>& op_scratch(int slot) {
  thread_local std::vector<T> bufs[3];
  return bufs[slot];
}

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

// x: [B,Ci,H,W], w: [Co,Ci,kh,kw], b: [Co] or null. SAME/VALID via pad.
template <class T>
VarT<T> conv2d(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b,
               long stride, long pad) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  if (xs.size() != 4 || ws.size() != 4)
    throw ShapeError("conv2d expects rank-4 input and weight");
  const long batch = xs[0], ci = xs[1], h = xs[2], wdt = xs[3];
  const long co = ws[0], kh = ws[2], kw = ws[3];
  if (ws[1] != ci)
    throw ShapeError("conv2d channel mismatch: input " + x->value.shape_str() +
                     " vs weight " + w->value.shape_str());
  const long ho = (h + 2 * pad - kh) / stride + 1;
  const long wo = (wdt + 2 * pad - kw) / stride + 1;
  if (ho <= 0 || wo <= 0) throw ShapeError("conv2d output would be empty");
  const long k_dim = ci * kh * kw;
  const long cols = ho * wo;

  TensorT<T> y({batch, co, ho, wo});
  auto& col = op_scratch<T>(0);
  col.resize(static_cast<std::size_t>(k_dim) * cols);
  for (long s = 0; s < batch; ++s) {
    im2col(x->value.data() + s * ci * h * wdt, ci, h, wdt, kh, kw, stride, pad,
           ho, wo, col.data());
    blas::gemm<T>(false, false, co, cols, k_dim, T(1), w->value.data(), k_dim,
                  col.data(), cols, T(0), y.data() + s * co * cols, cols);
  }
  if (b) {
    const T* bd = b->value.data();
    for (long s = 0; s < batch; ++s)
      for (long c = 0; c < co; ++c) {
        T* row = y.data() + (s * co + c) * cols;
        const T bv = bd[c];
        for (long i = 0; i < cols; ++i) row[i] += bv;
      }
  }

  auto node = make_op<T>(std::move(y), {x, w, b},
                         std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x, wv = w, bv = b;
    long st = stride, pd = pad;
    node->backprop = [self, xv, wv, bv, st, pd, batch, ci, h, wdt, co, kh, kw,
                      ho, wo, k_dim, cols]() {
      const T* gy = self->grad.data();
      if (bv && bv->requires_grad) {
        bv->ensure_grad();
        T* bg = bv->grad.data();
        for (long s = 0; s < batch; ++s)
          for (long c = 0; c < co; ++c) {
            const T* row = gy + (s * co + c) * cols;
            T acc = T(0);
            for (long i = 0; i < cols; ++i) acc += row[i];
            bg[c] += acc;
          }
      }
      const bool need_w = wv->requires_grad;
      const bool need_x = xv->requires_grad;
      if (need_w) wv->ensure_grad();
      if (need_x) xv->ensure_grad();
      auto& col = op_scratch<T>(0);
      auto& gcol = op_scratch<T>(1);
      if (need_w) col.resize(static_cast<std::size_t>(k_dim) * cols);
      if (need_x) gcol.resize(static_cast<std::size_t>(k_dim) * cols);
      for (long s = 0; s < batch; ++s) {
        const T* gy_s = gy + s * co * cols;
        if (need_w) {
          im2col(xv->value.data() + s * ci * h * wdt, ci, h, wdt, kh, kw, st,
                 pd, ho, wo, col.data());
          blas::gemm<T>(false, true, co, k_dim, cols, T(1), gy_s, cols,
                        col.data(), cols, T(1), wv->grad.data(), k_dim);
        }
        if (need_x) {
          blas::gemm<T>(true, false, k_dim, cols, co, T(1), wv->value.data(),
                        k_dim, gy_s, cols, T(0), gcol.data(), cols);
          col2im_add(gcol.data(), ci, h, wdt, kh, kw, st, pd, ho, wo,
                     xv->grad.data() + s * ci * h * wdt);
        }
      }
    };
  }
  return node;
}

// x: [B,Ci,H,W], w: [Ci,Co,kh,kw], b: [Co] or null.
// Output spatial size: (H-1)*stride - 2*pad + kh.
template <class T>
VarT<T> conv_transpose2d(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b,
                         long stride, long pad) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  if (xs.size() != 4 || ws.size() != 4)
    throw ShapeError("conv_transpose2d expects rank-4 input and weight");
  const long batch = xs[0], ci = xs[1], h = xs[2], wdt = xs[3];
  const long co = ws[1], kh = ws[2], kw = ws[3];
  if (ws[0] != ci)
    throw ShapeError("conv_transpose2d channel mismatch: input " +
                     x->value.shape_str() + " vs weight " +
                     w->value.shape_str());
  const long ho = (h - 1) * stride - 2 * pad + kh;
  const long wo = (wdt - 1) * stride - 2 * pad + kw;
  if (ho <= 0 || wo <= 0)
    throw ShapeError("conv_transpose2d output would be empty");
  const long k_dim = co * kh * kw;
  const long cols = h * wdt;

  TensorT<T> y({batch, co, ho, wo});
  auto& col = op_scratch<T>(0);
  col.resize(static_cast<std::size_t>(k_dim) * cols);
  for (long s = 0; s < batch; ++s) {
    // col[(co,ky,kx), (iy,ix)] = sum_ci W[ci,(co,ky,kx)] * x[ci,(iy,ix)]
    blas::gemm<T>(true, false, k_dim, cols, ci, T(1), w->value.data(), k_dim,
                  x->value.data() + s * ci * cols, cols, T(0), col.data(),
                  cols);
    col2im_add(col.data(), co, ho, wo, kh, kw, stride, pad, h, wdt,
               y.data() + s * co * ho * wo);
  }
  if (b) {
    const T* bd = b->value.data();
    const long out_px = ho * wo;
    for (long s = 0; s < batch; ++s)
      for (long c = 0; c < co; ++c) {
        T* row = y.data() + (s * co + c) * out_px;
        const T bval = bd[c];
        for (long i = 0; i < out_px; ++i) row[i] += bval;
      }
  }

  auto node = make_op<T>(std::move(y), {x, w, b}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x, wv = w, bv = b;
    long st = stride, pd = pad;
    node->backprop = [self, xv, wv, bv, st, pd, batch, ci, h, wdt, co, kh, kw,
                      ho, wo, k_dim, cols]() {
      const T* gy = self->grad.data();
      const long out_px = ho * wo;
      if (bv && bv->requires_grad) {
        bv->ensure_grad();
        T* bg = bv->grad.data();
        for (long s = 0; s < batch; ++s)
          for (long c = 0; c < co; ++c) {
            const T* row = gy + (s * co + c) * out_px;
            T acc = T(0);
            for (long i = 0; i < out_px; ++i) acc += row[i];
            bg[c] += acc;
          }
      }
      const bool need_w = wv->requires_grad;
      const bool need_x = xv->requires_grad;
      if (need_w) wv->ensure_grad();
      if (need_x) xv->ensure_grad();
      auto& gcol = op_scratch<T>(1);
      gcol.resize(static_cast<std::size_t>(k_dim) * cols);
      for (long s = 0; s < batch; ++s) {
        // gcol = im2col(gy): the forward scatter read back as a gather.
        im2col(gy + s * co * out_px, co, ho, wo, kh, kw, st, pd, h, wdt,
               gcol.data());
        if (need_x)
          blas::gemm<T>(false, false, ci, cols, k_dim, T(1), wv->value.data(),
                        k_dim, gcol.data(), cols, T(1),
                        xv->grad.data() + s * ci * cols, cols);
        if (need_w)
          blas::gemm<T>(false, true, ci, k_dim, cols, T(1),
                        xv->value.data() + s * ci * cols, cols, gcol.data(),
                        cols, T(1), wv->grad.data(), k_dim);
      }
    };
  }
  return node;
}

// x: [B,In], w: [Out,In], b: [Out] or null.
template <class T>
VarT<T> linear(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  if (xs.size() != 2 || ws.size() != 2)
    throw ShapeError("linear expects rank-2 input and weight");
  const long batch = xs[0], in_dim = xs[1], out_dim = ws[0];
  if (ws[1] != in_dim)
    throw ShapeError("linear dimension mismatch: " + x->value.shape_str() +
                     " vs " + w->value.shape_str());

  TensorT<T> y({batch, out_dim});
  blas::gemm<T>(false, true, batch, out_dim, in_dim, T(1), x->value.data(),
                in_dim, w->value.data(), in_dim, T(0), y.data(), out_dim);
  if (b) {
    const T* bd = b->value.data();
    for (long s = 0; s < batch; ++s) {
      T* row = y.data() + s * out_dim;
      for (long o = 0; o < out_dim; ++o) row[o] += bd[o];
    }
  }

  auto node = make_op<T>(std::move(y), {x, w, b}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x, wv = w, bv = b;
    node->backprop = [self, xv, wv, bv, batch, in_dim, out_dim]() {
      const T* gy = self->grad.data();
      if (bv && bv->requires_grad) {
        bv->ensure_grad();
        T* bg = bv->grad.data();
        for (long s = 0; s < batch; ++s)
          for (long o = 0; o < out_dim; ++o) bg[o] += gy[s * out_dim + o];
      }
      if (wv->requires_grad) {
        wv->ensure_grad();
        blas::gemm<T>(true, false, out_dim, in_dim, batch, T(1), gy, out_dim,
                      xv->value.data(), in_dim, T(1), wv->grad.data(), in_dim);
      }
      if (xv->requires_grad) {
        xv->ensure_grad();
        blas::gemm<T>(false, false, batch, in_dim, out_dim, T(1), gy, out_dim,
                      wv->value.data(), in_dim, T(1), xv->grad.data(), in_dim);
      }
    };
  }
  return node;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

// x: [B,C,H,W], gamma/beta: [C]. Statistics are per (sample, group), so the
// output for one sample never depends on the rest of the batch.
template <class T>
VarT<T> group_norm(const VarT<T>& x, const VarT<T>& gamma, const VarT<T>& beta,
                   long groups, T eps = T(1e-5)) {
  const auto& xs = x->value.shape();
  if (xs.size() != 4) throw ShapeError("group_norm expects rank-4 input");
  const long batch = xs[0], c_dim = xs[1], h = xs[2], w = xs[3];
  if (groups < 1 || c_dim % groups != 0)
    throw ShapeError("group_norm: groups must divide channel count");
  const long cg = c_dim / groups;
  const long gsize = cg * h * w;
  const long px = h * w;

  TensorT<T> y(xs);
  auto stats = std::make_shared<std::vector<T>>(
      static_cast<std::size_t>(batch) * groups * 2);
  const T* xd = x->value.data();
  const T* gd = gamma->value.data();
  const T* bd = beta->value.data();
  for (long s = 0; s < batch; ++s) {
    for (long g = 0; g < groups; ++g) {
      const T* base = xd + (s * c_dim + g * cg) * px;
      T mean = T(0);
      for (long i = 0; i < gsize; ++i) mean += base[i];
      mean /= T(gsize);
      T var = T(0);
      for (long i = 0; i < gsize; ++i) {
        const T d = base[i] - mean;
        var += d * d;
      }
      var /= T(gsize);
      const T inv_std = T(1) / std::sqrt(var + eps);
      (*stats)[(s * groups + g) * 2] = mean;
      (*stats)[(s * groups + g) * 2 + 1] = inv_std;
      T* out = y.data() + (s * c_dim + g * cg) * px;
      for (long c = 0; c < cg; ++c) {
        const T gc = gd[g * cg + c];
        const T bc = bd[g * cg + c];
        const T* in_c = base + c * px;
        T* out_c = out + c * px;
        for (long i = 0; i < px; ++i)
          out_c[i] = (in_c[i] - mean) * inv_std * gc + bc;
      }
    }
  }

  auto node = make_op<T>(std::move(y), {x, gamma, beta}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x, gv = gamma, bv = beta;
    node->backprop = [self, xv, gv, bv, stats, batch, c_dim, groups, cg, px,
                      gsize]() {
      const T* gy = self->grad.data();
      const T* xd = xv->value.data();
      const T* gd = gv->value.data();
      const bool need_x = xv->requires_grad;
      const bool need_g = gv->requires_grad;
      const bool need_b = bv->requires_grad;
      if (need_x) xv->ensure_grad();
      if (need_g) gv->ensure_grad();
      if (need_b) bv->ensure_grad();
      for (long s = 0; s < batch; ++s) {
        for (long g = 0; g < groups; ++g) {
          const T mean = (*stats)[(s * groups + g) * 2];
          const T inv_std = (*stats)[(s * groups + g) * 2 + 1];
          const T* xb = xd + (s * c_dim + g * cg) * px;
          const T* gyb = gy + (s * c_dim + g * cg) * px;
          if (need_g || need_b) {
            for (long c = 0; c < cg; ++c) {
              T sg = T(0), sb = T(0);
              const T* xc = xb + c * px;
              const T* gc = gyb + c * px;
              for (long i = 0; i < px; ++i) {
                sg += gc[i] * (xc[i] - mean) * inv_std;
                sb += gc[i];
              }
              if (need_g) gv->grad.data()[g * cg + c] += sg;
              if (need_b) bv->grad.data()[g * cg + c] += sb;
            }
          }
          if (need_x) {
            T s1 = T(0), s2 = T(0);
            for (long c = 0; c < cg; ++c) {
              const T gamma_c = gd[g * cg + c];
              const T* xc = xb + c * px;
              const T* gc = gyb + c * px;
              for (long i = 0; i < px; ++i) {
                const T dxhat = gc[i] * gamma_c;
                s1 += dxhat;
                s2 += dxhat * (xc[i] - mean) * inv_std;
              }
            }
            T* xg = xv->grad.data() + (s * c_dim + g * cg) * px;
            const T inv_n = T(1) / T(gsize);
            for (long c = 0; c < cg; ++c) {
              const T gamma_c = gd[g * cg + c];
              const T* xc = xb + c * px;
              const T* gc = gyb + c * px;
              T* xgc = xg + c * px;
              for (long i = 0; i < px; ++i) {
                const T xhat = (xc[i] - mean) * inv_std;
                const T dxhat = gc[i] * gamma_c;
                xgc[i] += inv_std * (dxhat - inv_n * (s1 + xhat * s2));
              }
            }
          }
        }
      }
    };
  }
  return node;
}

// ---------------------------------------------------------------------------
// Pointwise activations
// ---------------------------------------------------------------------------

template <class T>
inline T sigmoid_scalar(T x) {
  if constexpr (sizeof(T) == sizeof(float)) {
    return T(1) / (T(1) + std::exp(-x));
  } else {
    return T(1) / (T(1) + std::exp(-x));
  }
}

template <class T>
inline T tanh_scalar(T x) {
  if constexpr (sizeof(T) == sizeof(float)) {
    // 2*sigmoid(2x)-1: expf is several times faster than tanhf here and
    // accurate to a few ulp, which is plenty for float training.
    return T(2) / (T(1) + std::exp(T(-2) * x)) - T(1);
  } else {
    return std::tanh(x);
  }
}

namespace detail {

template <class T, class Fwd, class Bwd>
VarT<T> pointwise(const VarT<T>& x, Fwd fwd, Bwd bwd) {
  TensorT<T> y(x->value.shape());
  const T* in = x->value.data();
  T* out = y.data();
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(in[i]);
  auto node = make_op<T>(std::move(y), {x}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x;
    node->backprop = [self, xv, bwd]() {
      xv->ensure_grad();
      const T* g = self->grad.data();
      const T* yv = self->value.data();
      const T* in = xv->value.data();
      T* xg = xv->grad.data();
      const std::size_t n = self->value.size();
      for (std::size_t i = 0; i < n; ++i) xg[i] += bwd(g[i], yv[i], in[i]);
    };
  }
  return node;
}

}  // namespace detail

template <class T>
VarT<T> sigmoid(const VarT<T>& x) {
  return detail::pointwise(
      x, [](T v) { return sigmoid_scalar(v); },
      [](T g, T y, T) { return g * y * (T(1) - y); });
}

template <class T>
VarT<T> tanh_act(const VarT<T>& x) {
  return detail::pointwise(
      x, [](T v) { return tanh_scalar(v); },
      [](T g, T y, T) { return g * (T(1) - y * y); });
}

template <class T>
VarT<T> leaky_relu(const VarT<T>& x, T slope = T(0.2)) {
  return detail::pointwise(
      x, [slope](T v) { return v > T(0) ? v : slope * v; },
      [slope](T g, T, T in) { return in > T(0) ? g : slope * g; });
}

template <class T>
VarT<T> relu(const VarT<T>& x) {
  return detail::pointwise(
      x, [](T v) { return v > T(0) ? v : T(0); },
      [](T g, T, T in) { return in > T(0) ? g : T(0); });
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

template <class T>
VarT<T> add(const VarT<T>& a, const VarT<T>& b) {
  if (!a->value.same_shape(b->value))
    throw ShapeError("add shape mismatch: " + a->value.shape_str() + " vs " +
                     b->value.shape_str());
  TensorT<T> y(a->value.shape());
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = a->value[i] + b->value[i];
  auto node = make_op<T>(std::move(y), {a, b}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> av = a, bv = b;
    node->backprop = [self, av, bv]() {
      const T* g = self->grad.data();
      const std::size_t n = self->value.size();
      if (av->requires_grad) {
        av->ensure_grad();
        T* ga = av->grad.data();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (bv->requires_grad) {
        bv->ensure_grad();
        T* gb = bv->grad.data();
        for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
      }
    };
  }
  return node;
}

template <class T>
VarT<T> mul(const VarT<T>& a, const VarT<T>& b) {
  if (!a->value.same_shape(b->value))
    throw ShapeError("mul shape mismatch: " + a->value.shape_str() + " vs " +
                     b->value.shape_str());
  TensorT<T> y(a->value.shape());
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = a->value[i] * b->value[i];
  auto node = make_op<T>(std::move(y), {a, b}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> av = a, bv = b;
    node->backprop = [self, av, bv]() {
      const T* g = self->grad.data();
      const std::size_t n = self->value.size();
      if (av->requires_grad) {
        av->ensure_grad();
        T* ga = av->grad.data();
        const T* bvd = bv->value.data();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * bvd[i];
      }
      if (bv->requires_grad) {
        bv->ensure_grad();
        T* gb = bv->grad.data();
        const T* avd = av->value.data();
        for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * avd[i];
      }
    };
  }
  return node;
}

template <class T>
VarT<T> scale(const VarT<T>& a, T factor) {
  TensorT<T> y(a->value.shape());
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = a->value[i] * factor;
  auto node = make_op<T>(std::move(y), {a}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> av = a;
    node->backprop = [self, av, factor]() {
      av->ensure_grad();
      const T* g = self->grad.data();
      T* ga = av->grad.data();
      const std::size_t n = self->value.size();
      for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * factor;
    };
  }
  return node;
}

// ---------------------------------------------------------------------------
// Structure: concat / chunk / reshape / upsample / pooling
// ---------------------------------------------------------------------------

// Concatenate rank-4 tensors along the channel axis.
template <class T>
VarT<T> concat_channels(const std::vector<VarT<T>>& xs) {
  if (xs.empty()) throw ShapeError("concat_channels: empty input list");
  const long batch = xs[0]->value.dim(0);
  const long h = xs[0]->value.dim(2), w = xs[0]->value.dim(3);
  long c_total = 0;
  for (const auto& x : xs) {
    if (x->value.rank() != 4 || x->value.dim(0) != batch ||
        x->value.dim(2) != h || x->value.dim(3) != w)
      throw ShapeError("concat_channels: incompatible input shapes");
    c_total += x->value.dim(1);
  }
  const long px = h * w;
  TensorT<T> y({batch, c_total, h, w});
  for (long s = 0; s < batch; ++s) {
    long c_off = 0;
    for (const auto& x : xs) {
      const long ci = x->value.dim(1);
      std::memcpy(y.data() + (s * c_total + c_off) * px,
                  x->value.data() + s * ci * px,
                  sizeof(T) * static_cast<std::size_t>(ci * px));
      c_off += ci;
    }
  }
  auto node = make_op<T>(std::move(y), xs, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    std::vector<VarT<T>> inputs = xs;
    node->backprop = [self, inputs, batch, c_total, px]() {
      const T* g = self->grad.data();
      long c_off = 0;
      for (const auto& x : inputs) {
        const long ci = x->value.dim(1);
        if (x->requires_grad) {
          x->ensure_grad();
          for (long s = 0; s < batch; ++s) {
            const T* src = g + (s * c_total + c_off) * px;
            T* dst = x->grad.data() + s * ci * px;
            for (long i = 0; i < ci * px; ++i) dst[i] += src[i];
          }
        }
        c_off += ci;
      }
    };
  }
  return node;
}

// Split a rank-4 tensor into n equal channel blocks.
template <class T>
std::vector<VarT<T>> chunk_channels(const VarT<T>& x, long n) {
  const long batch = x->value.dim(0), c_dim = x->value.dim(1);
  const long h = x->value.dim(2), w = x->value.dim(3);
  if (c_dim % n != 0)
    throw ShapeError("chunk_channels: channels not divisible");
  const long ci = c_dim / n;
  const long px = h * w;
  std::vector<VarT<T>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long part = 0; part < n; ++part) {
    TensorT<T> y({batch, ci, h, w});
    for (long s = 0; s < batch; ++s)
      std::memcpy(y.data() + s * ci * px,
                  x->value.data() + (s * c_dim + part * ci) * px,
                  sizeof(T) * static_cast<std::size_t>(ci * px));
    auto node = make_op<T>(std::move(y), {x}, std::function<void()>());
    if (node->requires_grad) {
      NodeT<T>* self = node.get();
      VarT<T> xv = x;
      node->backprop = [self, xv, part, batch, c_dim, ci, px]() {
        xv->ensure_grad();
        const T* g = self->grad.data();
        for (long s = 0; s < batch; ++s) {
          T* dst = xv->grad.data() + (s * c_dim + part * ci) * px;
          const T* src = g + s * ci * px;
          for (long i = 0; i < ci * px; ++i) dst[i] += src[i];
        }
      };
    }
    out.push_back(std::move(node));
  }
  return out;
}

template <class T>
VarT<T> reshape(const VarT<T>& x, typename TensorT<T>::Shape shape) {
  TensorT<T> y = x->value.reshaped(std::move(shape));
  auto node = make_op<T>(std::move(y), {x}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x;
    node->backprop = [self, xv]() {
      xv->ensure_grad();
      const T* g = self->grad.data();
      T* xg = xv->grad.data();
      const std::size_t n = self->value.size();
      for (std::size_t i = 0; i < n; ++i) xg[i] += g[i];
    };
  }
  return node;
}

template <class T>
VarT<T> upsample_nearest(const VarT<T>& x, long factor) {
  const long batch = x->value.dim(0), c_dim = x->value.dim(1);
  const long h = x->value.dim(2), w = x->value.dim(3);
  const long ho = h * factor, wo = w * factor;
  TensorT<T> y({batch, c_dim, ho, wo});
  for (long bc = 0; bc < batch * c_dim; ++bc) {
    const T* in = x->value.data() + bc * h * w;
    T* out = y.data() + bc * ho * wo;
    for (long i = 0; i < ho; ++i)
      for (long j = 0; j < wo; ++j)
        out[i * wo + j] = in[(i / factor) * w + j / factor];
  }
  auto node = make_op<T>(std::move(y), {x}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x;
    node->backprop = [self, xv, batch, c_dim, h, w, factor]() {
      xv->ensure_grad();
      const long ho = h * factor, wo = w * factor;
      const T* g = self->grad.data();
      for (long bc = 0; bc < batch * c_dim; ++bc) {
        T* xg = xv->grad.data() + bc * h * w;
        const T* gin = g + bc * ho * wo;
        for (long i = 0; i < ho; ++i)
          for (long j = 0; j < wo; ++j)
            xg[(i / factor) * w + j / factor] += gin[i * wo + j];
      }
    };
  }
  return node;
}

template <class T>
VarT<T> maxpool2d(const VarT<T>& x, long k = 2) {
  const long batch = x->value.dim(0), c_dim = x->value.dim(1);
  const long h = x->value.dim(2), w = x->value.dim(3);
  if (h % k != 0 || w % k != 0)
    throw ShapeError("maxpool2d: spatial size not divisible by window");
  const long ho = h / k, wo = w / k;
  TensorT<T> y({batch, c_dim, ho, wo});
  auto argmax =
      std::make_shared<std::vector<long>>(static_cast<std::size_t>(y.size()));
  for (long bc = 0; bc < batch * c_dim; ++bc) {
    const T* in = x->value.data() + bc * h * w;
    T* out = y.data() + bc * ho * wo;
    long* am = argmax->data() + bc * ho * wo;
    for (long i = 0; i < ho; ++i)
      for (long j = 0; j < wo; ++j) {
        T best = in[(i * k) * w + j * k];
        long best_idx = (i * k) * w + j * k;
        for (long di = 0; di < k; ++di)
          for (long dj = 0; dj < k; ++dj) {
            const long idx = (i * k + di) * w + (j * k + dj);
            if (in[idx] > best) {
              best = in[idx];
              best_idx = idx;
            }
          }
        out[i * wo + j] = best;
        am[i * wo + j] = best_idx;
      }
  }
  auto node = make_op<T>(std::move(y), {x}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x;
    node->backprop = [self, xv, argmax, batch, c_dim, h, w, k]() {
      xv->ensure_grad();
      const long ho = h / k, wo = w / k;
      const T* g = self->grad.data();
      for (long bc = 0; bc < batch * c_dim; ++bc) {
        T* xg = xv->grad.data() + bc * h * w;
        const T* gin = g + bc * ho * wo;
        const long* am = argmax->data() + bc * ho * wo;
        for (long i = 0; i < ho * wo; ++i) xg[am[i]] += gin[i];
      }
    };
  }
  return node;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

// Scalar sum of squared differences against a constant target.
template <class T>
VarT<T> sum_sq_diff(const VarT<T>& x, const TensorT<T>& target) {
  if (!x->value.same_shape(target))
    throw ShapeError("sum_sq_diff shape mismatch: " + x->value.shape_str() +
                     " vs " + target.shape_str());
  T acc = T(0);
  const std::size_t n = x->value.size();
  for (std::size_t i = 0; i < n; ++i) {
    const T d = x->value[i] - target[i];
    acc += d * d;
  }
  TensorT<T> y({1});
  y[0] = acc;
  auto node = make_op<T>(std::move(y), {x}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x;
    auto tgt = std::make_shared<TensorT<T>>(target);
    node->backprop = [self, xv, tgt]() {
      xv->ensure_grad();
      const T g = self->grad[0];
      T* xg = xv->grad.data();
      const std::size_t n = xv->value.size();
      for (std::size_t i = 0; i < n; ++i)
        xg[i] += T(2) * (xv->value[i] - (*tgt)[i]) * g;
    };
  }
  return node;
}

template <class T>
VarT<T> sum_vars(const std::vector<VarT<T>>& xs) {
  if (xs.empty()) throw ShapeError("sum_vars: empty input list");
  TensorT<T> y({1});
  for (const auto& x : xs) {
    if (x->value.size() != 1) throw ShapeError("sum_vars expects scalars");
    y[0] += x->value[0];
  }
  auto node = make_op<T>(std::move(y), xs, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    std::vector<VarT<T>> inputs = xs;
    node->backprop = [self, inputs]() {
      for (const auto& x : inputs)
        if (x->requires_grad) {
          x->ensure_grad();
          x->grad[0] += self->grad[0];
        }
    };
  }
  return node;
}

template <class T>
VarT<T> sqrt_scalar(const VarT<T>& x, T eps = T(1e-12)) {
  if (x->value.size() != 1) throw ShapeError("sqrt_scalar expects a scalar");
  TensorT<T> y({1});
  y[0] = std::sqrt(x->value[0]);
  auto node = make_op<T>(std::move(y), {x}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x;
    node->backprop = [self, xv, eps]() {
      xv->ensure_grad();
      xv->grad[0] += self->grad[0] / (T(2) * std::max(self->value[0], eps));
    };
  }
  return node;
}

// Per-sample sum of squared differences: x [B, ...] -> [B].
template <class T>
VarT<T> sum_sq_diff_rows(const VarT<T>& x, const TensorT<T>& target) {
  if (!x->value.same_shape(target))
    throw ShapeError("sum_sq_diff_rows shape mismatch: " +
                     x->value.shape_str() + " vs " + target.shape_str());
  if (x->value.rank() < 1)
    throw ShapeError("sum_sq_diff_rows expects rank >= 1");
  const long batch = x->value.dim(0);
  const long per = static_cast<long>(x->value.size()) / batch;
  TensorT<T> y({batch});
  for (long b = 0; b < batch; ++b) {
    T acc = T(0);
    for (long i = 0; i < per; ++i) {
      const T d = x->value[static_cast<std::size_t>(b * per + i)] -
                  target[static_cast<std::size_t>(b * per + i)];
      acc += d * d;
    }
    y[static_cast<std::size_t>(b)] = acc;
  }
  auto node = make_op<T>(std::move(y), {x}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x;
    auto tgt = std::make_shared<TensorT<T>>(target);
    node->backprop = [self, xv, tgt, batch, per]() {
      xv->ensure_grad();
      T* xg = xv->grad.data();
      for (long b = 0; b < batch; ++b) {
        const T g = self->grad[static_cast<std::size_t>(b)];
        for (long i = 0; i < per; ++i) {
          const std::size_t k = static_cast<std::size_t>(b * per + i);
          xg[k] += T(2) * (xv->value[k] - (*tgt)[k]) * g;
        }
      }
    };
  }
  return node;
}

// Elementwise square root of a non-negative tensor.
template <class T>
VarT<T> sqrt_elem(const VarT<T>& x, T eps = T(1e-12)) {
  TensorT<T> y(x->value.shape());
  const std::size_t n = x->value.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = std::sqrt(x->value[i]);
  auto node = make_op<T>(std::move(y), {x}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x;
    node->backprop = [self, xv, eps, n]() {
      xv->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        xv->grad[i] +=
            self->grad[i] / (T(2) * std::max(self->value[i], eps));
    };
  }
  return node;
}

// Scalar mean over all elements.
template <class T>
VarT<T> mean_all(const VarT<T>& x) {
  const std::size_t n = x->value.size();
  if (n == 0) throw ShapeError("mean_all: empty tensor");
  TensorT<T> y({1});
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += x->value[i];
  y[0] = acc / static_cast<T>(n);
  auto node = make_op<T>(std::move(y), {x}, std::function<void()>());
  if (node->requires_grad) {
    NodeT<T>* self = node.get();
    VarT<T> xv = x;
    node->backprop = [self, xv, n]() {
      xv->ensure_grad();
      const T g = self->grad[0] / static_cast<T>(n);
      for (std::size_t i = 0; i < n; ++i) xv->grad[i] += g;
    };
  }
  return node;
}

template <class T>
T scalar(const VarT<T>& v) {
  return v->value[0];
}

}  // namespace mspred::nn
