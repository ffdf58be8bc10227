// Copyright (c) 2026 The mspred-cpp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <vector>

#if defined(__unix__) || defined(__APPLE__)
#include <dlfcn.h>
#define MSPRED_HAVE_DLOPEN 1
#endif

namespace mspred::blas {

// cblas calling-convention constants.
inline constexpr int kRowMajor = 101;
inline constexpr int kNoTrans = 111;
inline constexpr int kTrans = 112;

using SgemmFn = void (*)(int, int, int, int, int, int, float, const float*,
                         int, const float*, int, float, float*, int);
using DgemmFn = void (*)(int, int, int, int, int, int, double, const double*,
                         int, const double*, int, double, double*, int);

struct Provider {
  SgemmFn sgemm = nullptr;
  DgemmFn dgemm = nullptr;
  const char* backend = "builtin";
};

// Loads a system BLAS at first use. The library is opened with dlopen instead
// of link-time binding because OPENBLAS_CORETYPE must be in the environment
// before the library's constructor runs its kernel auto-detection: virtualized
// CPUs often mask their model string, and OpenBLAS then falls back to a kernel
// several times slower than what the hardware supports. Set
// MSPRED_NO_BLAS=1 to force the builtin fallback.
inline const Provider& provider() {
  static const Provider p = [] {
    Provider out;
    if (std::getenv("MSPRED_NO_BLAS")) return out;
#if defined(MSPRED_HAVE_DLOPEN)
#if defined(__x86_64__) && defined(__GNUC__)
    if (__builtin_cpu_supports("avx512f")) {
      // Do not override an explicit user choice.
      ::setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
    }
#endif
    const char* names[] = {"libopenblas.so.0", "libblas.so.3",
                           "libopenblas.so", "libopenblas.dylib"};
    for (const char* name : names) {
      void* handle = ::dlopen(name, RTLD_NOW | RTLD_LOCAL);
      if (!handle) continue;
      auto s = reinterpret_cast<SgemmFn>(::dlsym(handle, "cblas_sgemm"));
      auto d = reinterpret_cast<DgemmFn>(::dlsym(handle, "cblas_dgemm"));
      if (s && d) {
        out.sgemm = s;
        out.dgemm = d;
        out.backend = name;
        break;
      }
      ::dlclose(handle);
    }
#endif
    return out;
  }();
  return p;
}

// Portable fallback: row-major C = alpha*op(A)*op(B) + beta*C. The no-trans
// case runs an i-k-j axpy loop that autovectorizes; transposed operands go
// through a packed copy first so the inner loop stays contiguous.
template <class T>
void gemm_builtin(bool trans_a, bool trans_b, int m, int n, int k, T alpha,
                  const T* a, int lda, const T* b, int ldb, T beta, T* c,
                  int ldc) {
  std::vector<T> a_packed, b_packed;
  if (trans_a) {
    a_packed.resize(static_cast<std::size_t>(m) * k);
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p)
        a_packed[static_cast<std::size_t>(i) * k + p] = a[static_cast<std::size_t>(p) * lda + i];
    a = a_packed.data();
    lda = k;
  }
  if (trans_b) {
    b_packed.resize(static_cast<std::size_t>(k) * n);
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < n; ++j)
        b_packed[static_cast<std::size_t>(p) * n + j] = b[static_cast<std::size_t>(j) * ldb + p];
    b = b_packed.data();
    ldb = n;
  }
  for (int i = 0; i < m; ++i) {
    T* ci = c + static_cast<std::size_t>(i) * ldc;
    if (beta == T(0)) {
      for (int j = 0; j < n; ++j) ci[j] = T(0);
    } else if (beta != T(1)) {
      for (int j = 0; j < n; ++j) ci[j] *= beta;
    }
    const T* ai = a + static_cast<std::size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const T av = alpha * ai[p];
      if (av == T(0)) continue;
      const T* bp = b + static_cast<std::size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// Row-major C[m,n] = alpha*op(A)*op(B) + beta*C.
template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a,
          int lda, const T* b, int ldb, T beta, T* c, int ldc) {
  const Provider& p = provider();
  if constexpr (sizeof(T) == sizeof(float)) {
    if (p.sgemm) {
      p.sgemm(kRowMajor, trans_a ? kTrans : kNoTrans,
              trans_b ? kTrans : kNoTrans, m, n, k, static_cast<float>(alpha),
              reinterpret_cast<const float*>(a), lda,
              reinterpret_cast<const float*>(b), ldb, static_cast<float>(beta),
              reinterpret_cast<float*>(c), ldc);
      return;
    }
  } else {
    if (p.dgemm) {
      p.dgemm(kRowMajor, trans_a ? kTrans : kNoTrans,
              trans_b ? kTrans : kNoTrans, m, n, k, static_cast<double>(alpha),
              reinterpret_cast<const double*>(a), lda,
              reinterpret_cast<const double*>(b), ldb,
              static_cast<double>(beta), reinterpret_cast<double*>(c), ldc);
      return;
    }
  }
  gemm_builtin(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace mspred::blas
