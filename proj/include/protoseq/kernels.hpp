// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>

namespace protoseq::kernels {

/// Dense double-precision inner loops used by the autodiff ops. Every
/// variant computes the same math; only summation order and FMA contraction
/// differ, so results agree to rounding.
struct KernelTable {
  const char *name;
  double (*dot)(const double *a, const double *b, std::size_t n);
  double (*squared_distance)(const double *a, const double *b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double *x, double *y, std::size_t n);
  // y = A x, A is rows x cols row-major
  void (*gemv)(const double *a, std::size_t rows, std::size_t cols,
               const double *x, double *y);
  // out += A^T g
  void (*gemv_t_acc)(const double *a, std::size_t rows, std::size_t cols,
                     const double *g, double *out);
  // A += g x^T
  void (*ger_acc)(double *a, std::size_t rows, std::size_t cols,
                  const double *g, const double *x);
};

const KernelTable &scalar_table();

/// nullptr when the AVX2 variant is not compiled in or the CPU lacks
/// AVX2+FMA.
const KernelTable *avx2_table();

/// The table used by the library. Chosen once on first use: AVX2 when
/// available, scalar otherwise. PROTOSEQ_KERNELS=scalar|avx2 overrides.
const KernelTable &active();

/// Force a variant by name ("scalar" or "avx2"). Returns false when the
/// requested variant is unavailable. Not thread-safe against concurrent
/// kernel use; call before training starts.
bool select(std::string_view name);

} // namespace protoseq::kernels
