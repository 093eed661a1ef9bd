// SPDX-License-Identifier: Apache-2.0
#include "protoseq/kernels.hpp"

namespace protoseq::kernels {
namespace {

double dot(const double *a, const double *b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += a[i] * b[i];
  return s;
}

double squared_distance(const double *a, const double *b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy(double alpha, const double *x, double *y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += alpha * x[i];
}

void gemv(const double *a, std::size_t rows, std::size_t cols, const double *x,
          double *y) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] = dot(a + r * cols, x, cols);
}

void gemv_t_acc(const double *a, std::size_t rows, std::size_t cols,
                const double *g, double *out) {
  for (std::size_t r = 0; r < rows; ++r)
    if (g[r] != 0.0)
      axpy(g[r], a + r * cols, out, cols);
}

void ger_acc(double *a, std::size_t rows, std::size_t cols, const double *g,
             const double *x) {
  for (std::size_t r = 0; r < rows; ++r)
    if (g[r] != 0.0)
      axpy(g[r], x, a + r * cols, cols);
}

} // namespace

const KernelTable &scalar_table() {
  static const KernelTable table{"scalar", dot,  squared_distance, axpy,
                                 gemv,     gemv_t_acc, ger_acc};
  return table;
}

} // namespace protoseq::kernels
