// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace pedrisk::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double weighted_abs_diff_scalar(const double* y, const double* yhat, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (y[i] + 1.0) * std::fabs(y[i] - yhat[i]);
  return s;
}

void iou_one_to_many_scalar(double ax, double ay, double aw, double ah, const double* x,
                            const double* y, const double* w, const double* h, double* out,
                            std::size_t n) {
  const double ax2 = ax + aw;
  const double ay2 = ay + ah;
  const double area_a = aw * ah;
  for (std::size_t i = 0; i < n; ++i) {
    const double ix = std::max(0.0, std::min(ax2, x[i] + w[i]) - std::max(ax, x[i]));
    const double iy = std::max(0.0, std::min(ay2, y[i] + h[i]) - std::max(ay, y[i]));
    const double inter = ix * iy;
    const double uni = area_a + w[i] * h[i] - inter;
    out[i] = uni > 0.0 ? inter / uni : 0.0;
  }
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{
    Isa::scalar,    dot_scalar, axpy_scalar, sum_sq_diff_scalar, weighted_abs_diff_scalar,
    iou_one_to_many_scalar,
};
}  // namespace detail

}  // namespace pedrisk::simd
