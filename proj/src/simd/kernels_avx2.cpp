// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/simd/kernels.hpp"

#if defined(PEDRISK_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace pedrisk::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double weighted_abs_diff_avx2(const double* y, const double* yhat, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d diff = _mm256_andnot_pd(sign_mask, _mm256_sub_pd(vy, _mm256_loadu_pd(yhat + i)));
    acc = _mm256_fmadd_pd(_mm256_add_pd(vy, one), diff, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += (y[i] + 1.0) * std::fabs(y[i] - yhat[i]);
  return s;
}

void iou_one_to_many_avx2(double ax, double ay, double aw, double ah, const double* x,
                          const double* y, const double* w, const double* h, double* out,
                          std::size_t n) {
  const double ax2s = ax + aw;
  const double ay2s = ay + ah;
  const double area_as = aw * ah;
  const __m256d vax = _mm256_set1_pd(ax);
  const __m256d vay = _mm256_set1_pd(ay);
  const __m256d vax2 = _mm256_set1_pd(ax2s);
  const __m256d vay2 = _mm256_set1_pd(ay2s);
  const __m256d area_a = _mm256_set1_pd(area_as);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d bx = _mm256_loadu_pd(x + i);
    const __m256d by = _mm256_loadu_pd(y + i);
    const __m256d bw = _mm256_loadu_pd(w + i);
    const __m256d bh = _mm256_loadu_pd(h + i);
    // Operand order mirrors std::min/std::max so signed zeros agree with the scalar path.
    const __m256d ix = _mm256_max_pd(
        _mm256_sub_pd(_mm256_min_pd(_mm256_add_pd(bx, bw), vax2), _mm256_max_pd(bx, vax)), zero);
    const __m256d iy = _mm256_max_pd(
        _mm256_sub_pd(_mm256_min_pd(_mm256_add_pd(by, bh), vay2), _mm256_max_pd(by, vay)), zero);
    const __m256d inter = _mm256_mul_pd(ix, iy);
    const __m256d uni = _mm256_sub_pd(_mm256_add_pd(area_a, _mm256_mul_pd(bw, bh)), inter);
    const __m256d positive = _mm256_cmp_pd(uni, zero, _CMP_GT_OQ);
    const __m256d ratio = _mm256_div_pd(inter, uni);
    _mm256_storeu_pd(out + i, _mm256_and_pd(positive, ratio));
  }
  for (; i < n; ++i) {
    const double ix = std::max(0.0, std::min(ax2s, x[i] + w[i]) - std::max(ax, x[i]));
    const double iy = std::max(0.0, std::min(ay2s, y[i] + h[i]) - std::max(ay, y[i]));
    const double inter = ix * iy;
    const double uni = area_as + w[i] * h[i] - inter;
    out[i] = uni > 0.0 ? inter / uni : 0.0;
  }
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table{
    Isa::avx2,   dot_avx2, axpy_avx2, sum_sq_diff_avx2, weighted_abs_diff_avx2,
    iou_one_to_many_avx2,
};
}  // namespace detail

}  // namespace pedrisk::simd

#endif  // PEDRISK_HAVE_AVX2
