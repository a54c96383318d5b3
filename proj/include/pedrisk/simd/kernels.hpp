// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel inner loops shared by the metric, detection and PCPM code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The variant in use is picked once at runtime from the CPU feature
// bits; the PEDRISK_SIMD environment variable ("scalar" or "avx2") overrides
// the choice. Tests call kernels_for() directly to compare the two.

#include <cstddef>
#include <string_view>

namespace pedrisk::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[i] += alpha * x[i]; bit-identical across variants
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // sum_i (a[i] - b[i])^2
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);

  // sum_i (y[i] + 1) * |y[i] - yhat[i]|
  double (*weighted_abs_diff)(const double* y, const double* yhat, std::size_t n);

  // out[i] = IoU of box (ax, ay, aw, ah) with box i of the SoA arrays.
  // Bit-identical across variants: no reductions, no contraction.
  void (*iou_one_to_many)(double ax, double ay, double aw, double ah,
                          const double* x, const double* y, const double* w,
                          const double* h, double* out, std::size_t n);
};

bool isa_supported(Isa isa);
std::string_view isa_name(Isa isa);

// Throws std::invalid_argument when the ISA is not available on this CPU.
const KernelTable& kernels_for(Isa isa);

// The process-wide table.
const KernelTable& active();
Isa active_isa();
void set_active_isa(Isa isa);

namespace detail {
extern const KernelTable kScalarTable;
#if defined(PEDRISK_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
}  // namespace detail

}  // namespace pedrisk::simd
