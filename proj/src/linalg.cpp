// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/linalg.hpp"

#include <algorithm>
#include <cassert>

#include "pedrisk/simd/kernels.hpp"

namespace pedrisk {

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Matrix::resize(std::size_t rows, std::size_t cols, double fill) {
  rows_ = rows;
  cols_ = cols;
  data_.assign(rows * cols, fill);
}

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols() == b.rows());
  const auto& k = simd::active();
  out.resize(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* orow = out.row(i).data();
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double s = a(i, p);
      if (s != 0.0) k.axpy(s, b.row(p).data(), orow, b.cols());
    }
  }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.rows() == b.rows());
  const auto& k = simd::active();
  out.resize(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.rows(); ++p) {
    const double* brow = b.row(p).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = a(p, i);
      if (s != 0.0) k.axpy(s, brow, out.row(i).data(), b.cols());
    }
  }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols() == b.cols());
  const auto& k = simd::active();
  out.resize(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = k.dot(arow, b.row(j).data(), a.cols());
  }
}

void vecmat(std::span<const double> x, const Matrix& w, std::span<double> out) {
  assert(x.size() == w.rows() && out.size() == w.cols());
  const auto& k = simd::active();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t p = 0; p < w.rows(); ++p) {
    if (x[p] != 0.0) k.axpy(x[p], w.row(p).data(), out.data(), w.cols());
  }
}

void matvec(const Matrix& w, std::span<const double> x, std::span<double> out) {
  assert(x.size() == w.cols() && out.size() == w.rows());
  const auto& k = simd::active();
  for (std::size_t i = 0; i < w.rows(); ++i) out[i] = k.dot(w.row(i).data(), x.data(), x.size());
}

void add_outer(std::span<const double> x, std::span<const double> y, Matrix& out, double scale) {
  assert(out.rows() == x.size() && out.cols() == y.size());
  const auto& k = simd::active();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = scale * x[i];
    if (s != 0.0) k.axpy(s, y.data(), out.row(i).data(), y.size());
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return simd::active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  simd::active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace pedrisk
