// SPDX-License-Identifier: Apache-2.0
#include <random>
#include <vector>

#include "doctest.h"
#include "pedrisk/simd/kernels.hpp"

using namespace pedrisk::simd;

namespace {

std::vector<double> randn(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar table is always available") {
  CHECK(isa_supported(Isa::scalar));
  CHECK(kernels_for(Isa::scalar).isa == Isa::scalar);
  CHECK(isa_name(Isa::scalar) == "scalar");
}

TEST_CASE("scalar kernels on hand-worked inputs") {
  const auto& k = kernels_for(Isa::scalar);
  const double a[] = {1, 2, 3}, b[] = {4, -5, 6};
  CHECK(k.dot(a, b, 3) == doctest::Approx(12.0));
  CHECK(k.sum_sq_diff(a, b, 3) == doctest::Approx(9.0 + 49.0 + 9.0));
  // weights y+1 = 2, 3, 4
  CHECK(k.weighted_abs_diff(a, b, 3) == doctest::Approx(2 * 3 + 3 * 7 + 4 * 3));
  double y[] = {1, 1, 1};
  k.axpy(2.0, a, y, 3);
  CHECK(y[2] == 7.0);
  double x[] = {0, 10, 100}, yy[] = {0, 0, 0}, w[] = {10, 10, 1}, h[] = {10, 10, 1}, out[3];
  k.iou_one_to_many(5, 0, 10, 10, x, yy, w, h, out, 3);
  CHECK(out[0] == doctest::Approx(50.0 / 150.0));
  CHECK(out[1] == doctest::Approx(50.0 / 150.0));
  CHECK(out[2] == 0.0);
}

TEST_CASE("avx2 kernels agree with scalar") {
  if (!isa_supported(Isa::avx2)) {
    MESSAGE("AVX2 not available; equivalence not exercised");
    return;
  }
  const auto& s = kernels_for(Isa::scalar);
  const auto& v = kernels_for(Isa::avx2);
  std::mt19937_64 rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 33u, 1000u}) {
    CAPTURE(n);
    const auto a = randn(rng, n), b = randn(rng, n, 3.0);
    auto rel = [](double p, double q) { return std::abs(p - q) <= 1e-12 * (1.0 + std::abs(p)); };
    CHECK(rel(s.dot(a.data(), b.data(), n), v.dot(a.data(), b.data(), n)));
    CHECK(rel(s.sum_sq_diff(a.data(), b.data(), n), v.sum_sq_diff(a.data(), b.data(), n)));
    std::vector<double> y(n), yhat = randn(rng, n, 5.0);
    std::uniform_int_distribution<int> cnt(0, 200);
    for (double& t : y) t = cnt(rng);
    CHECK(rel(s.weighted_abs_diff(y.data(), yhat.data(), n), v.weighted_abs_diff(y.data(), yhat.data(), n)));

    std::vector<double> y1 = b, y2 = b;
    s.axpy(0.37, a.data(), y1.data(), n);
    v.axpy(0.37, a.data(), y2.data(), n);
    CHECK(y1 == y2);

    std::uniform_real_distribution<double> u(0.0, 50.0);
    std::vector<double> bx(n), by(n), bw(n), bh(n), o1(n), o2(n);
    for (std::size_t i = 0; i < n; ++i) {
      bx[i] = u(rng);
      by[i] = u(rng);
      bw[i] = 0.5 + u(rng);
      bh[i] = 0.5 + u(rng);
    }
    s.iou_one_to_many(10, 12, 20, 15, bx.data(), by.data(), bw.data(), bh.data(), o1.data(), n);
    v.iou_one_to_many(10, 12, 20, 15, bx.data(), by.data(), bw.data(), bh.data(), o2.data(), n);
    CHECK(o1 == o2);
  }
}

TEST_CASE("active isa can be switched") {
  const Isa before = active_isa();
  set_active_isa(Isa::scalar);
  CHECK(active().isa == Isa::scalar);
  set_active_isa(before);
  CHECK(active_isa() == before);
}
