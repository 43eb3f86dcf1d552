#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "stochmed/kernels.hpp"

using namespace stochmed;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double naive_sum(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return static_cast<double>(s);
}

const std::size_t kSizes[] = {0, 1, 3, 7, 8, 15, 16, 63, 64, 65, 127, 129, 1000, 4097, 100000};

}  // namespace

TEST_CASE("scalar kernels agree with long-double references") {
  const auto& s = kernels::table(kernels::Isa::Scalar);
  for (std::size_t n : kSizes) {
    const auto x = random_vec(n, n + 1);
    const auto y = random_vec(n, n + 2);
    CHECK(s.sum(x.data(), n) == doctest::Approx(naive_sum(x)).epsilon(1e-12));
    long double d = 0;
    for (std::size_t i = 0; i < n; ++i) d += static_cast<long double>(x[i]) * y[i];
    CHECK(s.dot(x.data(), y.data(), n) == doctest::Approx(static_cast<double>(d)).epsilon(1e-12));
  }
}

TEST_CASE("pairwise sum is exact on integers and order-stable") {
  std::vector<double> v(10001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  CHECK(kernels::sum(v) == 50005000.0);
  CHECK(kernels::mean(v) == 5000.0);
}

TEST_CASE("population variance uses divisor n") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(kernels::variance(v) == doctest::Approx(1.25));
}

#if defined(STOCHMED_HAVE_AVX2)
TEST_CASE("avx2 kernels match the scalar reference") {
  if (!kernels::available(kernels::Isa::Avx2)) {
    MESSAGE("avx2 not available on this CPU; skipping");
    return;
  }
  const auto& s = kernels::table(kernels::Isa::Scalar);
  const auto& v = kernels::table(kernels::Isa::Avx2);
  CHECK(v.isa == kernels::Isa::Avx2);
  for (std::size_t n : kSizes) {
    CAPTURE(n);
    const auto x = random_vec(n, 3 * n + 1);
    const auto y = random_vec(n, 3 * n + 2);
    const auto m = random_vec(n, 3 * n + 3);
    const auto gd = random_vec(n, 3 * n + 4, 0.0, 1.0);
    auto e = random_vec(n, 3 * n + 5, 0.0, 1.0);
    for (std::size_t i = 0; i < n; i += 5) e[i] = 1e-7;  // forces capping
    const double scale = std::max<double>(1.0, static_cast<double>(n));

    CHECK(std::abs(v.sum(x.data(), n) - s.sum(x.data(), n)) <= 1e-14 * scale);
    CHECK(std::abs(v.sum_sq_dev(x.data(), 0.3, n) - s.sum_sq_dev(x.data(), 0.3, n)) <= 1e-14 * scale);
    CHECK(std::abs(v.dot(x.data(), y.data(), n) - s.dot(x.data(), y.data(), n)) <= 1e-14 * scale);

    std::vector<double> o1(n), o2(n);
    const auto c1 = s.weighted_residual(gd.data(), e.data(), y.data(), m.data(), 1e4, o1.data(), n);
    const auto c2 = v.weighted_residual(gd.data(), e.data(), y.data(), m.data(), 1e4, o2.data(), n);
    CHECK(c1 == c2);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-15));

    s.odds_shift(gd.data(), 0.5, o1.data(), n);
    v.odds_shift(gd.data(), 0.5, o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-15));

    s.affine(x.data(), 0.2, 3.0, o1.data(), n);
    v.affine(x.data(), 0.2, 3.0, o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-15));

    for (std::size_t k : {1u, 3u, 4u, 5u, 10u}) {
      const auto cols = random_vec(n * k, 7 * n + k);
      const double a = s.sup_abs_projection(x.data(), cols.data(), n, k);
      const double b = v.sup_abs_projection(x.data(), cols.data(), n, k);
      CHECK(std::abs(a - b) <= 1e-13 * scale);
    }
  }
}
#endif

TEST_CASE("weighted residual caps ratios and counts them") {
  const auto& s = kernels::table(kernels::Isa::Scalar);
  const double gd[3] = {0.6, 1.0, 0.0};
  const double e[3] = {0.3, 1e-6, 0.5};
  const double y[3] = {1.0, 1.0, 1.0};
  const double m[3] = {0.4, 0.0, 0.0};
  double out[3];
  CHECK(s.weighted_residual(gd, e, y, m, 1e4, out, 3) == 1);
  CHECK(out[0] == doctest::Approx(1.2));
  CHECK(out[1] == doctest::Approx(1e4));
  CHECK(out[2] == 0.0);
}

TEST_CASE("sup_abs_projection takes the max over columns") {
  const auto& s = kernels::table(kernels::Isa::Scalar);
  const double xi[2] = {1.0, -1.0};
  const double cols[4] = {1.0, 1.0, 2.0, -1.0};  // column-major: (1,1), (2,-1)
  CHECK(s.sup_abs_projection(xi, cols, 2, 2) == doctest::Approx(3.0));
}
