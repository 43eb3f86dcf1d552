#include <algorithm>
#include <cmath>

#include "stochmed/kernels.hpp"

namespace stochmed::kernels {
namespace {

constexpr std::size_t kLeaf = 64;

double sum_scalar(const double* x, std::size_t n) {
  if (n <= kLeaf) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return sum_scalar(x, half) + sum_scalar(x + half, n - half);
}

double sum_sq_dev_scalar(const double* x, double center, std::size_t n) {
  if (n <= kLeaf) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - center;
      s += d * d;
    }
    return s;
  }
  const std::size_t half = n / 2;
  return sum_sq_dev_scalar(x, center, half) + sum_sq_dev_scalar(x + half, center, n - half);
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

std::size_t weighted_residual_scalar(const double* gd, const double* e, const double* y,
                                     const double* m, double cap, double* out, std::size_t n) {
  std::size_t capped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = gd[i] / e[i];
    if (w > cap) {
      w = cap;
      ++capped;
    }
    out[i] = w * (y[i] - m[i]);
  }
  return capped;
}

void odds_shift_scalar(const double* g1, double d, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double num = d * g1[i];
    out[i] = num / (num + 1.0 - g1[i]);
  }
}

void affine_scalar(const double* x, double shift, double scale, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - shift) * scale;
}

double sup_abs_projection_scalar(const double* xi, const double* cols, std::size_t n,
                                 std::size_t k) {
  double best = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    best = std::max(best, std::abs(dot_scalar(xi, cols + j * n, n)));
  }
  return best;
}

}  // namespace

namespace detail {
const KernelTable& scalar_table() {
  static const KernelTable t{
      Isa::Scalar,       sum_scalar,        sum_sq_dev_scalar, dot_scalar, weighted_residual_scalar,
      odds_shift_scalar, affine_scalar,     sup_abs_projection_scalar,
  };
  return t;
}
}  // namespace detail

}  // namespace stochmed::kernels
