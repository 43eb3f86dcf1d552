// Compiled with -mavx2 -mfma; only reached through the runtime dispatcher.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "stochmed/kernels.hpp"

namespace stochmed::kernels {
namespace {

constexpr std::size_t kLeaf = 64;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum_leaf(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_avx2(const double* x, std::size_t n) {
  if (n <= kLeaf) return sum_leaf(x, n);
  const std::size_t half = n / 2;
  return sum_avx2(x, half) + sum_avx2(x + half, n - half);
}

double sum_sq_dev_leaf(const double* x, double center, std::size_t n) {
  const __m256d c = _mm256_set1_pd(center);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), c);
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), c);
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = x[i] - center;
    s += d * d;
  }
  return s;
}

double sum_sq_dev_avx2(const double* x, double center, std::size_t n) {
  if (n <= kLeaf) return sum_sq_dev_leaf(x, center, n);
  const std::size_t half = n / 2;
  return sum_sq_dev_avx2(x, center, half) + sum_sq_dev_avx2(x + half, center, n - half);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd();
  __m256d a3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), a2);
    a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), a3);
  }
  for (; i + 4 <= n; i += 4) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

std::size_t weighted_residual_avx2(const double* gd, const double* e, const double* y,
                                   const double* m, double cap, double* out, std::size_t n) {
  const __m256d vcap = _mm256_set1_pd(cap);
  std::size_t capped = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d w = _mm256_div_pd(_mm256_loadu_pd(gd + i), _mm256_loadu_pd(e + i));
    const __m256d over = _mm256_cmp_pd(w, vcap, _CMP_GT_OQ);
    capped += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(over)));
    w = _mm256_blendv_pd(w, vcap, over);
    const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(m + i));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(w, r));
  }
  for (; i < n; ++i) {
    double w = gd[i] / e[i];
    if (w > cap) {
      w = cap;
      ++capped;
    }
    out[i] = w * (y[i] - m[i]);
  }
  return capped;
}

void odds_shift_avx2(const double* g1, double d, double* out, std::size_t n) {
  const __m256d vd = _mm256_set1_pd(d);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(g1 + i);
    const __m256d num = _mm256_mul_pd(vd, g);
    const __m256d den = _mm256_sub_pd(_mm256_add_pd(num, one), g);
    _mm256_storeu_pd(out + i, _mm256_div_pd(num, den));
  }
  for (; i < n; ++i) {
    const double num = d * g1[i];
    out[i] = num / (num + 1.0 - g1[i]);
  }
}

void affine_avx2(const double* x, double shift, double scale, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(shift);
  const __m256d vk = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs), vk));
  }
  for (; i < n; ++i) out[i] = (x[i] - shift) * scale;
}

// Four columns per pass so each multiplier vector is loaded once.
double sup_abs_projection_avx2(const double* xi, const double* cols, std::size_t n,
                               std::size_t k) {
  double best = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= k; j += 4) {
    const double* c0 = cols + (j + 0) * n;
    const double* c1 = cols + (j + 1) * n;
    const double* c2 = cols + (j + 2) * n;
    const double* c3 = cols + (j + 3) * n;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      const __m256d x = _mm256_loadu_pd(xi + i);
      a0 = _mm256_fmadd_pd(x, _mm256_loadu_pd(c0 + i), a0);
      a1 = _mm256_fmadd_pd(x, _mm256_loadu_pd(c1 + i), a1);
      a2 = _mm256_fmadd_pd(x, _mm256_loadu_pd(c2 + i), a2);
      a3 = _mm256_fmadd_pd(x, _mm256_loadu_pd(c3 + i), a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; i < n; ++i) {
      s0 += xi[i] * c0[i];
      s1 += xi[i] * c1[i];
      s2 += xi[i] * c2[i];
      s3 += xi[i] * c3[i];
    }
    best = std::max({best, std::abs(s0), std::abs(s1), std::abs(s2), std::abs(s3)});
  }
  for (; j < k; ++j) best = std::max(best, std::abs(dot_avx2(xi, cols + j * n, n)));
  return best;
}

}  // namespace

namespace detail {
const KernelTable& avx2_table() {
  static const KernelTable t{
      Isa::Avx2,       sum_avx2,    sum_sq_dev_avx2, dot_avx2, weighted_residual_avx2,
      odds_shift_avx2, affine_avx2, sup_abs_projection_avx2,
  };
  return t;
}
}  // namespace detail

}  // namespace stochmed::kernels
