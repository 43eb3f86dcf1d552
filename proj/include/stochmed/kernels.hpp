#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation; an AVX2/FMA variant is selected at runtime when the CPU
// supports it. STOCHMED_ISA=scalar|avx2 in the environment overrides the
// detection (an unavailable request falls back to scalar).

#include <cstddef>
#include <span>
#include <string_view>

namespace stochmed::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;

  // Pairwise (blocked) summation; the reduction tree depends only on n.
  double (*sum)(const double* x, std::size_t n);

  // Sum of squared deviations from `center`, same reduction tree as `sum`.
  double (*sum_sq_dev)(const double* x, double center, std::size_t n);

  double (*dot)(const double* x, const double* y, std::size_t n);

  // out[i] = min(gd[i] / e[i], cap) * (y[i] - m[i]); returns the number of
  // ratios that were capped.
  std::size_t (*weighted_residual)(const double* gd, const double* e, const double* y,
                                   const double* m, double cap, double* out, std::size_t n);

  // out[i] = d * g1[i] / (d * g1[i] + 1 - g1[i])
  void (*odds_shift)(const double* g1, double d, double* out, std::size_t n);

  // out[i] = (x[i] - shift) * scale
  void (*affine)(const double* x, double shift, double scale, double* out, std::size_t n);

  // max_k |<xi, cols[:, k]>| with `cols` column-major n x k.
  double (*sup_abs_projection)(const double* xi, const double* cols, std::size_t n,
                               std::size_t k);
};

bool available(Isa isa);
const KernelTable& table(Isa isa);

// Table chosen at first use (CPU detection + environment override).
const KernelTable& active();

// Span conveniences over active().
double sum(std::span<const double> x);
double mean(std::span<const double> x);
// Population variance (divisor n).
double variance(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);

namespace detail {
const KernelTable& scalar_table();
#if defined(STOCHMED_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
}  // namespace detail

}  // namespace stochmed::kernels
