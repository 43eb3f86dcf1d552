#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stochmed {

// Integration rule for ∫ f(a) dκ(a) over the exposure support: counting
// measure for discrete exposures, composite trapezoid for continuous ones.
struct ExposureSupport {
  std::vector<double> nodes;
  std::vector<double> weights;
  bool discrete = true;

  static ExposureSupport binary();
  static ExposureSupport discrete_points(std::vector<double> points);

  // Evenly spaced trapezoid rule on [lo, hi] with roughly `points` nodes in
  // total. Breakpoints strictly inside the interval split it into segments;
  // each segment end is evaluated just inside the segment so jump
  // discontinuities at breakpoints are integrated without smearing.
  static ExposureSupport trapezoid(double lo, double hi, std::size_t points,
                                   std::span<const double> breakpoints = {});

  std::size_t size() const { return nodes.size(); }
  double integrate(std::span<const double> values) const;
  double lo() const;
  double hi() const;
};

inline constexpr std::size_t kDefaultQuadraturePoints = 512;

}  // namespace stochmed
