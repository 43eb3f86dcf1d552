#include "stochmed/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "stochmed/error.hpp"
#include "stochmed/kernels.hpp"

namespace stochmed {

ExposureSupport ExposureSupport::binary() { return discrete_points({0.0, 1.0}); }

ExposureSupport ExposureSupport::discrete_points(std::vector<double> points) {
  require(!points.empty(), ErrorCode::DomainError, "discrete support needs at least one point");
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  ExposureSupport s;
  s.discrete = true;
  s.weights.assign(points.size(), 1.0);
  s.nodes = std::move(points);
  return s;
}

ExposureSupport ExposureSupport::trapezoid(double lo, double hi, std::size_t points,
                                           std::span<const double> breakpoints) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorCode::QuadratureError,
          "quadrature interval must satisfy lo < hi");
  require(points >= 2, ErrorCode::QuadratureError, "quadrature needs at least two points");

  std::vector<double> cuts{lo};
  for (double b : breakpoints) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double width = hi - lo;
  // Offset of segment-end nodes from the cut; small relative to the spacing.
  const double inset = width * 1e-10;

  ExposureSupport s;
  s.discrete = false;
  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double a = cuts[seg];
    const double b = cuts[seg + 1];
    const auto k = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil(static_cast<double>(points - 1) * (b - a) / width)) + 1);
    const double h = (b - a) / static_cast<double>(k - 1);
    for (std::size_t j = 0; j < k; ++j) {
      double x = a + h * static_cast<double>(j);
      if (j == 0 && seg > 0) x = a + inset;
      if (j + 1 == k) x = (seg + 2 < cuts.size()) ? b - inset : b;
      s.nodes.push_back(x);
      s.weights.push_back((j == 0 || j + 1 == k) ? 0.5 * h : h);
    }
  }
  return s;
}

double ExposureSupport::integrate(std::span<const double> values) const {
  require(values.size() == nodes.size(), ErrorCode::QuadratureError,
          "integrand evaluated on a different number of nodes");
  return kernels::dot(weights, values);
}

double ExposureSupport::lo() const { return nodes.front(); }
double ExposureSupport::hi() const { return nodes.back(); }

}  // namespace stochmed
