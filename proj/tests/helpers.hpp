#pragma once

#include <random>
#include <vector>

#include "stochmed/model.hpp"

namespace testutil {

inline stochmed::RawTable table(std::vector<std::string> names,
                                std::vector<std::vector<std::optional<double>>> cols) {
  stochmed::RawTable t;
  t.names = std::move(names);
  t.columns = std::move(cols);
  return t;
}

// Binary exposure, one binary covariate, one binary mediator.
inline stochmed::ObservedDataset small_binary(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  stochmed::RowMatrix w(n, 1), z(n, 1);
  Eigen::VectorXd a(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    w(r, 0) = u(rng) < 0.4 ? 1.0 : 0.0;
    a[r] = u(rng) < 0.3 + 0.3 * w(r, 0) ? 1.0 : 0.0;
    z(r, 0) = u(rng) < 0.2 + 0.5 * a[r] ? 1.0 : 0.0;
    y[r] = 1.0 + a[r] + 2.0 * z(r, 0) - w(r, 0) + (u(rng) - 0.5);
  }
  return {std::move(w), std::move(a), std::move(z), std::move(y), stochmed::ExposureKind::Binary};
}

}  // namespace testutil
