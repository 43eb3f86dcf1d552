#include <cmath>
#include <random>

#include "doctest.h"
#include "stochmed/error.hpp"
#include "stochmed/inference.hpp"

using namespace stochmed;
using namespace stochmed::inference;

namespace {
Eigen::MatrixXd normal_column(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd s(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < s.rows(); ++i) s(i, 0) = nd(rng);
  return s;
}

double sd_of(const Eigen::MatrixXd& s, Eigen::Index c) {
  const double m = s.col(c).mean();
  return std::sqrt((s.col(c).array() - m).square().mean());
}
}  // namespace

TEST_CASE("Wald interval") {
  const auto ci = wald_ci(1.0, 2.0, 400);
  CHECK(ci.lo == doctest::Approx(0.804).epsilon(1e-3));
  CHECK(ci.hi == doctest::Approx(1.196).epsilon(1e-3));
  CHECK(normal_critical(0.05) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(normal_critical(0.10) == doctest::Approx(1.644854).epsilon(1e-6));
}

TEST_CASE("multiplier moments") {
  std::vector<double> xi(100000);
  draw_multipliers(Multiplier::Rademacher, 1, 0, xi);
  double m = 0, v = 0;
  for (double x : xi) {
    CHECK((x == 1.0 || x == -1.0));
    m += x;
  }
  m /= static_cast<double>(xi.size());
  CHECK(std::abs(m) < 0.02);
  draw_multipliers(Multiplier::Gaussian, 1, 0, xi);
  m = 0;
  for (double x : xi) m += x;
  m /= static_cast<double>(xi.size());
  for (double x : xi) v += (x - m) * (x - m);
  v /= static_cast<double>(xi.size());
  CHECK(std::abs(m) < 0.02);
  CHECK(v == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("draws are reproducible and distinct across draw indices") {
  std::vector<double> a(50), b(50), c(50);
  draw_multipliers(Multiplier::Gaussian, 9, 3, a);
  draw_multipliers(Multiplier::Gaussian, 9, 3, b);
  draw_multipliers(Multiplier::Gaussian, 9, 4, c);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("single-column critical value approaches the normal quantile") {
  const auto s = normal_column(2000, 3);
  const std::vector<double> beta{s.col(0).mean()};
  const std::vector<double> sigma{sd_of(s, 0)};
  UniformInferenceConfig cfg;
  cfg.n_boot = 20000;
  cfg.seed = 11;
  cfg.threads = 4;
  cfg.multiplier = Multiplier::Gaussian;
  const auto r = multiplier_bootstrap(s, beta, sigma, cfg);
  CHECK(r.critical_value == doctest::Approx(1.96).epsilon(0.03));
  cfg.multiplier = Multiplier::Rademacher;
  CHECK(multiplier_bootstrap(s, beta, sigma, cfg).critical_value == doctest::Approx(1.96).epsilon(0.03));
}

TEST_CASE("a duplicated column does not change the critical value") {
  const auto s1 = normal_column(500, 8);
  Eigen::MatrixXd s2(500, 2);
  s2.col(0) = s1.col(0);
  s2.col(1) = s1.col(0);
  const double sd = sd_of(s1, 0);
  UniformInferenceConfig cfg;
  cfg.n_boot = 1000;
  const std::vector<double> b1{0.1}, b2{0.1, 0.1}, sg1{sd}, sg2{sd, sd};
  const auto r1 = multiplier_bootstrap(s1, b1, sg1, cfg);
  const auto r2 = multiplier_bootstrap(s2, b2, sg2, cfg);
  CHECK(r1.critical_value == doctest::Approx(r2.critical_value).epsilon(1e-12));
  CHECK(r1.p_value == r2.p_value);
}

TEST_CASE("a zero estimate has p-value one, and bands contain the pointwise interval") {
  const auto s = normal_column(300, 2);
  const std::vector<double> beta{0.0};
  const std::vector<double> sigma{1.0};
  UniformInferenceConfig cfg;
  cfg.n_boot = 200;
  const auto r = multiplier_bootstrap(s, beta, sigma, cfg);
  CHECK(r.p_value == 1.0);
  CHECK(r.sup_statistic == 0.0);
  const auto w = wald_ci(0.0, 1.0, 300);
  CHECK(r.bands[0].lo <= w.lo);
  CHECK(r.bands[0].hi >= w.hi);
}

TEST_CASE("bootstrap results are independent of the thread count") {
  Eigen::MatrixXd s(400, 3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = nd(rng);
  const std::vector<double> beta{0.05, -0.02, 0.1}, sigma{1.0, 1.1, 0.9};
  UniformInferenceConfig a, b;
  a.n_boot = b.n_boot = 500;
  a.seed = b.seed = 77;
  b.threads = 3;
  const auto ra = multiplier_bootstrap(s, beta, sigma, a);
  const auto rb = multiplier_bootstrap(s, beta, sigma, b);
  CHECK(ra.critical_value == rb.critical_value);
  CHECK(ra.p_value == rb.p_value);
}

TEST_CASE("degenerate standard deviations are rejected") {
  const auto s = normal_column(10, 1);
  const std::vector<double> beta{0.0}, sigma{0.0};
  try {
    multiplier_bootstrap(s, beta, sigma, {});
    FAIL("expected DegenerateVariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateVariance);
  }
}

TEST_CASE("grids") {
  const auto g = log_grid(0.5, 2.0, 3);
  CHECK(g[0] == 0.5);
  CHECK(g[1] == doctest::Approx(1.0));
  CHECK(g[2] == 2.0);
  const auto l = linear_grid(-1.0, 1.0, 5);
  CHECK(l[2] == doctest::Approx(0.0));
  CHECK_THROWS_AS(log_grid(0.0, 1.0, 3), Error);
  CHECK(parse_multiplier("gaussian") == Multiplier::Gaussian);
  CHECK_THROWS_AS(parse_multiplier("mammen"), Error);
}
