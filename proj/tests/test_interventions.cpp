#include <cmath>

#include "doctest.h"
#include "stochmed/error.hpp"
#include "stochmed/interventions.hpp"

using namespace stochmed;
using namespace stochmed::interventions;

TEST_CASE("incremental propensity shift of the odds") {
  CHECK(ips_gdelta(0.5, 2.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(ips_gdelta(0.25, 0.5) == doctest::Approx(0.142857142857).epsilon(1e-10));
  CHECK(ips_gdelta(0.37, 1.0) == 0.37);
  CHECK_THROWS_AS(ips_gdelta(0.0, 2.0), Error);
  CHECK_THROWS_AS(ips_gdelta(0.5, 0.0), Error);
  // the odds are multiplied by delta'
  const double p = ips_gdelta(0.3, 3.0);
  CHECK(p / (1 - p) == doctest::Approx(3.0 * 0.3 / 0.7));
}

TEST_CASE("tilt on a binary support reproduces the odds shift with delta' = exp(delta)") {
  const auto s = ExposureSupport::binary();
  for (double g1 : {0.1, 0.4, 0.9}) {
    for (double d : {-1.0, 0.3, 2.0}) {
      const std::vector<double> g{1.0 - g1, g1};
      const auto t = tilt_gdelta(g, d, s);
      CHECK(t.values[1] == doctest::Approx(ips_gdelta(g1, std::exp(d))).epsilon(1e-12));
      CHECK(t.values[0] + t.values[1] == doctest::Approx(1.0));
      CHECK(t.normalizer == doctest::Approx(1.0 / (1.0 - g1 + std::exp(d) * g1)));
    }
  }
}

TEST_CASE("tilt of a continuous density integrates to one and matches the closed form") {
  // uniform(0,1) tilted by delta has density delta e^{delta a} / (e^delta - 1)
  const auto s = ExposureSupport::trapezoid(0.0, 1.0, 2001);
  std::vector<double> g(s.size(), 1.0);
  const double d = 1.5;
  const auto t = tilt_gdelta(g, d, s);
  CHECK(s.integrate(t.values) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 0; k < s.size(); k += 250)
    CHECK(t.values[k] == doctest::Approx(d * std::exp(d * s.nodes[k]) / (std::exp(d) - 1)).epsilon(1e-6));
  CHECK(tilt_gdelta(g, 0.0, s).values == g);
}

TEST_CASE("tilt refuses to overflow") {
  const auto s = ExposureSupport::trapezoid(0.0, 100.0, 11);
  std::vector<double> g(s.size(), 0.01);
  try {
    tilt_gdelta(g, 1.0, s);
    FAIL("expected NormalizerOverflow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NormalizerOverflow);
  }
}

TEST_CASE("shift policy density and map") {
  auto g = [](double) { return 0.5; };  // uniform on [0, 2]
  CHECK(shift_gdelta(g, 0.0, 2.0, 0.5, 0.25) == doctest::Approx(1.0));
  CHECK(shift_gdelta(g, 0.0, 2.0, 0.5, 1.0) == doctest::Approx(0.5));
  CHECK(shift_gdelta(g, 0.0, 2.0, 0.5, 1.75) == 0.0);
  CHECK(apply_policy(1.2, 0.0, 0.5) == doctest::Approx(0.7));
  CHECK(apply_policy(0.3, 0.0, 0.5) == 0.3);
  CHECK_THROWS_AS(shift_gdelta(g, 0.0, 2.0, 3.0, 1.0), Error);
  // total mass is preserved
  const auto s = ExposureSupport::trapezoid(0.0, 2.0, 4001, std::vector<double>{0.5, 1.5});
  std::vector<double> v(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) v[k] = shift_gdelta(g, 0.0, 2.0, 0.5, s.nodes[k]);
  CHECK(s.integrate(v) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("row intervention: identity, discrete pushforward") {
  const FunctionDensity g([](double a, std::span<const double>) { return a == 1.0 ? 0.3 : (a == 0.0 ? 0.7 : 0.0); });
  const auto s = ExposureSupport::binary();
  const auto id = InterventionSpec::incremental_propensity(1.0);
  const RowIntervention r(g, id, {}, s);
  CHECK(r.at(1.0) == 0.3);
  CHECK(r.at(0.0) == 0.7);

  const auto ips = InterventionSpec::incremental_propensity(2.0);
  const RowIntervention q(g, ips, {}, s);
  CHECK(q.at(1.0) == doctest::Approx(0.6 / 1.3));
  CHECK(q.normalizer() == doctest::Approx(1.0 / 1.3));

  // A in {0,1,2,3}, shift by 1 with l = 0: d = (0, 1, 1, 2)
  const FunctionDensity g4([](double, std::span<const double>) { return 0.25; });
  const auto s4 = ExposureSupport::discrete_points({0, 1, 2, 3});
  const auto shift = InterventionSpec::shift_policy(1.0, [](std::span<const double>) { return SupportBounds{0.0, 3.0}; });
  const RowIntervention p(g4, shift, {}, s4);
  CHECK(p.at(0.0) == doctest::Approx(0.25));
  CHECK(p.at(1.0) == doctest::Approx(0.5));
  CHECK(p.at(2.0) == doctest::Approx(0.25));
  CHECK(p.at(3.0) == 0.0);
}

TEST_CASE("trapezoid support respects breakpoints") {
  const std::vector<double> b{0.3};
  const auto s = ExposureSupport::trapezoid(0.0, 1.0, 101, b);
  std::vector<double> step(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) step[k] = s.nodes[k] < 0.3 ? 2.0 : 0.0;
  CHECK(s.integrate(step) == doctest::Approx(0.6).epsilon(1e-8));
  CHECK(s.lo() == 0.0);
  CHECK(s.hi() == 1.0);
  CHECK_THROWS_AS(ExposureSupport::trapezoid(1.0, 0.0, 10), Error);
}
