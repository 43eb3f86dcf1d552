#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "stochmed/eif.hpp"
#include "stochmed/error.hpp"
#include "stochmed/sim.hpp"

using namespace stochmed;
using namespace stochmed::eif;

namespace {
// m(a, z, w) = a in the outcome layout [a, z..., w...]
const FunctionRegression m_is_a([](std::span<const double> x) { return x[0]; });
}  // namespace

TEST_CASE("outcome term") {
  CHECK(eif_y(1.0, 0.4, 0.6, 0.3) == doctest::Approx(1.2));
  CHECK(eif_y(1.0, 0.4, 0.0, 0.3) == 0.0);
  bool capped = false;
  CHECK(eif_y(2.0, 1.0, 1.0, 1e-6, 10.0, &capped) == doctest::Approx(10.0));
  CHECK(capped);
  CHECK_THROWS_AS(eif_y(1.0, 0.0, 0.5, 0.0), Error);
}

TEST_CASE("mediator-covariate term integrates m against g_delta") {
  const FunctionDensity g([](double a, std::span<const double>) { return a == 1.0 ? 0.5 : 0.5; });
  const auto s = ExposureSupport::binary();
  const auto id = InterventionSpec::incremental_propensity(1.0);
  const interventions::RowIntervention row(g, id, {}, s);
  CHECK(eif_zw(m_is_a, row, {}, {}, s) == doctest::Approx(0.5));

  const auto ips = InterventionSpec::incremental_propensity(3.0);
  const interventions::RowIntervention row3(g, ips, {}, s);
  CHECK(eif_zw(m_is_a, row3, {}, {}, s) == doctest::Approx(0.75));

  const FunctionDensity u([](double a, std::span<const double>) { return (a >= 0 && a <= 1) ? 1.0 : 0.0; });
  const auto c = ExposureSupport::trapezoid(0.0, 1.0, 257);
  const auto tilt0 = InterventionSpec::exponential_tilt(0.0);
  const interventions::RowIntervention rowc(u, tilt0, {}, c);
  CHECK(eif_zw(m_is_a, rowc, {}, {}, c) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("exposure term for modified treatment policies") {
  const FunctionDensity g([](double a, std::span<const double>) { return (a == 0.0 || a == 1.0) ? 0.5 : 0.0; });
  const FunctionRegression phi([](std::span<const double> x) { return 2.0 * x[0]; });
  const auto s = ExposureSupport::binary();
  CHECK(eif_a_mtp(phi, g, 1.0, {}, s) == doctest::Approx(1.0));
  CHECK(eif_a_mtp(phi, g, 0.0, {}, s) == doctest::Approx(-1.0));
}

TEST_CASE("exposure term for incremental propensity interventions") {
  CHECK(eif_a_ips(1.0, 0.5, 2.0, 1.0) == doctest::Approx(0.444444444444));
  CHECK(eif_a_ips(3.0, 0.2, 1.0, 0.0) == doctest::Approx(-0.6));
  CHECK_THROWS_AS(eif_a_ips(1.0, 1.0, 2.0, 1.0), Error);
}

TEST_CASE("tilt exposure term equals the IPS form on a binary exposure") {
  const auto s = ExposureSupport::binary();
  for (double g1 : {0.2, 0.55, 0.9}) {
    const FunctionDensity g([g1](double a, std::span<const double>) { return a == 1.0 ? g1 : 1.0 - g1; });
    const FunctionRegression phi([](std::span<const double> x) { return 0.3 + 1.7 * x[0]; });
    for (double dp : {0.5, 2.0, 4.0}) {
      const auto tilt = InterventionSpec::exponential_tilt(std::log(dp));
      const interventions::RowIntervention row(g, tilt, {}, s);
      for (double a : {0.0, 1.0})
        CHECK(eif_a_tilt(phi, row, a, {}, s) == doctest::Approx(eif_a_ips(1.7, g1, dp, a)).epsilon(1e-12));
    }
  }
}

TEST_CASE("the influence function has mean zero at the true nuisances") {
  const auto law = sim::design_law();
  for (double dp : {0.25, 0.5, 2.0}) {
    const auto spec = InterventionSpec::incremental_propensity(dp);
    const auto fits = law.exact_fits(spec);
    CHECK(law.expected_eif(fits, spec) == doctest::Approx(law.theta(spec)).epsilon(1e-12));
  }
}

TEST_CASE("batch assembly matches row evaluation") {
  const auto d = testutil::small_binary(100, 21);
  NuisanceFits f;
  f.g = std::make_shared<BinaryMass>(std::make_shared<FunctionRegression>([](std::span<const double> w) {
    return 0.3 + 0.3 * w[0];
  }));
  f.e = std::make_shared<FunctionDensity>([](double a, std::span<const double> x) {
    const double p = 0.25 + 0.2 * x[0] + 0.2 * x[1];
    return a == 1.0 ? p : 1.0 - p;
  });
  f.m = std::make_shared<FunctionRegression>([](std::span<const double> x) { return x[0] + 2 * x[1] - x[2]; });
  f.phi = std::make_shared<FunctionRegression>([](std::span<const double>) { return 1.4; });
  const auto spec = InterventionSpec::incremental_propensity(2.0);
  const auto s = ExposureSupport::binary();
  const std::vector<NuisanceFits> fits{f};
  const auto batch = assemble_eif(d, fits, {}, spec, s);
  double mean = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const auto r = evaluate_row(f, spec, s, d.w(i), d.a(i), d.z(i), d.y(i));
    CHECK(batch.records[i].total == doctest::Approx(r.total).epsilon(1e-14));
    CHECK(batch.s_records[i] == doctest::Approx(r.total - d.y(i)).epsilon(1e-14));
    mean += r.total;
  }
  CHECK(batch.theta == doctest::Approx(mean / 100.0).epsilon(1e-14));
  CHECK(batch.capped == 0);
}
