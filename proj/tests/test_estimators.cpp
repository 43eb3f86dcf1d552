#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "stochmed/error.hpp"
#include "stochmed/estimators.hpp"
#include "stochmed/sim.hpp"

using namespace stochmed;
using namespace stochmed::estimators;

namespace {
std::shared_ptr<const ConditionalDensity> constant_g(double p) {
  return std::make_shared<BinaryMass>(std::make_shared<FunctionRegression>([p](std::span<const double>) { return p; }));
}

EstimatorOptions options_for(EstimatorKind k, double pseudo = 1.0) {
  EstimatorOptions o;
  o.kind = k;
  o.fit.learners = sim::default_learners();
  o.fit.learners.g.pseudo_count = pseudo;
  o.fit.learners.e.pseudo_count = pseudo;
  o.seed = 7;
  return o;
}
}  // namespace

TEST_CASE("substitution with a constant outcome regression returns the constant") {
  const auto d = testutil::small_binary(40, 1);
  NuisanceFits f;
  f.g = constant_g(0.3);
  f.e = f.g;
  f.m = std::make_shared<FunctionRegression>([](std::span<const double>) { return 2.5; });
  const auto s = ExposureSupport::binary();
  for (double dp : {0.25, 1.0, 4.0})
    CHECK(estimate_substitution(d, f, InterventionSpec::incremental_propensity(dp), s) == doctest::Approx(2.5));
}

TEST_CASE("reweighting toy: every unit exposed, weight 1.5") {
  RowMatrix w(4, 0), z(4, 0);
  Eigen::VectorXd a = Eigen::VectorXd::Ones(4), y = Eigen::VectorXd::Ones(4);
  const ObservedDataset d(w, a, z, y, ExposureKind::Binary);
  NuisanceFits f;
  f.g = constant_g(0.5);
  f.e = f.g;
  f.has_mediators = false;
  // delta' = 3: g_delta(1) = 0.75, weight 0.75 / 0.5
  const auto r = estimate_reweighted(d, f, InterventionSpec::incremental_propensity(3.0), ExposureSupport::binary());
  CHECK(r.theta == doctest::Approx(1.5));
  CHECK(r.capped == 0);
  const auto c = estimate_reweighted(d, f, InterventionSpec::incremental_propensity(3.0), ExposureSupport::binary(), 1.2);
  CHECK(c.theta == doctest::Approx(1.2));
  CHECK(c.capped == 4);
}

TEST_CASE("at the identity intervention the saturated substitution estimator is the sample mean") {
  const auto d = testutil::small_binary(500, 3).without_mediators();
  auto o = options_for(EstimatorKind::Substitution, 0.0);
  const std::vector<double> one{1.0};
  const auto p = estimate_theta_path(d, InterventionSpec::incremental_propensity(1.0), one, o);
  CHECK(p.theta[0] == doctest::Approx(d.outcome_mean()).epsilon(1e-12));
}

TEST_CASE("one-step equals substitution plus the mean outcome and exposure corrections") {
  const auto d = testutil::small_binary(400, 5);
  crossfit::FitOptions fo;
  fo.learners = sim::default_learners();
  const auto spec = InterventionSpec::incremental_propensity(2.0);
  const auto fits = crossfit::fit_all(d, spec, fo);
  const auto s = ExposureSupport::binary();
  const std::vector<NuisanceFits> v{fits};
  const auto batch = eif::assemble_eif(d, v, {}, spec, s);
  double corr = 0.0;
  for (const auto& r : batch.records) corr += (r.dY + r.dA) / static_cast<double>(d.n());
  CHECK(batch.theta == doctest::Approx(estimate_substitution(d, fits, spec, s) + corr).epsilon(1e-12));
}

TEST_CASE("a constant outcome has zero effects and zero standard errors") {
  const auto base = testutil::small_binary(300, 8);
  const auto d = base.with_outcome(Eigen::VectorXd::Constant(300, 3.0));
  const std::vector<double> grid{0.5, 2.0};
  // reweighting does not reproduce constants exactly, so only the other two
  for (auto k : {EstimatorKind::Substitution, EstimatorKind::OneStep}) {
    const auto dec = decompose_effects(d, InterventionSpec::incremental_propensity(1.0), grid, options_for(k));
    for (const auto& r : dec.report.rows) {
      CHECK(std::abs(r.direct) < 1e-9);
      CHECK(std::abs(r.total) < 1e-9);
      CHECK(r.se_direct < 1e-9);
    }
  }
}

TEST_CASE("without mediators the indirect effect is exactly zero") {
  const auto d = testutil::small_binary(300, 2).without_mediators();
  const std::vector<double> grid{0.5, 1.5, 3.0};
  const auto dec = decompose_effects(d, InterventionSpec::incremental_propensity(1.0), grid,
                                     options_for(EstimatorKind::OneStep));
  for (const auto& r : dec.report.rows) {
    CHECK(r.indirect == 0.0);
    CHECK(r.se_indirect == 0.0);
    CHECK(r.direct == r.total);
  }
}

TEST_CASE("direct plus indirect equals total") {
  const auto d = sim::generate(800, 4);
  const std::vector<double> grid{0.25, 0.5, 2.0};
  for (auto k : {EstimatorKind::Substitution, EstimatorKind::Reweighted, EstimatorKind::OneStep}) {
    const auto dec = decompose_effects(d, InterventionSpec::incremental_propensity(1.0), grid, options_for(k));
    REQUIRE(dec.report.rows.size() == 3);
    for (const auto& r : dec.report.rows) {
      CHECK(std::abs(r.direct + r.indirect - r.total) < 1e-12);
      CHECK(r.ci_direct.lo < r.direct);
      CHECK(r.ci_direct.hi > r.direct);
    }
    CHECK(dec.s_direct.rows() == 800);
    CHECK(dec.s_direct.cols() == 3);
  }
}

TEST_CASE("one-step estimates converge to the truth on a large sample") {
  const auto d = sim::generate(100000, 2024);
  const std::vector<double> grid{0.5};
  const auto dec = decompose_effects(d, InterventionSpec::incremental_propensity(1.0), grid,
                                     options_for(EstimatorKind::OneStep));
  const auto truth = sim::oracle_truth(InterventionSpec::incremental_propensity(0.5));
  const auto& r = dec.report.rows[0];
  CHECK(std::abs(r.direct - truth.direct) < 4 * r.se_direct + 0.005);
  CHECK(std::abs(r.indirect - truth.indirect) < 4 * r.se_indirect + 0.005);
  CHECK(std::abs(r.total - truth.total) < 4 * r.se_total + 0.005);
}

TEST_CASE("estimator names round-trip") {
  for (auto k : {EstimatorKind::Substitution, EstimatorKind::Reweighted, EstimatorKind::OneStep})
    CHECK(parse_estimator_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_estimator_kind("tmle"), Error);
}
