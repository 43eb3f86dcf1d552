#include <cmath>

#include "doctest.h"
#include "stochmed/error.hpp"
#include "stochmed/kernels.hpp"
#include "stochmed/sim.hpp"

using namespace stochmed;
using namespace stochmed::sim;

TEST_CASE("generation is deterministic in the seed") {
  const auto a = generate(200, 5);
  const auto b = generate(200, 5);
  const auto c = generate(200, 6);
  CHECK(a.outcome() == b.outcome());
  CHECK(a.covariates() == b.covariates());
  CHECK(a.outcome() != c.outcome());
  CHECK(a.covariate_count() == 3);
  CHECK(a.mediator_count() == 3);
  CHECK(a.exposure_kind() == ExposureKind::Binary);
}

TEST_CASE("marginal frequencies of the design") {
  const auto d = generate(200000, 1);
  // P(A = 1) = 0.25 * (0.5 + 0.65 + 0.35) + 0.1
  CHECK(d.exposure().mean() == doctest::Approx(0.475).epsilon(0.01));
  CHECK(d.covariates().col(1).mean() == doctest::Approx(0.65).epsilon(0.01));
  const auto law = design_law();
  double pz1 = 0.0;
  for (const auto& at : law.atoms()) pz1 += at.p * at.z[0];
  CHECK(d.mediators().col(0).mean() == doctest::Approx(pz1).epsilon(0.01));
}

TEST_CASE("sample mean of Y approaches its expectation") {
  const auto d = generate(1000000, 2);
  CHECK(std::abs(d.outcome_mean() - 0.76418085) < 0.003);
  CHECK(design_law().outcome_mean() == doctest::Approx(0.76418085).epsilon(1e-7));
}

TEST_CASE("the design law is a probability distribution over 128 atoms") {
  const auto law = design_law();
  CHECK(law.atoms().size() == 128);
  double total = 0.0;
  for (const auto& at : law.atoms()) total += at.p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("closed-form direct effect agrees with full enumeration") {
  for (double dp : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const auto t = oracle_truth(InterventionSpec::incremental_propensity(dp));
    CHECK(t.direct == doctest::Approx(oracle_direct_reduced(dp)).epsilon(1e-12));
    CHECK(std::abs(t.direct + t.indirect - t.total) < 1e-14);
  }
  const auto t = oracle_truth(InterventionSpec::incremental_propensity(0.5));
  CHECK(t.direct == doctest::Approx(-0.1374695).epsilon(1e-6));
  CHECK(t.indirect == doctest::Approx(0.0156474).epsilon(1e-5));
  CHECK(t.theta == doctest::Approx(0.62671131).epsilon(1e-7));
  CHECK(std::abs(oracle_truth(InterventionSpec::incremental_propensity(1.0)).direct) < 1e-14);
  CHECK_THROWS_AS(oracle_truth(InterventionSpec::shift_policy(0.5)), Error);
}

TEST_CASE("the null variant has no direct effect") {
  for (double dp : {0.5, 2.0})
    CHECK(std::abs(oracle_truth(InterventionSpec::incremental_propensity(dp), DgpVariant::NullDirect).direct) < 1e-14);
}

TEST_CASE("replication table: MSE decomposes and one replication works") {
  SimConfig cfg;
  cfg.ns = {200};
  cfg.reps = 4;
  cfg.threads = 2;
  const auto res = run_table1(cfg);
  CHECK(res.rows.size() == cfg.arms.size());
  for (const auto& r : res.rows) {
    CHECK(r.reps == 4);
    CHECK(r.mse == doctest::Approx(r.bias * r.bias + r.se * r.se).epsilon(1e-10));
    CHECK(r.n_mse == doctest::Approx(200 * r.mse));
  }
  // same result regardless of threading
  cfg.threads = 1;
  const auto serial = run_table1(cfg);
  for (std::size_t i = 0; i < res.rows.size(); ++i) CHECK(serial.rows[i].bias == res.rows[i].bias);

  cfg.reps = 1;
  const auto one = run_table1(cfg);
  for (const auto& r : one.rows) CHECK(r.se == 0.0);
}

TEST_CASE("arm labels") {
  Arm a;
  a.misspecify = "G";
  CHECK(a.label().find("G") != std::string::npos);
  CHECK(default_arms().size() == 6);
  CHECK(replication_seed(1, 400, 0) != replication_seed(1, 400, 1));
  CHECK(replication_seed(1, 400, 0) != replication_seed(1, 1600, 0));
}
