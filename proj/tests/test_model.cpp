#include "doctest.h"
#include "helpers.hpp"
#include "stochmed/error.hpp"
#include "stochmed/model.hpp"

using namespace stochmed;

TEST_CASE("validate_dataset assigns roles and infers a binary exposure") {
  const auto raw = testutil::table({"W1", "A", "Z1", "Y"}, {{0.0, 1.0}, {1.0, 0.0}, {0.5, 0.25}, {2.0, 3.0}});
  const auto d = validate_dataset(raw, {{"W1"}, "A", {"Z1"}, "Y"});
  CHECK(d.n() == 2);
  CHECK(d.exposure_kind() == ExposureKind::Binary);
  CHECK(d.covariate_count() == 1);
  CHECK(d.mediator_count() == 1);
  CHECK(d.a(0) == 1.0);
  CHECK(d.z(1)[0] == 0.25);
  CHECK(d.outcome_mean() == doctest::Approx(2.5));
}

TEST_CASE("validate_dataset infers continuous exposures and honors an override") {
  const auto raw = testutil::table({"A", "Y"}, {{0.5, 1.0}, {1.0, 2.0}});
  CHECK(validate_dataset(raw, {{}, "A", {}, "Y"}).exposure_kind() == ExposureKind::Continuous);
  const auto raw01 = testutil::table({"A", "Y"}, {{0.0, 1.0}, {1.0, 2.0}});
  CHECK(validate_dataset(raw01, {{}, "A", {}, "Y"}, ExposureKind::Continuous).exposure_kind() ==
        ExposureKind::Continuous);
  CHECK_THROWS_AS(validate_dataset(raw, {{}, "A", {}, "Y"}, ExposureKind::Binary), Error);
}

TEST_CASE("validate_dataset rejects missing values with row and column") {
  const auto raw = testutil::table({"W", "A", "Y"}, {{0.0, std::nullopt}, {1.0, 0.0}, {2.0, 3.0}});
  try {
    validate_dataset(raw, {{"W"}, "A", {}, "Y"});
    FAIL("expected MissingValueError");
  } catch (const MissingValueError& e) {
    CHECK(e.row() == 1);
    CHECK(e.column() == "W");
    CHECK(e.code() == ErrorCode::MissingValue);
  }
}

TEST_CASE("validate_dataset rejects role conflicts, unknown columns and empty tables") {
  const auto raw = testutil::table({"W", "A", "Y"}, {{0.0}, {1.0}, {2.0}});
  auto code_of = [&](const ColumnRoles& roles, const RawTable& t) {
    try {
      validate_dataset(t, roles);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ParseError;
  };
  CHECK(code_of({{"A"}, "A", {}, "Y"}, raw) == ErrorCode::RoleConflict);
  CHECK(code_of({{"nope"}, "A", {}, "Y"}, raw) == ErrorCode::RoleConflict);
  CHECK(code_of({{}, "", {}, "Y"}, raw) == ErrorCode::RoleConflict);
  const auto empty = testutil::table({"A", "Y"}, {{}, {}});
  CHECK(code_of({{}, "A", {}, "Y"}, empty) == ErrorCode::EmptyDataset);
}

TEST_CASE("dataset views: subset, without_mediators, with_outcome") {
  const auto d = testutil::small_binary(20, 3);
  const std::vector<std::size_t> rows{2, 5, 7};
  const auto s = d.subset(rows);
  CHECK(s.n() == 3);
  CHECK(s.y(1) == d.y(5));
  CHECK(s.w(2)[0] == d.w(7)[0]);
  const auto r = d.without_mediators();
  CHECK_FALSE(r.has_mediators());
  CHECK(r.n() == d.n());
  Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 4.0);
  CHECK(d.with_outcome(y).outcome_mean() == 4.0);
}

TEST_CASE("intervention specifications enforce their invariants") {
  CHECK_THROWS_AS(InterventionSpec::incremental_propensity(0.0), Error);
  CHECK_THROWS_AS(InterventionSpec::incremental_propensity(-1.0), Error);
  CHECK_THROWS_AS(InterventionSpec::shift_policy(0.0), Error);
  CHECK(InterventionSpec::incremental_propensity(1.0).is_identity());
  CHECK(InterventionSpec::exponential_tilt(0.0).is_identity());
  CHECK_FALSE(InterventionSpec::exponential_tilt(0.1).is_identity());
  CHECK(InterventionSpec::incremental_propensity(2.0).tilt_parameter() == doctest::Approx(std::log(2.0)));

  const auto binary = testutil::small_binary(10, 1);
  CHECK_NOTHROW(InterventionSpec::incremental_propensity(2.0).validate_for(binary));
  CHECK_THROWS_AS(InterventionSpec::shift_policy(0.5).validate_for(binary), Error);

  RowMatrix w(3, 0), z(3, 0);
  Eigen::VectorXd a(3), y(3);
  a << 0.0, 0.5, 2.0;
  y << 1.0, 2.0, 3.0;
  const ObservedDataset cont(w, a, z, y, ExposureKind::Continuous);
  CHECK_THROWS_AS(InterventionSpec::incremental_propensity(2.0).validate_for(cont), Error);
  CHECK_NOTHROW(InterventionSpec::shift_policy(0.5).validate_for(cont));
  CHECK_THROWS_AS(InterventionSpec::shift_policy(2.5).validate_for(cont), Error);
  const auto resolved = InterventionSpec::shift_policy(0.5).with_default_bounds(cont);
  CHECK(resolved.bounds_at({}).lower == 0.0);
  CHECK(resolved.bounds_at({}).upper == 2.0);
}

TEST_CASE("intervention kinds round-trip through text") {
  for (auto k : {InterventionKind::IncrementalPropensity, InterventionKind::ExponentialTilt,
                 InterventionKind::ShiftPolicy})
    CHECK(parse_intervention_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_intervention_kind("mtp"), Error);
}

TEST_CASE("BinaryMass turns a probability into a mass on {0,1}") {
  const BinaryMass g(std::make_shared<FunctionRegression>([](std::span<const double>) { return 0.3; }));
  CHECK(g.density(1.0, {}) == doctest::Approx(0.3));
  CHECK(g.density(0.0, {}) == doctest::Approx(0.7));
  CHECK(g.density(0.5, {}) == 0.0);
}
