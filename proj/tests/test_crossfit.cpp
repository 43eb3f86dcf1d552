#include <algorithm>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "stochmed/crossfit.hpp"
#include "stochmed/error.hpp"

using namespace stochmed;
using namespace stochmed::crossfit;

namespace {
FitOptions intercept_options() {
  FitOptions o;
  learners::LearnerSpec s;
  s.kind = learners::LearnerKind::InterceptOnly;
  o.learners = {s, s, s, s};
  return o;
}

double m_at(const NuisanceFits& f, const ObservedDataset& d, std::size_t i) {
  std::vector<double> buf;
  learners::outcome_features(d.a(i), d.z(i), d.w(i), buf);
  return f.m->predict(buf);
}
}  // namespace

TEST_CASE("fold sizes differ by at most one and cover every row once") {
  for (auto [n, J] : {std::pair<std::size_t, std::size_t>{10, 5}, {11, 5}, {1000, 7}}) {
    const auto plan = make_folds(n, J, 42);
    std::vector<std::size_t> sizes(J, 0);
    for (auto f : plan.assignment) ++sizes[f];
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    CHECK(*hi - *lo <= 1);
    std::size_t total = 0;
    for (std::size_t j = 0; j < J; ++j) {
      const auto v = plan.validation(j);
      const auto t = plan.training(j);
      CHECK(v.size() + t.size() == n);
      std::set<std::size_t> tv(t.begin(), t.end());
      for (auto i : v) CHECK(tv.count(i) == 0);
      total += v.size();
    }
    CHECK(total == n);
  }
  const auto p = make_folds(10, 5, 1);
  std::vector<std::size_t> sizes(5, 0);
  for (auto f : p.assignment) ++sizes[f];
  CHECK(std::all_of(sizes.begin(), sizes.end(), [](auto s) { return s == 2; }));
}

TEST_CASE("fold assignment is deterministic in the seed") {
  CHECK(make_folds(100, 5, 3).assignment == make_folds(100, 5, 3).assignment);
  CHECK(make_folds(100, 5, 3).assignment != make_folds(100, 5, 4).assignment);
}

TEST_CASE("invalid fold counts are rejected") {
  CHECK_THROWS_AS(make_folds(4, 5, 0), Error);
  CHECK_THROWS_AS(make_folds(10, 1, 0), Error);
}

TEST_CASE("out-of-fold predictions come from the training folds only") {
  const auto d = testutil::small_binary(50, 8);
  const auto plan = make_folds(d.n(), 5, 12);
  const auto cf = crossfit_base(d, intercept_options(), plan);
  REQUIRE(cf.folds.size() == 5);
  for (std::size_t i = 0; i < d.n(); ++i) {
    const std::size_t j = plan.assignment[i];
    double s = 0;
    const auto t = plan.training(j);
    for (auto k : t) s += d.y(k);
    CHECK(m_at(cf.folds[j], d, i) == doctest::Approx(s / static_cast<double>(t.size())));
  }
}

TEST_CASE("leave-one-out with J = n") {
  const auto d = testutil::small_binary(12, 2);
  const auto plan = make_folds(d.n(), d.n(), 5);
  const auto cf = crossfit_base(d, intercept_options(), plan);
  const double total = d.outcome().sum();
  for (std::size_t i = 0; i < d.n(); ++i)
    CHECK(m_at(cf.folds[plan.assignment[i]], d, i) == doctest::Approx((total - d.y(i)) / 11.0));
}

TEST_CASE("changing validation outcomes leaves that fold's nuisances unchanged") {
  const auto d = testutil::small_binary(200, 4);
  const auto plan = make_folds(d.n(), 5, 9);
  FitOptions opt;  // saturated defaults
  const auto spec = InterventionSpec::incremental_propensity(2.0);
  const auto before = crossfit_nuisances(d, spec, opt, plan);
  Eigen::VectorXd y = d.outcome();
  for (auto i : plan.validation(0)) y[static_cast<Eigen::Index>(i)] += 100.0;
  const auto d2 = d.with_outcome(y);
  const auto after = crossfit_nuisances(d2, spec, opt, plan);
  for (std::size_t i = 0; i < d.n(); ++i) {
    CHECK(m_at(before.folds[0], d, i) == m_at(after.folds[0], d2, i));
    CHECK(before.folds[0].phi->predict(d.w(i)) == after.folds[0].phi->predict(d2.w(i)));
  }
  // and another fold does see the change
  bool moved = false;
  for (std::size_t i = 0; i < d.n(); ++i) moved |= m_at(before.folds[1], d, i) != m_at(after.folds[1], d2, i);
  CHECK(moved);
}

TEST_CASE("threaded and serial cross-fitting agree") {
  const auto d = testutil::small_binary(300, 6);
  const auto plan = make_folds(d.n(), 5, 1);
  FitOptions serial, threaded;
  threaded.threads = 4;
  const auto spec = InterventionSpec::incremental_propensity(0.5);
  const auto a = crossfit_nuisances(d, spec, serial, plan);
  const auto b = crossfit_nuisances(d, spec, threaded, plan);
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = 0; i < d.n(); ++i) CHECK(m_at(a.folds[j], d, i) == m_at(b.folds[j], d, i));
}

TEST_CASE("without mediators e is g") {
  const auto d = testutil::small_binary(100, 3).without_mediators();
  const auto f = fit_base(d, FitOptions{});
  CHECK(f.e == f.g);
  CHECK_FALSE(f.has_mediators);
}
