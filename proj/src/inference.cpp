#include "stochmed/inference.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "stochmed/error.hpp"
#include "stochmed/kernels.hpp"

namespace stochmed::inference {

std::string to_string(Multiplier kind) {
  return kind == Multiplier::Rademacher ? "rademacher" : "gaussian";
}

Multiplier parse_multiplier(const std::string& text) {
  if (text == "rademacher") return Multiplier::Rademacher;
  if (text == "gaussian") return Multiplier::Gaussian;
  fail(ErrorCode::ParseError, "unknown multiplier '" + text + "'");
}

double normal_critical(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::DomainError, "alpha must lie in (0,1)");
  static const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
  return boost::math::quantile(std_normal, 1.0 - alpha / 2.0);
}

Interval wald_ci(double theta_hat, double sigma_hat, std::size_t n, double alpha) {
  require(sigma_hat >= 0.0, ErrorCode::DomainError, "standard deviation must be >= 0");
  require(n >= 1, ErrorCode::EmptyDataset, "sample size must be >= 1");
  const double half = normal_critical(alpha) * sigma_hat / std::sqrt(static_cast<double>(n));
  return {theta_hat - half, theta_hat + half};
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void draw_multipliers(Multiplier kind, std::uint64_t seed, std::size_t b, std::span<double> out) {
  std::mt19937_64 rng(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(b)));
  if (kind == Multiplier::Rademacher) {
    std::size_t i = 0;
    while (i < out.size()) {
      std::uint64_t bits = rng();
      for (int k = 0; k < 64 && i < out.size(); ++k, ++i, bits >>= 1) out[i] = (bits & 1u) ? 1.0 : -1.0;
    }
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& x : out) x = normal(rng);
  }
}

BootstrapResult multiplier_bootstrap(const Eigen::MatrixXd& s_values, std::span<const double> beta_hat,
                                     std::span<const double> sigma_hat, const UniformInferenceConfig& config) {
  const auto n = static_cast<std::size_t>(s_values.rows());
  const auto k = static_cast<std::size_t>(s_values.cols());
  require(n >= 1 && k >= 1, ErrorCode::DomainError, "empty influence matrix");
  require(beta_hat.size() == k && sigma_hat.size() == k, ErrorCode::DomainError,
          "estimate and sigma vectors must match the grid");
  require(config.n_boot >= 1, ErrorCode::DomainError, "n_boot must be >= 1");
  require(config.alpha > 0.0 && config.alpha < 1.0, ErrorCode::DomainError, "alpha must lie in (0,1)");
  for (double s : sigma_hat)
    require(s >= 1e-12, ErrorCode::DegenerateVariance, "standard deviation below 1e-12 on the grid");

  const double rootn = std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd cols(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) {
    const double scale = 1.0 / (sigma_hat[c] * rootn);
    kernels::active().affine(s_values.col(static_cast<Eigen::Index>(c)).data(), beta_hat[c], scale,
                             cols.col(static_cast<Eigen::Index>(c)).data(), n);
  }

  BootstrapResult out;
  for (std::size_t c = 0; c < k; ++c)
    out.sup_statistic = std::max(out.sup_statistic, std::abs(beta_hat[c]) * rootn / sigma_hat[c]);

  std::vector<double> sups(config.n_boot);
  const auto& kt = kernels::active();
  auto work = [&](std::size_t begin, std::size_t step) {
    std::vector<double> xi(n);
    for (std::size_t b = begin; b < config.n_boot; b += step) {
      draw_multipliers(config.multiplier, config.seed, b, xi);
      sups[b] = kt.sup_abs_projection(xi.data(), cols.data(), n, k);
    }
  };
  const unsigned workers =
      std::max(1u, config.threads == 0 ? std::thread::hardware_concurrency() : config.threads);
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
    for (auto& th : pool) th.join();
  }

  std::size_t exceed = 0;
  for (double s : sups)
    if (s >= out.sup_statistic) ++exceed;
  out.p_value = out.sup_statistic == 0.0 ? 1.0 : static_cast<double>(exceed) / static_cast<double>(config.n_boot);

  std::vector<double> sorted = sups;
  std::sort(sorted.begin(), sorted.end());
  // smallest draw with empirical CDF >= 1 - alpha
  const auto idx = static_cast<std::size_t>(
      std::ceil((1.0 - config.alpha) * static_cast<double>(config.n_boot) - 1e-9));
  out.critical_value = sorted[std::min(std::max<std::size_t>(idx, 1), config.n_boot) - 1];

  // never narrower than the pointwise interval
  const double c = std::max(out.critical_value, normal_critical(config.alpha));
  for (std::size_t j = 0; j < k; ++j) {
    const double half = c * sigma_hat[j] / rootn;
    out.bands.push_back({beta_hat[j] - half, beta_hat[j] + half});
  }
  return out;
}

double test_no_direct_effect(const Eigen::MatrixXd& s_values, std::span<const double> beta_hat,
                             std::span<const double> sigma_hat, const UniformInferenceConfig& config) {
  return multiplier_bootstrap(s_values, beta_hat, sigma_hat, config).p_value;
}

void attach_uniform(EffectReport& report, const Eigen::MatrixXd& s_values, const UniformInferenceConfig& config) {
  const std::size_t k = report.rows.size();
  std::vector<double> beta(k), sigma(k);
  const double rootn = std::sqrt(static_cast<double>(report.n));
  for (std::size_t j = 0; j < k; ++j) {
    beta[j] = report.rows[j].direct;
    sigma[j] = report.rows[j].se_direct * rootn;
  }
  const auto res = multiplier_bootstrap(s_values, beta, sigma, config);
  for (std::size_t j = 0; j < k; ++j) report.rows[j].band_direct = res.bands[j];
  UniformSummary u;
  u.critical_value = res.critical_value;
  u.sup_statistic = res.sup_statistic;
  u.sup_test_p = res.p_value;
  u.n_boot = config.n_boot;
  u.multiplier = to_string(config.multiplier);
  u.alpha = config.alpha;
  report.uniform = u;
}

std::vector<double> log_grid(double lo, double hi, std::size_t k) {
  require(lo > 0.0 && hi >= lo && k >= 1, ErrorCode::DomainError, "log grid needs 0 < lo <= hi and k >= 1");
  if (k == 1) return {lo};
  std::vector<double> g(k);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t j = 0; j < k; ++j) g[j] = std::exp(a + (b - a) * static_cast<double>(j) / static_cast<double>(k - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t k) {
  require(hi >= lo && k >= 1, ErrorCode::DomainError, "grid needs lo <= hi and k >= 1");
  if (k == 1) return {lo};
  std::vector<double> g(k);
  for (std::size_t j = 0; j < k; ++j) g[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(k - 1);
  g.back() = hi;
  return g;
}

}  // namespace stochmed::inference
