#pragma once

// Pointwise Wald intervals and multiplier-bootstrap uniform inference over a
// grid of deltas.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stochmed/model.hpp"

namespace stochmed::inference {

enum class Multiplier { Rademacher, Gaussian };

std::string to_string(Multiplier kind);
Multiplier parse_multiplier(const std::string& text);

// z_{1 - alpha / 2}
double normal_critical(double alpha);

// theta +- z_{1 - alpha/2} sigma / sqrt(n)
Interval wald_ci(double theta_hat, double sigma_hat, std::size_t n, double alpha = 0.05);

struct UniformInferenceConfig {
  std::size_t n_boot = 2000;
  Multiplier multiplier = Multiplier::Rademacher;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct BootstrapResult {
  double critical_value = 0.0;  // (1 - alpha) quantile of sup |M|
  double sup_statistic = 0.0;   // sup |beta_hat| sqrt(n) / sigma_hat
  double p_value = 1.0;
  std::vector<Interval> bands;
};

// Multipliers for draw `b` of a run seeded with `seed`; each draw has its own stream.
void draw_multipliers(Multiplier kind, std::uint64_t seed, std::size_t b, std::span<double> out);

// s_values: n x k matrix of S evaluations (one column per delta).
BootstrapResult multiplier_bootstrap(const Eigen::MatrixXd& s_values, std::span<const double> beta_hat,
                                     std::span<const double> sigma_hat, const UniformInferenceConfig& config);

// p-value of H: sup_delta |beta(delta)| = 0.
double test_no_direct_effect(const Eigen::MatrixXd& s_values, std::span<const double> beta_hat,
                             std::span<const double> sigma_hat, const UniformInferenceConfig& config);

// Fills the uniform band and summary of a decomposition report from its S matrix.
void attach_uniform(EffectReport& report, const Eigen::MatrixXd& s_values, const UniformInferenceConfig& config);

// Geometric grid with k points on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t k);
std::vector<double> linear_grid(double lo, double hi, std::size_t k);

}  // namespace stochmed::inference
