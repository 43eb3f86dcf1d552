#pragma once

// The discrete simulation design, an exact-enumeration oracle for finite
// laws, and the replication harness behind the MSE tables.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stochmed/eif.hpp"
#include "stochmed/estimators.hpp"
#include "stochmed/learners.hpp"
#include "stochmed/model.hpp"
#include "stochmed/quadrature.hpp"

namespace stochmed::sim {

// Standard: Y = Z1 + Z2 - Z3 + A - 0.1 (sum W)^2 + eps.
// NullDirect: the same without the +A term, so the direct effect is zero for every delta.
enum class DgpVariant { Standard, NullDirect };

std::string to_string(DgpVariant v);

inline constexpr double kNoiseSd = 0.5;

// Closed-form pieces of the design.
double covariate_mass(std::span<const double> w);
double propensity(std::span<const double> w);  // P(A = 1 | w)
double mediator_probability(std::size_t j, double a, std::span<const double> w);  // P(Z_j = 1 | a, w)
double outcome_mean(double a, std::span<const double> z, std::span<const double> w, DgpVariant v);

ObservedDataset generate(std::size_t n, std::uint64_t seed, DgpVariant v = DgpVariant::Standard);

struct Atom {
  std::vector<double> w;
  double a = 0.0;
  std::vector<double> z;
  double p = 0.0;
  double y = 0.0;  // E[Y | w, a, z]
};

// A distribution with finite support in (W, A, Z) and known conditional
// outcome means. Every nuisance function is available exactly.
class FiniteLaw {
 public:
  FiniteLaw(std::vector<Atom> atoms, std::vector<double> exposure_levels);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const ExposureSupport& support() const { return support_; }
  bool has_mediators() const { return !atoms_.empty() && !atoms_.front().z.empty(); }

  // Marginalizes Z out of the outcome mean (m becomes b).
  FiniteLaw without_mediators() const;

  double outcome_mean() const;
  double g(double a, std::span<const double> w) const;
  double e(double a, std::span<const double> w, std::span<const double> z) const;
  double m(double a, std::span<const double> z, std::span<const double> w) const;
  double r(std::span<const double> z, std::span<const double> w) const;
  // ∫ m(d(a, w), z, w) r(z | w) dz, or for IPS ∫ {m(1, z, w) - m(0, z, w)} r(z | w) dz.
  double phi(const InterventionSpec& spec, double a, std::span<const double> w) const;

  // Exact g, e, m and phi as callable nuisances in the estimator layouts.
  NuisanceFits exact_fits(const InterventionSpec& spec) const;

  // theta(delta) = sum_w p(w) sum_z r(z | w) ∫ m(a, z, w) g_delta(a | w) dκ(a)
  double theta(const InterventionSpec& spec) const;

  // E[D_eta(O)] under this law for arbitrary nuisances (Y replaced by its conditional mean).
  double expected_eif(const NuisanceFits& fits, const InterventionSpec& spec,
                      const eif::EifOptions& options = {}) const;

  const std::vector<std::vector<double>>& covariate_levels() const { return w_levels_; }
  const std::vector<std::vector<double>>& mediator_levels() const { return z_levels_; }

 private:
  using Key = std::vector<double>;
  std::vector<Atom> atoms_;
  ExposureSupport support_;
  std::map<Key, double> p_w_;     // w
  std::map<Key, double> p_wa_;    // w, a
  std::map<Key, double> p_wz_;    // w, z
  std::map<Key, double> p_waz_;   // w, a, z
  std::map<Key, double> y_waz_;   // w, a, z
  std::vector<std::vector<double>> w_levels_;
  std::vector<std::vector<double>> z_levels_;
};

FiniteLaw design_law(DgpVariant v = DgpVariant::Standard);

struct OracleTruth {
  double delta = 0.0;
  double theta = 0.0;
  double psi = 0.0;  // total-effect functional
  double outcome_mean = 0.0;
  double direct = 0.0;
  double indirect = 0.0;
  double total = 0.0;
};

// Exact enumeration over the 128 atoms; ShiftPolicy is not defined on this design.
OracleTruth oracle_truth(const InterventionSpec& spec, DgpVariant v = DgpVariant::Standard);

// E[g_delta(1 | W) - g(1 | W)] for the odds multiplier delta' (the direct
// effect on the standard design, whose only a-dependence in m is +A).
double oracle_direct_reduced(double delta_prime);

// Replication harness ---------------------------------------------------------

struct Arm {
  estimators::EstimatorKind kind = estimators::EstimatorKind::OneStep;
  std::string misspecify;  // subset of "GEMP" (P = phi); each becomes InterceptOnly

  std::string label() const;
};

std::vector<Arm> default_arms();
// Saturated learners; g and e use one pseudo-count per cell.
learners::LearnerSet default_learners();

struct SimConfig {
  std::vector<std::size_t> ns{400, 1600, 6400};
  std::size_t reps = 300;
  std::vector<Arm> arms = default_arms();
  double delta = 0.5;  // IPS odds multiplier
  std::uint64_t seed = 20200;
  std::size_t folds = 5;
  unsigned threads = 1;
  double alpha = 0.05;
  DgpVariant variant = DgpVariant::Standard;
  learners::LearnerSet learners = default_learners();
};

struct SimRow {
  std::string estimator;
  std::string toggle;
  std::size_t n = 0;
  std::size_t reps = 0;
  std::size_t failed = 0;
  double truth = 0.0;
  // direct effect
  double bias = 0.0;
  double se = 0.0;
  double mse = 0.0;
  double n_mse = 0.0;
  double coverage = 0.0;  // Wald interval from the influence values
  // theta(delta)
  double theta_bias = 0.0;
  double theta_se = 0.0;
  double theta_mse = 0.0;
  double theta_n_mse = 0.0;
};

struct SimResult {
  SimConfig config;
  OracleTruth truth;
  std::vector<SimRow> rows;
};

// Seed of the dataset used by replication `rep` at sample size `n`.
std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t rep);

estimators::EstimatorOptions arm_options(const Arm& arm, const SimConfig& config, std::uint64_t seed);

SimResult run_table1(const SimConfig& config);

}  // namespace stochmed::sim
