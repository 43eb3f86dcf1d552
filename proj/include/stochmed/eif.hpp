#pragma once

// Per-observation efficient influence function contributions D^Y, D^A and
// D^{Z,W}. Running the same code on a dataset without mediators (e = g,
// m = b) gives the influence function of the total-effect functional.

#include <cstddef>
#include <span>
#include <vector>

#include "stochmed/interventions.hpp"
#include "stochmed/model.hpp"
#include "stochmed/quadrature.hpp"

namespace stochmed::eif {

inline constexpr double kDefaultWeightCap = 1e4;

// (g_delta / e) (y - m), with the weight capped at `cap`.
double eif_y(double y, double m_azw, double gdelta_aw, double e_azw, double cap = kDefaultWeightCap,
             bool* capped = nullptr);

// ∫ m(a, z, w) g_delta(a | w) dκ(a).
double eif_zw(const Regression& m, const interventions::RowIntervention& gdelta,
              std::span<const double> z, std::span<const double> w, const ExposureSupport& support);

// phi(a, w) - ∫ phi(t, w) g(t | w) dκ(t).
double eif_a_mtp(const Regression& phi, const ConditionalDensity& g, double a, std::span<const double> w,
                 const ExposureSupport& support);

// g_delta / g * {phi(a, w) - ∫ phi(t, w) g_delta(t | w) dκ(t)}; g is floored at `floor`.
double eif_a_tilt(const Regression& phi, const interventions::RowIntervention& row, double a,
                  std::span<const double> w, const ExposureSupport& support, double floor = 0.0);

// delta' phi(w) (a - g1) / (delta' g1 + 1 - g1)^2
double eif_a_ips(double phi_w, double g1w, double delta_prime, double a);

struct EifOptions {
  double weight_cap = kDefaultWeightCap;
  // Randomized-trial mode: the exposure term vanishes when g is known.
  bool zero_exposure_term = false;
};

// One observation. `w`, `z` in dataset layout; z may be empty.
EifRecord evaluate_row(const NuisanceFits& fits, const InterventionSpec& intervention,
                       const ExposureSupport& support, std::span<const double> w, double a,
                       std::span<const double> z, double y, const EifOptions& options = {},
                       bool* capped = nullptr);

struct EifComponentsBatch {
  std::vector<EifRecord> records;
  std::vector<double> totals;
  std::vector<double> s_records;  // total - y
  double theta = 0.0;             // mean of totals
  double sigma2 = 0.0;            // variance of totals (divisor n)
  std::size_t capped = 0;
};

// fits[assignment[i]] is used at row i; an empty assignment uses fits[0] everywhere.
EifComponentsBatch assemble_eif(const ObservedDataset& data, std::span<const NuisanceFits> fits,
                                std::span<const std::size_t> assignment,
                                const InterventionSpec& intervention, const ExposureSupport& support,
                                const EifOptions& options = {});

}  // namespace stochmed::eif
