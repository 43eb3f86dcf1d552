#include "stochmed/eif.hpp"

#include <algorithm>
#include <cmath>

#include "stochmed/error.hpp"
#include "stochmed/kernels.hpp"
#include "stochmed/learners.hpp"

namespace stochmed::eif {

double eif_y(double y, double m_azw, double gdelta_aw, double e_azw, double cap, bool* capped) {
  if (gdelta_aw == 0.0) return 0.0;
  require(e_azw > 0.0, ErrorCode::DomainError, "mediator-inclusive exposure density must be positive");
  double ratio = gdelta_aw / e_azw;
  if (ratio > cap) {
    ratio = cap;
    if (capped) *capped = true;
  }
  return ratio * (y - m_azw);
}

double eif_zw(const Regression& m, const interventions::RowIntervention& gdelta,
              std::span<const double> z, std::span<const double> w, const ExposureSupport& support) {
  const auto gd = gdelta.on_support();
  std::vector<double> vals(support.size());
  std::vector<double> buf;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (gd[k] == 0.0) {
      vals[k] = 0.0;
      continue;
    }
    learners::outcome_features(support.nodes[k], z, w, buf);
    vals[k] = m.predict(buf) * gd[k];
  }
  if (!support.discrete) {
    const double mass = support.integrate(gd);
    require(std::isfinite(mass) && mass > 0.0, ErrorCode::QuadratureError,
            "intervened density does not integrate to a positive mass");
    // self-normalized so constants integrate exactly
    return support.integrate(vals) / mass;
  }
  return support.integrate(vals);
}

namespace {

void phi_on_support(const Regression& phi, std::span<const double> w, const ExposureSupport& support,
                    std::vector<double>& out) {
  out.resize(support.size());
  std::vector<double> buf;
  for (std::size_t k = 0; k < support.size(); ++k) {
    learners::phi_features(support.nodes[k], w, buf);
    out[k] = phi.predict(buf);
  }
}

double weighted_average(std::span<const double> f, std::span<const double> weight,
                        const ExposureSupport& support) {
  std::vector<double> prod(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) prod[k] = f[k] * weight[k];
  const double num = support.integrate(prod);
  if (support.discrete) return num;
  const double mass = support.integrate(weight);
  require(std::isfinite(mass) && mass > 0.0, ErrorCode::QuadratureError,
          "density does not integrate to a positive mass");
  return num / mass;
}

double phi_at(const Regression& phi, double a, std::span<const double> w) {
  std::vector<double> buf;
  learners::phi_features(a, w, buf);
  return phi.predict(buf);
}

}  // namespace

double eif_a_mtp(const Regression& phi, const ConditionalDensity& g, double a, std::span<const double> w,
                 const ExposureSupport& support) {
  std::vector<double> gv(support.size());
  g.tabulate(support.nodes, w, gv);
  std::vector<double> pv;
  phi_on_support(phi, w, support, pv);
  return phi_at(phi, a, w) - weighted_average(pv, gv, support);
}

double eif_a_tilt(const Regression& phi, const interventions::RowIntervention& row, double a,
                  std::span<const double> w, const ExposureSupport& support, double floor) {
  const double gd = row.at(a);
  if (gd == 0.0) return 0.0;
  const double g = std::max(row.g_at(a), floor);
  require(g > 0.0, ErrorCode::DomainError, "exposure density is zero at an observed exposure");
  std::vector<double> pv;
  phi_on_support(phi, w, support, pv);
  return gd / g * (phi_at(phi, a, w) - weighted_average(pv, row.on_support(), support));
}

double eif_a_ips(double phi_w, double g1w, double delta_prime, double a) {
  require(g1w > 0.0 && g1w < 1.0, ErrorCode::DomainError, "propensity must lie in (0,1)");
  require(delta_prime > 0.0, ErrorCode::DomainError, "odds multiplier must be > 0");
  const double denom = delta_prime * g1w + 1.0 - g1w;
  return delta_prime * phi_w * (a - g1w) / (denom * denom);
}

namespace {

struct RowParts {
  double gdelta_a = 0.0;
  double e_a = 1.0;
  double m_a = 0.0;
  double dA = 0.0;
  double dZW = 0.0;
};

RowParts row_parts(const NuisanceFits& fits, const InterventionSpec& intervention,
                   const ExposureSupport& support, std::span<const double> w, double a,
                   std::span<const double> z, const EifOptions& options, std::vector<double>& buf) {
  require(fits.g && fits.e && fits.m, ErrorCode::DomainError, "nuisance fits are incomplete");
  const interventions::RowIntervention row(*fits.g, intervention, w, support);
  RowParts p;
  p.gdelta_a = row.at(a);

  const bool same = !fits.has_mediators || fits.e == fits.g;
  double e = 0.0;
  if (same) {
    e = row.g_at(a);
  } else {
    learners::exposure_features(w, z, buf);
    e = fits.e->density(a, buf);
  }
  p.e_a = std::max(e, fits.truncation_floor);

  learners::outcome_features(a, z, w, buf);
  p.m_a = fits.m->predict(buf);
  p.dZW = eif_zw(*fits.m, row, z, w, support);

  if (!options.zero_exposure_term) {
    require(static_cast<bool>(fits.phi), ErrorCode::DomainError, "phi has not been fitted");
    switch (intervention.kind()) {
      case InterventionKind::IncrementalPropensity: {
        const double g1 = std::clamp(row.g_on_support()[1], 1e-12, 1.0 - 1e-12);
        p.dA = eif_a_ips(fits.phi->predict(w), g1, intervention.delta(), a);
        break;
      }
      case InterventionKind::ExponentialTilt:
        p.dA = eif_a_tilt(*fits.phi, row, a, w, support, fits.truncation_floor);
        break;
      case InterventionKind::ShiftPolicy:
        p.dA = eif_a_mtp(*fits.phi, *fits.g, a, w, support);
        break;
    }
  }
  return p;
}

}  // namespace

EifRecord evaluate_row(const NuisanceFits& fits, const InterventionSpec& intervention,
                       const ExposureSupport& support, std::span<const double> w, double a,
                       std::span<const double> z, double y, const EifOptions& options, bool* capped) {
  std::vector<double> buf;
  const auto p = row_parts(fits, intervention, support, w, a, z, options, buf);
  EifRecord r;
  r.dY = eif_y(y, p.m_a, p.gdelta_a, p.e_a, options.weight_cap, capped);
  r.dA = p.dA;
  r.dZW = p.dZW;
  r.total = r.dY + r.dA + r.dZW;
  return r;
}

EifComponentsBatch assemble_eif(const ObservedDataset& data, std::span<const NuisanceFits> fits,
                                std::span<const std::size_t> assignment,
                                const InterventionSpec& intervention, const ExposureSupport& support,
                                const EifOptions& options) {
  require(!fits.empty(), ErrorCode::DomainError, "no nuisance fits supplied");
  require(assignment.empty() || assignment.size() == data.n(), ErrorCode::DomainError,
          "fold assignment does not match the dataset size");
  const std::size_t n = data.n();
  require(n > 0, ErrorCode::EmptyDataset, "dataset has no rows");

  std::vector<double> gd(n), e(n), m(n), dy(n);
  EifComponentsBatch out;
  out.records.resize(n);
  std::vector<double> buf;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = assignment.empty() ? 0 : assignment[i];
    require(j < fits.size(), ErrorCode::DomainError, "fold index out of range");
    const auto p = row_parts(fits[j], intervention, support, data.w(i), data.a(i), data.z(i), options, buf);
    gd[i] = p.gdelta_a;
    e[i] = p.e_a;
    m[i] = p.m_a;
    out.records[i].dA = p.dA;
    out.records[i].dZW = p.dZW;
  }
  out.capped = kernels::active().weighted_residual(gd.data(), e.data(), data.outcome().data(), m.data(),
                                                   options.weight_cap, dy.data(), n);
  out.totals.resize(n);
  out.s_records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = out.records[i];
    r.dY = dy[i];
    r.total = r.dY + r.dA + r.dZW;
    out.totals[i] = r.total;
    out.s_records[i] = r.total - data.y(i);
  }
  out.theta = kernels::mean(out.totals);
  out.sigma2 = kernels::variance(out.totals);
  require(std::isfinite(out.theta) && std::isfinite(out.sigma2), ErrorCode::DegenerateVariance,
          "influence function values are not finite");
  return out;
}

}  // namespace stochmed::eif
