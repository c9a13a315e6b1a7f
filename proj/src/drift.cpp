#include "ommap/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ommap/errors.hpp"

namespace ommap {

DriftModel double_well() {
  DriftModel m;
  m.name = "double-well";
  m.potential = [](double u) {
    const double a = (1.0 - u) * (1.0 + u);
    return -a * a / (1.0 + u * u);
  };
  m.drift = [](double u) {
    const double q = 1.0 + u * u;
    return 2.0 * u * (1.0 - u * u) * (3.0 + u * u) / (q * q);
  };
  // f = g / q^2 with g = 6u - 4u^3 - 2u^5, so f' = (g' q - 4 u g) / q^3.
  m.drift_prime = [](double u) {
    const double u2 = u * u;
    const double q = 1.0 + u2;
    const double g = u * (6.0 - 4.0 * u2 - 2.0 * u2 * u2);
    const double dg = 6.0 - 12.0 * u2 - 10.0 * u2 * u2;
    return (dg * q - 4.0 * u * g) / (q * q * q);
  };
  return m;
}

DriftModel ornstein_uhlenbeck() {
  DriftModel m;
  m.name = "ou";
  m.potential = [](double u) { return -0.5 * u * u; };
  m.drift = [](double u) { return -u; };
  m.drift_prime = [](double) { return -1.0; };
  return m;
}

DriftModel zero_drift() {
  DriftModel m;
  m.name = "zero";
  m.potential = [](double) { return 0.0; };
  m.drift = [](double) { return 0.0; };
  m.drift_prime = [](double) { return 0.0; };
  m.bound_M = 0.0;
  return m;
}

DriftModel drift_by_name(std::string_view name) {
  if (name == "double-well") return double_well();
  if (name == "ou") return ornstein_uhlenbeck();
  if (name == "zero") return zero_drift();
  throw InvalidParameter("unknown drift model '" + std::string(name) + "'");
}

std::vector<std::string> drift_names() { return {"double-well", "ou", "zero"}; }

double psi(const DriftModel& model, double u, double sigma) {
  if (!(sigma > 0.0)) throw InvalidParameter("sigma must be positive");
  const double f = model.drift(u);
  const double s2 = sigma * sigma;
  return (f * f + s2 * model.drift_prime(u)) / (2.0 * s2);
}

double psi_prime(const DriftModel& model, double u, double sigma) {
  if (!(sigma > 0.0)) throw InvalidParameter("sigma must be positive");
  constexpr double h = 1e-5;
  const double f2 = (model.drift_prime(u + h) - model.drift_prime(u - h)) / (2.0 * h);
  const double s2 = sigma * sigma;
  return (2.0 * model.drift(u) * model.drift_prime(u) + s2 * f2) / (2.0 * s2);
}

AssumptionReport check_assumption(const DriftModel& model, double sigma, double u_lo, double u_hi,
                                  std::size_t n_probe) {
  if (n_probe < 2) throw InvalidParameter("need at least two probe points");
  if (!(u_hi > u_lo)) throw InvalidParameter("empty probe interval");
  AssumptionReport r;
  r.u_lo = u_lo;
  r.u_hi = u_hi;
  r.n_probe = n_probe;
  r.min_psi = std::numeric_limits<double>::infinity();
  r.max_potential = -std::numeric_limits<double>::infinity();
  const double h = (u_hi - u_lo) / static_cast<double>(n_probe - 1);
  double prev_f = 0.0;
  for (std::size_t k = 0; k < n_probe; ++k) {
    const double u = u_lo + static_cast<double>(k) * h;
    r.min_psi = std::min(r.min_psi, psi(model, u, sigma));
    r.max_potential = std::max(r.max_potential, model.potential(u));
    const double f = model.drift(u);
    if (k > 0) r.lipschitz = std::max(r.lipschitz, std::abs(f - prev_f) / h);
    prev_f = f;
  }
  if (model.bound_M) {
    r.bound_checked = true;
    r.violation = r.min_psi < *model.bound_M || r.max_potential > *model.bound_M;
  }
  return r;
}

}  // namespace ommap
