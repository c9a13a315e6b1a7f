#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ommap {

/// Potential F with drift f = F' and f' = F''. All three are supplied in
/// closed form by each model.
struct DriftModel {
  std::string name;
  std::function<double(double)> potential;
  std::function<double(double)> drift;
  std::function<double(double)> drift_prime;
  /// Known constant M with Psi >= M and F <= M, if any.
  std::optional<double> bound_M;
};

/// F(u) = -(1-u)^2 (1+u)^2 / (1+u^2); stable equilibria at -1 and +1.
DriftModel double_well();
/// f(u) = -u.
DriftModel ornstein_uhlenbeck();
/// f = 0, F = 0.
DriftModel zero_drift();

/// Lookup by CLI name: "double-well", "ou", "zero".
DriftModel drift_by_name(std::string_view name);
std::vector<std::string> drift_names();

/// Psi(u) = (f(u)^2 + sigma^2 f'(u)) / (2 sigma^2).
double psi(const DriftModel& model, double u, double sigma);

/// d Psi / du, with f'' taken by central differences of f' (step 1e-5).
double psi_prime(const DriftModel& model, double u, double sigma);

struct AssumptionReport {
  double u_lo = 0.0;
  double u_hi = 0.0;
  std::size_t n_probe = 0;
  double min_psi = 0.0;
  double max_potential = 0.0;
  /// Largest |f(u_{k+1}) - f(u_k)| / |u_{k+1} - u_k| over the probe grid.
  double lipschitz = 0.0;
  bool bound_checked = false;
  bool violation = false;
};

/// Probes Psi, F and f on a uniform grid over [u_lo, u_hi]. Advisory only:
/// global bounds cannot be certified by sampling.
AssumptionReport check_assumption(const DriftModel& model, double sigma, double u_lo, double u_hi,
                                  std::size_t n_probe);

}  // namespace ommap
