#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ommap/drift.hpp"
#include "ommap/gaussian.hpp"
#include "ommap/sde.hpp"

namespace ommap {

enum class Variant { Unconditioned, Bridge, Smoothing };

std::string to_string(Variant v);
Variant variant_from_string(std::string_view s);

/// One discretised Onsager-Machlup functional
///   I(u) = Phi(u) + |u - shift|_{H^1}^2 / (2 sigma^2)
/// on a grid starting at t0 = 0, with u(0) = u_minus pinned (and u(T) = u_plus
/// for bridges).
struct OMProblem {
  Variant variant = Variant::Unconditioned;
  DriftModel model;
  double sigma = 1.0;
  double u_minus = 0.0;
  std::optional<double> u_plus;
  std::optional<ObservationSet> observations;
  GridShape grid;

  /// Throws InvalidParameter unless the variant-specific fields are present
  /// exactly as required and every observation time sits on a grid node > 0.
  void validate() const;

  /// Grid node index of each observation (Smoothing only).
  std::vector<std::size_t> observation_nodes() const;

  /// Nodes held fixed during minimisation: u_0 always, u_N for bridges, and
  /// observation nodes when gamma == 0 (exact interpolation).
  std::vector<bool> fixed_nodes() const;

  /// Constant u_minus, or the bridge mean for Bridge.
  GridPath shift() const;

  /// Throws InvalidPath if `path` is off-grid or violates a pinned node.
  void check_path(const GridPath& path) const;
};

OMProblem make_unconditioned(DriftModel model, double sigma, double u_minus, GridShape grid);
OMProblem make_bridge(DriftModel model, double sigma, double u_minus, double u_plus, GridShape grid);
OMProblem make_smoothing(DriftModel model, double sigma, double u_minus, ObservationSet obs, GridShape grid);

/// Trapezoidal int Psi dt, minus F(u_N)/sigma^2 (Unconditioned, Smoothing),
/// plus the misfit sum |y_j - u(t_j)|^2 / (2 gamma^2) (Smoothing). Bridges
/// drop the constant F(u_plus)/sigma^2.
double phi(const OMProblem& problem, const GridPath& path);

/// phi + |path - shift|_{H^1}^2 / (2 sigma^2)
double om_value(const OMProblem& problem, const GridPath& path);

/// Exact gradient of om_value with respect to node values; zero on fixed
/// nodes.
GridPath om_gradient(const OMProblem& problem, const GridPath& path);

/// Prior covariance on the free nodes (Brownian motion or Brownian bridge,
/// scaled by sigma^2), i.e. the inverse Hessian of the H^1 term, as an
/// (N+1)x(N+1) matrix whose rows and columns at fixed nodes are zero.
Eigen::MatrixXd prior_covariance(const OMProblem& problem);

/// Reads a problem from JSON
///   {variant, drift, sigma, u_minus, u_plus?, dt, n_steps, observations_file?, gamma?}
/// Relative observation paths resolve against `base_dir`. When gamma is
/// absent it is taken from the observation sidecar (<stem>.json).
OMProblem parse_problem_json(const std::string& text, const std::filesystem::path& base_dir = {});
std::string problem_to_json(const OMProblem& problem, const std::string& observations_file = {});

}  // namespace ommap
