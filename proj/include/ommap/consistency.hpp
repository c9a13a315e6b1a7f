#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ommap/gaussian.hpp"
#include "ommap/om_functional.hpp"
#include "ommap/optimizer.hpp"
#include "ommap/rng.hpp"

namespace ommap {

/// Finite-dimensional forward map G: R^d -> R^K observed with noise
/// N(0, C1), C1 = diag(noise_cov_eigs).
struct ForwardMap {
  std::size_t dimension_in = 0;
  std::size_t dimension_out = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
  std::vector<double> noise_cov_eigs;
  /// Set when G(u) = A u.
  std::optional<Eigen::MatrixXd> matrix;

  void validate() const;
  /// |r|_{C1}^2 = sum_k r_k^2 / c_k
  double weighted_norm_sq(const Eigen::VectorXd& r) const;
  /// E |C1^{-1/2} eta|^2 = K
  double noise_trace() const { return static_cast<double>(dimension_out); }
};

ForwardMap linear_forward(Eigen::MatrixXd a, std::vector<double> noise_cov_eigs);
/// G(u) = (u, u^3) on R with identity noise covariance.
ForwardMap cubic_pair_forward();

/// Which Tikhonov functional the data feed:
///   LargeSample: |u|_E^2 + sum_{j=1..n} |y_j - G(u)|_{C1}^2   (n data vectors)
///   SmallNoise:  |u|_E^2 + n^2 |y - G(u)|_{C1}^2              (one data vector)
struct DataMode {
  enum class Kind { LargeSample, SmallNoise };
  Kind kind = Kind::LargeSample;
  std::size_t n = 1;
};

struct TikhonovResult {
  Eigen::VectorXd u;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// |u|_E^2 = sum_i u_i^2 / prior_eigs_i
double prior_norm_sq(const std::vector<double>& prior_eigs, const Eigen::VectorXd& u);

double tikhonov_value(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                      const std::vector<Eigen::VectorXd>& data, const DataMode& mode, const Eigen::VectorXd& u);

/// Minimises the Tikhonov functional by BFGS, started at `start` (zero by
/// default) with the inverse Gauss-Newton Hessian there as initial metric.
/// The functional is divided by (1 + weight) so `tol` applies to a gradient of
/// unit scale.
TikhonovResult tikhonov_map_finite(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                                   const std::vector<Eigen::VectorXd>& data, const DataMode& mode,
                                   double tol = 1e-10, std::optional<Eigen::VectorXd> start = std::nullopt);

/// Closed-form minimiser for linear G by a direct solve of the normal
/// equations.
Eigen::VectorXd tikhonov_map_linear(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                                    const std::vector<Eigen::VectorXd>& data, const DataMode& mode);

struct PowerLawFit {
  double c = 0.0;
  double alpha = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
};

/// Least squares of log(error) on log(x), error ~ c x^s. The exponent is
/// oriented along the abscissa order so that alpha > 0 means the error decays
/// as the sequence advances: alpha = -s for increasing abscissae (sample
/// counts), alpha = s for decreasing ones (noise levels). Non-positive points
/// are dropped; fewer than two usable points throws NoFit.
PowerLawFit fit_power_law(const std::vector<double>& abscissa, const std::vector<double>& errors);

enum class ErrorMetric { Sup, L2 };
std::string to_string(ErrorMetric m);
ErrorMetric metric_from_string(const std::string& s);

struct ConsistencyReport {
  std::vector<double> abscissa;
  std::vector<double> errors;
  std::string error_kind;
  std::optional<PowerLawFit> fit;
  std::uint64_t seed = 0;
  /// Abscissa points whose minimisation did not converge.
  std::vector<double> flagged;
  /// Per-point estimate (finite-dimensional experiments only).
  std::vector<Eigen::VectorXd> estimates;
};

/// Large-sample limit: for each n draw n noisy copies of G(u_truth),
/// minimise, record |G(u_n) - G(u_truth)|_{C1} and fit c n^-alpha.
ConsistencyReport large_sample_experiment(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                                          const Eigen::VectorXd& u_truth, const std::vector<std::size_t>& n_values,
                                          Rng& rng);

/// Small-noise limit with gamma = 1/n: y = G(u_truth) + eta / n.
ConsistencyReport small_noise_experiment(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                                         const Eigen::VectorXd& u_truth, const std::vector<std::size_t>& n_values,
                                         Rng& rng);

struct SmoothingOptions {
  std::size_t n_starts = 4;
  MinimizeOptions minimize;
  double dedup_threshold = 1e-3;
  unsigned threads = 1;
  ErrorMetric metric = ErrorMetric::Sup;
};

/// Smoothing problem with `count` interior, equally spaced observation times
/// snapped to the grid; observation values are zero placeholders.
OMProblem smoothing_template(DriftModel model, double sigma, double u_minus, GridShape grid, std::size_t count,
                             double gamma = 1.0);

/// Fixed truth, fixed observation times (from the template); for each gamma
/// fresh observations, multistart MAP, and the G-image distance
/// max_j |u*(t_j) - u_truth(t_j)|. Fits c gamma^alpha (alpha reported
/// positive for linear decay).
ConsistencyReport smoothing_small_noise(const OMProblem& tmpl, const GridPath& u_truth,
                                        const std::vector<double>& gamma_values, Rng& rng,
                                        const SmoothingOptions& options = {});

/// Fixed truth and gamma; for each J, equally spaced observations, multistart
/// MAP, and the path distance to the truth. Fits c J^-alpha.
ConsistencyReport smoothing_large_sample(const OMProblem& tmpl, const GridPath& u_truth,
                                         const std::vector<std::size_t>& j_values, double gamma, Rng& rng,
                                         const SmoothingOptions& options = {});

void write_consistency_csv(std::ostream& out, const ConsistencyReport& report);
/// {fit_c, fit_alpha, metric, seed, config_hash, flagged}
std::string consistency_json(const ConsistencyReport& report, const std::string& metric,
                             const std::string& config_hash);

}  // namespace ommap
