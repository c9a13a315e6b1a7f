#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ommap {

/// Returns f(x) and writes the gradient into `grad`.
using ValueAndGradient = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BfgsOptions {
  double tol = 1e-8;           // on the gradient sup-norm
  std::size_t max_iter = 1000;
  double armijo_c = 1e-4;
  int max_halvings = 50;
  /// Relative rise in f tolerated by the approximate-Wolfe acceptance test
  /// that takes over once Armijo decreases fall below rounding error.
  double roundoff_slack = 1e-12;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool stagnated = false;
  /// Objective after each accepted step, starting with f(x0).
  std::vector<double> history;
};

/// Dense BFGS on the inverse Hessian with backtracking Armijo line search
/// (step halving); accepted values are non-increasing up to `roundoff_slack`.
/// `initial_inverse_hessian` defaults to the identity. Any coordinate
/// whose row in the initial inverse Hessian is zero never moves, provided the
/// caller also zeroes its gradient component.
BfgsResult minimize_bfgs(const ValueAndGradient& fn, const Eigen::VectorXd& x0, const BfgsOptions& options,
                         const std::optional<Eigen::MatrixXd>& initial_inverse_hessian = std::nullopt);

}  // namespace ommap
