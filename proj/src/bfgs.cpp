#include "ommap/bfgs.hpp"

#include <cmath>

#include "ommap/errors.hpp"

namespace ommap {

BfgsResult minimize_bfgs(const ValueAndGradient& fn, const Eigen::VectorXd& x0, const BfgsOptions& options,
                         const std::optional<Eigen::MatrixXd>& initial_inverse_hessian) {
  const Eigen::Index n = x0.size();
  if (!(options.tol > 0.0)) throw InvalidParameter("BFGS tolerance must be positive");
  const Eigen::MatrixXd h0 = initial_inverse_hessian ? *initial_inverse_hessian : Eigen::MatrixXd::Identity(n, n);
  if (h0.rows() != n || h0.cols() != n) throw InvalidParameter("initial inverse Hessian has the wrong shape");

  BfgsResult r;
  r.x = x0;
  Eigen::VectorXd g(n);
  r.value = fn(r.x, g);
  if (!std::isfinite(r.value)) throw InvalidParameter("objective is not finite at the starting point");
  r.history.push_back(r.value);
  r.grad_norm = g.lpNorm<Eigen::Infinity>();

  Eigen::MatrixXd h = h0;
  bool fresh = true;  // h is (a multiple of) h0, no curvature pairs absorbed yet
  Eigen::VectorXd x_new(n);
  Eigen::VectorXd g_new(n);

  while (r.grad_norm > options.tol && r.iterations < options.max_iter) {
    Eigen::VectorXd p = -(h * g);
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      h = h0;
      fresh = true;
      p = -(h * g);
      slope = g.dot(p);
      if (!(slope < 0.0)) {
        r.stagnated = true;
        break;
      }
    }

    double alpha = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int k = 0; k <= options.max_halvings; ++k) {
      x_new = r.x + alpha * p;
      f_new = fn(x_new, g_new);
      if (!std::isfinite(f_new)) {
        alpha *= 0.5;
        continue;
      }
      if (f_new <= r.value + options.armijo_c * alpha * slope) {
        accepted = true;
        break;
      }
      // Near the optimum the Armijo decrease drops below the rounding error
      // of f. Fall back to the approximate Wolfe test of Hager and Zhang:
      // f may rise by at most a few ulps while the directional derivative
      // shrinks to within [0.9 slope, -0.8 slope].
      const double slope_new = g_new.dot(p) * alpha;
      const double f_noise = options.roundoff_slack * (1.0 + std::abs(r.value));
      if (f_new <= r.value + f_noise && slope_new >= 0.9 * alpha * slope && slope_new <= -0.8 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!fresh) {
        // Retry once from the initial metric before giving up.
        h = h0;
        fresh = true;
        continue;
      }
      r.stagnated = true;
      break;
    }

    const Eigen::VectorXd s = x_new - r.x;
    const Eigen::VectorXd y = g_new - g;
    r.x = x_new;
    g = g_new;
    r.value = f_new;
    r.grad_norm = g.lpNorm<Eigen::Infinity>();
    r.history.push_back(r.value);
    ++r.iterations;

    const double sy = s.dot(y);
    if (sy > 1e-300 && std::isfinite(sy)) {
      Eigen::VectorXd hy = h * y;
      double yhy = y.dot(hy);
      if (fresh && yhy > 0.0) {
        // Scale the initial metric to the observed curvature.
        const double scale = sy / yhy;
        h *= scale;
        hy *= scale;
        yhy *= scale;
      }
      const double rho = 1.0 / sy;
      h.noalias() += ((sy + yhy) * rho * rho) * (s * s.transpose());
      h.noalias() -= rho * (hy * s.transpose() + s * hy.transpose());
      fresh = false;
    }
  }
  r.converged = r.grad_norm <= options.tol;
  if (r.converged) r.stagnated = false;
  return r;
}

}  // namespace ommap
