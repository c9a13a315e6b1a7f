#include "ommap/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Dense>

#include "json.hpp"
#include "ommap/bfgs.hpp"
#include "ommap/errors.hpp"
#include "ommap/parallel.hpp"

namespace ommap {
namespace {

// Inverse Hessian of the quadratic part of the functional (H^1 term plus
// observation misfit): the posterior covariance of the linear-Gaussian
// smoother, C - C E^T (gamma^2 I + E C E^T)^{-1} E C with C the prior
// covariance and E the observation selector.
Eigen::MatrixXd quadratic_inverse_hessian(const OMProblem& problem) {
  Eigen::MatrixXd c = prior_covariance(problem);
  if (problem.variant != Variant::Smoothing || problem.observations->gamma == 0.0 || problem.observations->empty())
    return c;
  const auto nodes = problem.observation_nodes();
  const auto j = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd ce(c.rows(), j);
  for (Eigen::Index k = 0; k < j; ++k) ce.col(k) = c.col(static_cast<Eigen::Index>(nodes[static_cast<std::size_t>(k)]));
  Eigen::MatrixXd s(j, j);
  for (Eigen::Index a = 0; a < j; ++a) {
    for (Eigen::Index b = 0; b < j; ++b) s(a, b) = ce(static_cast<Eigen::Index>(nodes[static_cast<std::size_t>(a)]), b);
  }
  const double g2 = problem.observations->gamma * problem.observations->gamma;
  s.diagonal().array() += g2;
  c.noalias() -= ce * s.ldlt().solve(ce.transpose());
  return c;
}

}  // namespace

MinimizationResult minimize(const OMProblem& problem, const GridPath& start, const MinimizeOptions& options,
                            std::string label) {
  problem.validate();
  problem.check_path(start);
  const std::size_t n = start.size();
  const auto fixed = problem.fixed_nodes();

  ValueAndGradient fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    std::vector<double> v(x.data(), x.data() + x.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) v[i] = start[i];
    }
    const GridPath path = start.with_values(std::move(v));
    const GridPath g = om_gradient(problem, path);
    grad = Eigen::Map<const Eigen::VectorXd>(g.values().data(), static_cast<Eigen::Index>(n));
    return om_value(problem, path);
  };

  BfgsOptions bopt;
  bopt.tol = options.tol;
  bopt.max_iter = options.max_iter > 0 ? options.max_iter : 10 * problem.grid.n_steps;

  std::optional<Eigen::MatrixXd> h0;
  if (options.precondition) {
    h0 = quadratic_inverse_hessian(problem);
  } else {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) eye(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.0;
    }
    h0 = std::move(eye);
  }

  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(start.values().data(), static_cast<Eigen::Index>(n));
  BfgsResult b = minimize_bfgs(fn, x0, bopt, h0);

  std::vector<double> v(b.x.data(), b.x.data() + b.x.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (fixed[i]) v[i] = start[i];
  }
  return MinimizationResult{start.with_values(std::move(v)), b.value, b.grad_norm, b.iterations, b.converged,
                            std::move(label), std::move(b.history)};
}

MultistartReport multistart(const OMProblem& problem, const std::vector<LabeledStart>& starts,
                            const MinimizeOptions& options, double dedup_threshold, unsigned threads) {
  if (starts.empty()) throw InvalidParameter("multistart needs at least one start");
  if (!(dedup_threshold > 0.0)) throw InvalidParameter("dedup threshold must be positive");
  std::vector<std::optional<MinimizationResult>> runs(starts.size());
  parallel_for(starts.size(), threads,
               [&](std::size_t i) { runs[i] = minimize(problem, starts[i].path, options, starts[i].label); });

  std::vector<MinimizationResult> all;
  all.reserve(runs.size());
  for (auto& r : runs) all.push_back(std::move(*r));
  std::sort(all.begin(), all.end(), [](const MinimizationResult& a, const MinimizationResult& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.start_label < b.start_label;
  });

  MultistartReport report;
  report.dedup_threshold = dedup_threshold;
  report.n_starts = starts.size();
  for (auto& r : all) {
    const bool duplicate = std::any_of(report.minima.begin(), report.minima.end(), [&](const MinimizationResult& kept) {
      return sup_distance(kept.minimizer, r.minimizer) < dedup_threshold;
    });
    if (!duplicate) report.minima.push_back(std::move(r));
  }
  return report;
}

MultistartReport multistart(const OMProblem& problem, const std::vector<GridPath>& starts,
                            const MinimizeOptions& options, double dedup_threshold, unsigned threads) {
  std::vector<LabeledStart> labeled;
  labeled.reserve(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) labeled.push_back({"start-" + std::to_string(i), starts[i]});
  return multistart(problem, labeled, options, dedup_threshold, threads);
}

namespace {

GridPath observation_interpolant(const OMProblem& problem) {
  const auto& obs = *problem.observations;
  const auto nodes = problem.observation_nodes();
  const auto& grid = problem.grid;
  std::vector<double> v(grid.n_steps + 1);
  std::size_t prev_node = 0;
  double prev_value = problem.u_minus;
  std::size_t j = 0;
  for (std::size_t i = 0; i <= grid.n_steps; ++i) {
    while (j < nodes.size() && nodes[j] < i) {
      prev_node = nodes[j];
      prev_value = obs.values[j];
      ++j;
    }
    if (j < nodes.size()) {
      const double s = static_cast<double>(i - prev_node) / static_cast<double>(nodes[j] - prev_node);
      v[i] = (1.0 - s) * prev_value + s * obs.values[j];
    } else {
      v[i] = prev_value;
    }
  }
  v[0] = problem.u_minus;
  return GridPath(grid, std::move(v));
}

// Brownian (or Brownian-bridge) sample around the shift, smoothed by a few
// passes of a three-point average on the free nodes.
GridPath smoothed_prior_sample(const OMProblem& problem, Rng& rng) {
  const auto& grid = problem.grid;
  const std::size_t n = grid.n_steps;
  const double step = problem.sigma * std::sqrt(grid.dt);
  std::vector<double> w(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) w[i] = w[i - 1] + step * rng.normal();
  if (problem.variant == Variant::Bridge) {
    const double end = w[n];
    for (std::size_t i = 0; i <= n; ++i) w[i] -= end * static_cast<double>(i) / static_cast<double>(n);
  }
  const GridPath base = problem.shift();
  const auto fixed = problem.fixed_nodes();
  std::vector<double> v(n + 1);
  for (std::size_t i = 0; i <= n; ++i) v[i] = base[i] + w[i];
  if (problem.variant == Variant::Smoothing && problem.observations->gamma == 0.0) {
    const auto nodes = problem.observation_nodes();
    for (std::size_t j = 0; j < nodes.size(); ++j) v[nodes[j]] = problem.observations->values[j];
  }
  std::vector<double> tmp(v);
  const std::size_t passes = std::max<std::size_t>(1, n / 50);
  for (std::size_t pass = 0; pass < passes; ++pass) {
    for (std::size_t i = 0; i <= n; ++i) {
      if (fixed[i]) continue;
      const double left = v[i - 1];
      const double right = i < n ? v[i + 1] : v[i];
      tmp[i] = 0.25 * left + 0.5 * v[i] + 0.25 * right;
    }
    v.swap(tmp);
    for (std::size_t i = 0; i <= n; ++i) {
      if (fixed[i]) tmp[i] = v[i];
    }
  }
  return GridPath(grid, std::move(v));
}

GridPath pin(const OMProblem& problem, std::vector<double> v) {
  v[0] = problem.u_minus;
  if (problem.variant == Variant::Smoothing && problem.observations->gamma == 0.0) {
    const auto nodes = problem.observation_nodes();
    for (std::size_t j = 0; j < nodes.size(); ++j) v[nodes[j]] = problem.observations->values[j];
  }
  return GridPath(problem.grid, std::move(v));
}

}  // namespace

std::vector<LabeledStart> default_starts(const OMProblem& problem, std::size_t k, Rng& rng) {
  problem.validate();
  if (k < 1) throw InvalidParameter("need at least one start");
  const std::size_t n = problem.grid.n_steps;
  std::vector<LabeledStart> canonical;
  if (problem.variant == Variant::Bridge) {
    canonical.push_back({"bridge-mean", problem.shift()});
  } else {
    canonical.push_back({"constant-u-minus", pin(problem, std::vector<double>(n + 1, problem.u_minus))});
    if (problem.model.name == "double-well")
      canonical.push_back({"constant-plus-one", pin(problem, std::vector<double>(n + 1, 1.0))});
    if (problem.variant == Variant::Smoothing && !problem.observations->empty())
      canonical.push_back({"observation-interpolant", observation_interpolant(problem)});
  }
  if (canonical.size() > k) canonical.erase(canonical.begin() + static_cast<std::ptrdiff_t>(k), canonical.end());
  std::vector<LabeledStart> starts = std::move(canonical);
  for (std::size_t i = starts.size(), r = 0; i < k; ++i, ++r)
    starts.push_back({"prior-sample-" + std::to_string(r), smoothed_prior_sample(problem, rng)});
  return starts;
}

std::string write_report(const MultistartReport& report, const std::filesystem::path& dir, const std::string& prefix) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["dedup_threshold"] = report.dedup_threshold;
  j["n_starts"] = report.n_starts;
  j["minima"] = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < report.minima.size(); ++r) {
    const auto& m = report.minima[r];
    const std::string file = prefix + "_" + std::to_string(r) + ".csv";
    std::ofstream out(dir / file);
    if (!out) throw InvalidInput("cannot write " + (dir / file).string());
    write_csv(out, m.minimizer);
    nlohmann::ordered_json e;
    e["value"] = m.value;
    e["grad_norm"] = m.grad_norm;
    e["iterations"] = m.iterations;
    e["converged"] = m.converged;
    e["start_label"] = m.start_label;
    e["path_file"] = file;
    j["minima"].push_back(std::move(e));
  }
  return j.dump(2);
}

}  // namespace ommap
