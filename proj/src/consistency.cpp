#include "ommap/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include <Eigen/Dense>

#include "json.hpp"
#include "ommap/bfgs.hpp"
#include "ommap/errors.hpp"

namespace ommap {

void ForwardMap::validate() const {
  if (dimension_in < 1 || dimension_out < 1) throw InvalidParameter("forward map dimensions must be positive");
  if (!apply || !jacobian) throw InvalidParameter("forward map needs apply and jacobian");
  if (noise_cov_eigs.size() != dimension_out) throw InvalidParameter("noise covariance does not match output dimension");
  for (double c : noise_cov_eigs) {
    if (!(c > 0.0)) throw InvalidParameter("noise covariance eigenvalues must be positive");
  }
}

double ForwardMap::weighted_norm_sq(const Eigen::VectorXd& r) const {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < r.size(); ++k) acc += r[k] * r[k] / noise_cov_eigs[static_cast<std::size_t>(k)];
  return acc;
}

ForwardMap linear_forward(Eigen::MatrixXd a, std::vector<double> noise_cov_eigs) {
  ForwardMap g;
  g.dimension_in = static_cast<std::size_t>(a.cols());
  g.dimension_out = static_cast<std::size_t>(a.rows());
  g.apply = [a](const Eigen::VectorXd& u) -> Eigen::VectorXd { return a * u; };
  g.jacobian = [a](const Eigen::VectorXd&) -> Eigen::MatrixXd { return a; };
  g.noise_cov_eigs = std::move(noise_cov_eigs);
  g.matrix = std::move(a);
  g.validate();
  return g;
}

ForwardMap cubic_pair_forward() {
  ForwardMap g;
  g.dimension_in = 1;
  g.dimension_out = 2;
  g.apply = [](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    Eigen::VectorXd y(2);
    y << u[0], u[0] * u[0] * u[0];
    return y;
  };
  g.jacobian = [](const Eigen::VectorXd& u) -> Eigen::MatrixXd {
    Eigen::MatrixXd j(2, 1);
    j << 1.0, 3.0 * u[0] * u[0];
    return j;
  };
  g.noise_cov_eigs = {1.0, 1.0};
  return g;
}

double prior_norm_sq(const std::vector<double>& prior_eigs, const Eigen::VectorXd& u) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) acc += u[i] * u[i] / prior_eigs[static_cast<std::size_t>(i)];
  return acc;
}

namespace {

void check_inputs(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                  const std::vector<Eigen::VectorXd>& data, const DataMode& mode) {
  forward.validate();
  if (prior_eigs.size() != forward.dimension_in) throw InvalidParameter("prior does not match input dimension");
  for (double l : prior_eigs) {
    if (!(l > 0.0)) throw InvalidParameter("prior eigenvalues must be positive");
  }
  if (mode.n < 1) throw InvalidParameter("n must be at least 1");
  const std::size_t expected = mode.kind == DataMode::Kind::LargeSample ? mode.n : 1;
  if (data.size() != expected) throw InvalidParameter("data count does not match the mode");
  for (const auto& y : data) {
    if (static_cast<std::size_t>(y.size()) != forward.dimension_out) throw InvalidParameter("datum has wrong dimension");
  }
}

// Misfit weight and the data vector it multiplies: sum_j |y_j - G|^2 equals
// n |ybar - G|^2 plus a constant, so both modes reduce to w |y_eff - G|^2.
std::pair<double, Eigen::VectorXd> effective_data(const std::vector<Eigen::VectorXd>& data, const DataMode& mode) {
  if (mode.kind == DataMode::Kind::SmallNoise) {
    const double n = static_cast<double>(mode.n);
    return {n * n, data.front()};
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(data.front().size());
  for (const auto& y : data) mean += y;
  mean /= static_cast<double>(data.size());
  return {static_cast<double>(mode.n), mean};
}

Eigen::VectorXd inverse_noise(const ForwardMap& forward) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(forward.dimension_out));
  for (std::size_t k = 0; k < forward.dimension_out; ++k) w[static_cast<Eigen::Index>(k)] = 1.0 / forward.noise_cov_eigs[k];
  return w;
}

}  // namespace

double tikhonov_value(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                      const std::vector<Eigen::VectorXd>& data, const DataMode& mode, const Eigen::VectorXd& u) {
  check_inputs(forward, prior_eigs, data, mode);
  const Eigen::VectorXd gu = forward.apply(u);
  double misfit = 0.0;
  for (const auto& y : data) misfit += forward.weighted_norm_sq(y - gu);
  if (mode.kind == DataMode::Kind::SmallNoise) misfit *= static_cast<double>(mode.n) * static_cast<double>(mode.n);
  return prior_norm_sq(prior_eigs, u) + misfit;
}

TikhonovResult tikhonov_map_finite(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                                   const std::vector<Eigen::VectorXd>& data, const DataMode& mode, double tol,
                                   std::optional<Eigen::VectorXd> start) {
  check_inputs(forward, prior_eigs, data, mode);
  const auto d = static_cast<Eigen::Index>(forward.dimension_in);
  const auto [weight, y] = effective_data(data, mode);
  const double scale = 1.0 / (1.0 + weight);
  const Eigen::VectorXd c1_inv = inverse_noise(forward);
  Eigen::VectorXd c0_inv(d);
  for (Eigen::Index i = 0; i < d; ++i) c0_inv[i] = 1.0 / prior_eigs[static_cast<std::size_t>(i)];

  // Value up to the data-only constant dropped by effective_data.
  ValueAndGradient fn = [&](const Eigen::VectorXd& u, Eigen::VectorXd& grad) {
    const Eigen::VectorXd r = forward.apply(u) - y;
    const Eigen::VectorXd wr = c1_inv.cwiseProduct(r);
    grad = scale * 2.0 * (c0_inv.cwiseProduct(u) + weight * forward.jacobian(u).transpose() * wr);
    return scale * (u.dot(c0_inv.cwiseProduct(u)) + weight * r.dot(wr));
  };

  const Eigen::VectorXd x0 = start ? *start : Eigen::VectorXd::Zero(d);
  if (x0.size() != d) throw InvalidParameter("start has wrong dimension");
  const Eigen::MatrixXd jac = forward.jacobian(x0);
  Eigen::MatrixXd gn = weight * jac.transpose() * c1_inv.asDiagonal() * jac;
  gn.diagonal() += c0_inv;
  gn *= 2.0 * scale;
  const Eigen::MatrixXd h0 = gn.ldlt().solve(Eigen::MatrixXd::Identity(d, d));

  BfgsOptions opt;
  opt.tol = tol;
  opt.max_iter = 1000;
  const BfgsResult b = minimize_bfgs(fn, x0, opt, h0);
  return {b.x, tikhonov_value(forward, prior_eigs, data, mode, b.x), b.iterations, b.converged};
}

Eigen::VectorXd tikhonov_map_linear(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                                    const std::vector<Eigen::VectorXd>& data, const DataMode& mode) {
  check_inputs(forward, prior_eigs, data, mode);
  if (!forward.matrix) throw InvalidParameter("direct solve needs a linear forward map");
  const Eigen::MatrixXd& a = *forward.matrix;
  const auto [weight, y] = effective_data(data, mode);
  const Eigen::VectorXd c1_inv = inverse_noise(forward);
  Eigen::MatrixXd normal = weight * a.transpose() * c1_inv.asDiagonal() * a;
  for (Eigen::Index i = 0; i < normal.rows(); ++i) normal(i, i) += 1.0 / prior_eigs[static_cast<std::size_t>(i)];
  const Eigen::VectorXd rhs = weight * a.transpose() * c1_inv.cwiseProduct(y);
  return normal.ldlt().solve(rhs);
}

PowerLawFit fit_power_law(const std::vector<double>& abscissa, const std::vector<double>& errors) {
  if (abscissa.size() != errors.size()) throw InvalidParameter("abscissa and errors differ in length");
  bool increasing = true;
  bool decreasing = true;
  for (std::size_t i = 1; i < abscissa.size(); ++i) {
    increasing = increasing && abscissa[i] > abscissa[i - 1];
    decreasing = decreasing && abscissa[i] < abscissa[i - 1];
  }
  if (abscissa.size() > 1 && !increasing && !decreasing) throw InvalidParameter("abscissa must be strictly monotone");

  std::vector<double> lx;
  std::vector<double> ly;
  PowerLawFit fit;
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    if (abscissa[i] > 0.0 && errors[i] > 0.0 && std::isfinite(errors[i])) {
      lx.push_back(std::log(abscissa[i]));
      ly.push_back(std::log(errors[i]));
    } else {
      ++fit.n_excluded;
    }
  }
  if (lx.size() < 2) throw NoFit("power-law fit needs at least two positive points");
  const auto m = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const double slope = sxy / sxx;
  fit.c = std::exp(my - slope * mx);
  fit.alpha = increasing ? -slope : slope;
  fit.n_used = lx.size();
  return fit;
}

std::string to_string(ErrorMetric m) { return m == ErrorMetric::Sup ? "sup" : "l2"; }

ErrorMetric metric_from_string(const std::string& s) {
  if (s == "sup") return ErrorMetric::Sup;
  if (s == "l2") return ErrorMetric::L2;
  throw InvalidParameter("unknown metric '" + s + "'");
}

namespace {

void attach_fit(ConsistencyReport& report) {
  std::vector<double> xs;
  std::vector<double> es;
  for (std::size_t i = 0; i < report.abscissa.size(); ++i) {
    const bool bad = std::find(report.flagged.begin(), report.flagged.end(), report.abscissa[i]) != report.flagged.end();
    if (bad) continue;
    xs.push_back(report.abscissa[i]);
    es.push_back(report.errors[i]);
  }
  try {
    report.fit = fit_power_law(xs, es);
  } catch (const NoFit&) {
    report.fit.reset();
  }
}

ConsistencyReport finite_experiment(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                                    const Eigen::VectorXd& u_truth, const std::vector<std::size_t>& n_values, Rng& rng,
                                    DataMode::Kind kind) {
  forward.validate();
  if (n_values.empty()) throw InvalidParameter("need at least one n");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < 1) throw InvalidParameter("n must be at least 1");
    if (i > 0 && n_values[i] <= n_values[i - 1]) throw InvalidParameter("n values must be increasing");
  }
  ConsistencyReport report;
  report.seed = rng.next_u64();
  report.error_kind = "g-image-c1";
  const Eigen::VectorXd g_truth = forward.apply(u_truth);
  const auto k = static_cast<Eigen::Index>(forward.dimension_out);
  for (std::size_t idx = 0; idx < n_values.size(); ++idx) {
    const std::size_t n = n_values[idx];
    Rng noise(derive_seed(report.seed, "noise", idx));
    const std::size_t count = kind == DataMode::Kind::LargeSample ? n : 1;
    const double amp = kind == DataMode::Kind::LargeSample ? 1.0 : 1.0 / static_cast<double>(n);
    std::vector<Eigen::VectorXd> data(count, g_truth);
    for (auto& y : data) {
      for (Eigen::Index c = 0; c < k; ++c)
        y[c] += amp * std::sqrt(forward.noise_cov_eigs[static_cast<std::size_t>(c)]) * noise.normal();
    }
    const TikhonovResult r = tikhonov_map_finite(forward, prior_eigs, data, {kind, n});
    report.abscissa.push_back(static_cast<double>(n));
    report.errors.push_back(std::sqrt(forward.weighted_norm_sq(forward.apply(r.u) - g_truth)));
    report.estimates.push_back(r.u);
    if (!r.converged) report.flagged.push_back(static_cast<double>(n));
  }
  attach_fit(report);
  return report;
}

double g_image_error(const GridPath& est, const GridPath& truth, const std::vector<std::size_t>& nodes,
                     ErrorMetric metric) {
  double acc = 0.0;
  for (std::size_t k : nodes) {
    const double e = std::abs(est[k] - truth[k]);
    acc = metric == ErrorMetric::Sup ? std::max(acc, e) : acc + e * e;
  }
  return metric == ErrorMetric::Sup ? acc : std::sqrt(acc);
}

double path_error(const GridPath& est, const GridPath& truth, ErrorMetric metric) {
  if (metric == ErrorMetric::Sup) return sup_distance(est, truth);
  const std::size_t n = est.n_steps();
  double acc = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double e = est[i] - truth[i];
    acc += ((i == 0 || i == n) ? 0.5 : 1.0) * e * e;
  }
  return std::sqrt(acc * est.dt());
}

const MinimizationResult& map_estimate(const OMProblem& problem, Rng& start_rng, const SmoothingOptions& options,
                                       MultistartReport& storage) {
  const auto starts = default_starts(problem, options.n_starts, start_rng);
  storage = multistart(problem, starts, options.minimize, options.dedup_threshold, options.threads);
  return storage.best();
}

}  // namespace

ConsistencyReport large_sample_experiment(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                                          const Eigen::VectorXd& u_truth, const std::vector<std::size_t>& n_values,
                                          Rng& rng) {
  return finite_experiment(forward, prior_eigs, u_truth, n_values, rng, DataMode::Kind::LargeSample);
}

ConsistencyReport small_noise_experiment(const ForwardMap& forward, const std::vector<double>& prior_eigs,
                                         const Eigen::VectorXd& u_truth, const std::vector<std::size_t>& n_values,
                                         Rng& rng) {
  return finite_experiment(forward, prior_eigs, u_truth, n_values, rng, DataMode::Kind::SmallNoise);
}

OMProblem smoothing_template(DriftModel model, double sigma, double u_minus, GridShape grid, std::size_t count,
                             double gamma) {
  grid.validate();
  ObservationSet obs;
  obs.gamma = gamma;
  for (double t : evenly_spaced_times(grid, count)) obs.times.push_back(grid.time(snap_index(grid, t)));
  obs.values.assign(obs.times.size(), 0.0);
  return make_smoothing(std::move(model), sigma, u_minus, std::move(obs), grid);
}

ConsistencyReport smoothing_small_noise(const OMProblem& tmpl, const GridPath& u_truth,
                                        const std::vector<double>& gamma_values, Rng& rng,
                                        const SmoothingOptions& options) {
  tmpl.validate();
  if (tmpl.variant != Variant::Smoothing) throw InvalidParameter("small-noise experiment needs a smoothing template");
  if (!same_grid(u_truth.shape(), tmpl.grid)) throw InvalidParameter("truth path is not on the template grid");
  if (gamma_values.empty()) throw InvalidParameter("need at least one gamma");
  for (std::size_t i = 0; i < gamma_values.size(); ++i) {
    if (!(gamma_values[i] >= 0.0)) throw InvalidParameter("gamma values must be non-negative");
    if (i > 0 && !(gamma_values[i] < gamma_values[i - 1]))
      throw InvalidParameter("gamma values must be strictly decreasing (no duplicates)");
  }
  ConsistencyReport report;
  report.seed = rng.next_u64();
  report.error_kind = "g-image-" + to_string(options.metric);
  const auto& times = tmpl.observations->times;
  for (std::size_t idx = 0; idx < gamma_values.size(); ++idx) {
    Rng obs_rng(derive_seed(report.seed, "observations", idx));
    Rng start_rng(derive_seed(report.seed, "starts", idx));
    OMProblem p = tmpl;
    p.observations = observe(u_truth, times, gamma_values[idx], obs_rng);
    p.validate();
    MultistartReport ms;
    const auto& best = map_estimate(p, start_rng, options, ms);
    report.abscissa.push_back(gamma_values[idx]);
    report.errors.push_back(g_image_error(best.minimizer, u_truth, p.observation_nodes(), options.metric));
    if (!best.converged) report.flagged.push_back(gamma_values[idx]);
  }
  attach_fit(report);
  return report;
}

ConsistencyReport smoothing_large_sample(const OMProblem& tmpl, const GridPath& u_truth,
                                         const std::vector<std::size_t>& j_values, double gamma, Rng& rng,
                                         const SmoothingOptions& options) {
  tmpl.validate();
  if (!same_grid(u_truth.shape(), tmpl.grid)) throw InvalidParameter("truth path is not on the template grid");
  if (!(gamma >= 0.0)) throw InvalidParameter("gamma must be non-negative");
  if (j_values.empty()) throw InvalidParameter("need at least one J");
  for (std::size_t i = 0; i < j_values.size(); ++i) {
    if (j_values[i] < 1) throw InvalidParameter("J must be at least 1");
    if (i > 0 && j_values[i] <= j_values[i - 1]) throw InvalidParameter("J values must be increasing");
  }
  ConsistencyReport report;
  report.seed = rng.next_u64();
  report.error_kind = "path-" + to_string(options.metric);
  for (std::size_t idx = 0; idx < j_values.size(); ++idx) {
    Rng obs_rng(derive_seed(report.seed, "observations", idx));
    Rng start_rng(derive_seed(report.seed, "starts", idx));
    OMProblem p = smoothing_template(tmpl.model, tmpl.sigma, tmpl.u_minus, tmpl.grid, j_values[idx], gamma);
    p.observations = observe(u_truth, p.observations->times, gamma, obs_rng);
    p.validate();
    MultistartReport ms;
    const auto& best = map_estimate(p, start_rng, options, ms);
    const auto j = static_cast<double>(j_values[idx]);
    report.abscissa.push_back(j);
    report.errors.push_back(path_error(best.minimizer, u_truth, options.metric));
    if (!best.converged) report.flagged.push_back(j);
  }
  attach_fit(report);
  return report;
}

void write_consistency_csv(std::ostream& out, const ConsistencyReport& report) {
  const auto old_precision = out.precision();
  out << "abscissa,error\n" << std::setprecision(17);
  for (std::size_t i = 0; i < report.abscissa.size(); ++i) out << report.abscissa[i] << ',' << report.errors[i] << '\n';
  out.precision(old_precision);
}

std::string consistency_json(const ConsistencyReport& report, const std::string& metric, const std::string& config_hash) {
  nlohmann::ordered_json j;
  if (report.fit) {
    j["fit_c"] = report.fit->c;
    j["fit_alpha"] = report.fit->alpha;
  } else {
    j["fit_c"] = nullptr;
    j["fit_alpha"] = nullptr;
  }
  j["metric"] = metric;
  j["error_kind"] = report.error_kind;
  j["seed"] = report.seed;
  j["config_hash"] = config_hash;
  j["flagged"] = report.flagged;
  return j.dump(2);
}

}  // namespace ommap
