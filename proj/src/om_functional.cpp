#include "ommap/om_functional.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ommap/errors.hpp"

namespace ommap {
namespace {

constexpr double kPinTol = 1e-12;

bool pinned_ok(double value, double target) {
  return std::abs(value - target) <= kPinTol * std::max(1.0, std::abs(target));
}

double trapezoid_weight(std::size_t i, std::size_t n) { return (i == 0 || i == n) ? 0.5 : 1.0; }

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Unconditioned: return "unconditioned";
    case Variant::Bridge: return "bridge";
    case Variant::Smoothing: return "smoothing";
  }
  return "unknown";
}

Variant variant_from_string(std::string_view s) {
  if (s == "unconditioned") return Variant::Unconditioned;
  if (s == "bridge") return Variant::Bridge;
  if (s == "smoothing") return Variant::Smoothing;
  throw InvalidParameter("unknown variant '" + std::string(s) + "'");
}

void OMProblem::validate() const {
  grid.validate();
  if (grid.t0 != 0.0) throw InvalidParameter("OM problems are posed on grids starting at t = 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidParameter("sigma must be positive");
  if (!std::isfinite(u_minus)) throw InvalidParameter("u_minus must be finite");
  if (!model.potential || !model.drift || !model.drift_prime) throw InvalidParameter("drift model is incomplete");
  if (u_plus.has_value() != (variant == Variant::Bridge))
    throw InvalidParameter("u_plus is required for bridges and only for bridges");
  if (u_plus && !std::isfinite(*u_plus)) throw InvalidParameter("u_plus must be finite");
  if (observations.has_value() != (variant == Variant::Smoothing))
    throw InvalidParameter("observations are required for smoothing and only for smoothing");
  if (observations) {
    observations->validate();
    (void)observation_nodes();
  }
}

std::vector<std::size_t> OMProblem::observation_nodes() const {
  std::vector<std::size_t> nodes;
  if (!observations) return nodes;
  nodes.reserve(observations->size());
  for (double t : observations->times) {
    const double x = (t - grid.t0) / grid.dt;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-6) throw InvalidParameter("observation time does not coincide with a grid node");
    if (r < 1.0 || r > static_cast<double>(grid.n_steps))
      throw InvalidParameter("observation time must lie in (0, T]");
    nodes.push_back(static_cast<std::size_t>(r));
  }
  return nodes;
}

std::vector<bool> OMProblem::fixed_nodes() const {
  std::vector<bool> fixed(grid.n_steps + 1, false);
  fixed[0] = true;
  if (variant == Variant::Bridge) fixed[grid.n_steps] = true;
  if (variant == Variant::Smoothing && observations->gamma == 0.0) {
    for (std::size_t k : observation_nodes()) fixed[k] = true;
  }
  return fixed;
}

GridPath OMProblem::shift() const {
  if (variant == Variant::Bridge) return bridge_mean(u_minus, *u_plus, grid);
  return GridPath::constant(grid, u_minus);
}

void OMProblem::check_path(const GridPath& path) const {
  if (!same_grid(path.shape(), grid)) throw InvalidPath("path does not live on the problem grid");
  if (!pinned_ok(path.front(), u_minus)) throw InvalidPath("path violates u(0) = u_minus");
  if (variant == Variant::Bridge && !pinned_ok(path.back(), *u_plus))
    throw InvalidPath("path violates u(T) = u_plus");
  if (variant == Variant::Smoothing && observations->gamma == 0.0) {
    const auto nodes = observation_nodes();
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (!pinned_ok(path[nodes[j]], observations->values[j]))
        throw InvalidPath("noise-free observation not interpolated");
    }
  }
}

OMProblem make_unconditioned(DriftModel model, double sigma, double u_minus, GridShape grid) {
  OMProblem p;
  p.variant = Variant::Unconditioned;
  p.model = std::move(model);
  p.sigma = sigma;
  p.u_minus = u_minus;
  p.grid = grid;
  p.validate();
  return p;
}

OMProblem make_bridge(DriftModel model, double sigma, double u_minus, double u_plus, GridShape grid) {
  OMProblem p;
  p.variant = Variant::Bridge;
  p.model = std::move(model);
  p.sigma = sigma;
  p.u_minus = u_minus;
  p.u_plus = u_plus;
  p.grid = grid;
  p.validate();
  return p;
}

OMProblem make_smoothing(DriftModel model, double sigma, double u_minus, ObservationSet obs, GridShape grid) {
  OMProblem p;
  p.variant = Variant::Smoothing;
  p.model = std::move(model);
  p.sigma = sigma;
  p.u_minus = u_minus;
  p.observations = std::move(obs);
  p.grid = grid;
  p.validate();
  return p;
}

double phi(const OMProblem& problem, const GridPath& path) {
  problem.check_path(path);
  const std::size_t n = path.n_steps();
  const double s2 = problem.sigma * problem.sigma;
  double integral = 0.0;
  for (std::size_t i = 0; i <= n; ++i) integral += trapezoid_weight(i, n) * psi(problem.model, path[i], problem.sigma);
  double value = integral * path.dt();
  if (problem.variant != Variant::Bridge) value -= problem.model.potential(path.back()) / s2;
  if (problem.variant == Variant::Smoothing && problem.observations->gamma > 0.0) {
    const auto& obs = *problem.observations;
    const auto nodes = problem.observation_nodes();
    double misfit = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double r = obs.values[j] - path[nodes[j]];
      misfit += r * r;
    }
    value += misfit / (2.0 * obs.gamma * obs.gamma);
  }
  return value;
}

double om_value(const OMProblem& problem, const GridPath& path) {
  const double p = phi(problem, path);
  const double s2 = problem.sigma * problem.sigma;
  if (problem.variant == Variant::Bridge) return p + h1_seminorm_sq(difference(path, problem.shift())) / (2.0 * s2);
  // A constant shift leaves the seminorm unchanged.
  return p + h1_seminorm_sq(path) / (2.0 * s2);
}

GridPath om_gradient(const OMProblem& problem, const GridPath& path) {
  problem.check_path(path);
  const std::size_t n = path.n_steps();
  const double dt = path.dt();
  const double s2 = problem.sigma * problem.sigma;
  const GridPath d = problem.variant == Variant::Bridge ? difference(path, problem.shift()) : path;

  std::vector<double> g(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) g[i] = trapezoid_weight(i, n) * dt * psi_prime(problem.model, path[i], problem.sigma);

  const double k = 1.0 / (s2 * dt);
  for (std::size_t i = 0; i < n; ++i) {
    const double jump = d[i + 1] - d[i];
    g[i] -= k * jump;
    g[i + 1] += k * jump;
  }
  if (problem.variant != Variant::Bridge) g[n] -= problem.model.drift(path.back()) / s2;
  if (problem.variant == Variant::Smoothing && problem.observations->gamma > 0.0) {
    const auto& obs = *problem.observations;
    const auto nodes = problem.observation_nodes();
    const double w = 1.0 / (obs.gamma * obs.gamma);
    for (std::size_t j = 0; j < nodes.size(); ++j) g[nodes[j]] -= w * (obs.values[j] - path[nodes[j]]);
  }
  const auto fixed = problem.fixed_nodes();
  for (std::size_t i = 0; i <= n; ++i) {
    if (fixed[i]) g[i] = 0.0;
  }
  return path.with_values(std::move(g));
}

Eigen::MatrixXd prior_covariance(const OMProblem& problem) {
  const std::size_t n = problem.grid.n_steps;
  const double scale = problem.sigma * problem.sigma * problem.grid.dt;
  const auto fixed = problem.fixed_nodes();
  const bool bridge = problem.variant == Variant::Bridge;
  const auto nd = static_cast<double>(n);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
  for (std::size_t i = 0; i <= n; ++i) {
    if (fixed[i]) continue;
    for (std::size_t j = i; j <= n; ++j) {
      if (fixed[j]) continue;
      // i <= j: min(i, j) = i for Brownian motion, i (N - j) / N for the bridge.
      const auto di = static_cast<double>(i);
      const double v = bridge ? scale * di * (nd - static_cast<double>(j)) / nd : scale * di;
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      c(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return c;
}

OMProblem parse_problem_json(const std::string& text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("problem JSON does not parse: ") + e.what());
  }
  try {
    OMProblem p;
    p.variant = variant_from_string(j.at("variant").get<std::string>());
    p.model = drift_by_name(j.at("drift").get<std::string>());
    p.sigma = j.at("sigma").get<double>();
    p.u_minus = j.at("u_minus").get<double>();
    if (j.contains("u_plus") && !j["u_plus"].is_null()) p.u_plus = j["u_plus"].get<double>();
    p.grid.t0 = 0.0;
    p.grid.dt = j.at("dt").get<double>();
    p.grid.n_steps = j.at("n_steps").get<std::size_t>();
    if (j.contains("observations_file") && !j["observations_file"].is_null()) {
      std::filesystem::path file = j["observations_file"].get<std::string>();
      if (file.is_relative()) file = base_dir / file;
      double gamma = 0.0;
      if (j.contains("gamma")) {
        gamma = j["gamma"].get<double>();
      } else {
        auto sidecar = file;
        sidecar.replace_extension(".json");
        std::ifstream meta(sidecar);
        if (!meta) throw InvalidInput("no gamma given and no sidecar at " + sidecar.string());
        std::stringstream buf;
        buf << meta.rdbuf();
        gamma = parse_observation_sidecar(buf.str()).gamma;
      }
      std::ifstream in(file);
      if (!in) throw InvalidInput("cannot open observations file " + file.string());
      p.observations = read_observations_csv(in, gamma);
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("problem JSON is missing a field: ") + e.what());
  }
}

std::string problem_to_json(const OMProblem& problem, const std::string& observations_file) {
  nlohmann::ordered_json j;
  j["variant"] = to_string(problem.variant);
  j["drift"] = problem.model.name;
  j["sigma"] = problem.sigma;
  j["u_minus"] = problem.u_minus;
  if (problem.u_plus) j["u_plus"] = *problem.u_plus;
  j["dt"] = problem.grid.dt;
  j["n_steps"] = problem.grid.n_steps;
  if (problem.observations) {
    j["gamma"] = problem.observations->gamma;
    if (!observations_file.empty()) j["observations_file"] = observations_file;
  }
  return j.dump(2);
}

}  // namespace ommap
