#include "ommap/sde.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "ommap/errors.hpp"

namespace ommap {

void ObservationSet::validate() const {
  if (times.size() != values.size()) throw InvalidParameter("observation times and values differ in length");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidParameter("observation noise gamma must be >= 0");
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!std::isfinite(times[j]) || !std::isfinite(values[j])) throw InvalidParameter("non-finite observation");
    if (j > 0 && !(times[j] > times[j - 1])) throw InvalidParameter("observation times must be strictly increasing");
  }
}

GridPath euler_maruyama(const DriftModel& model, double sigma, double u0, double dt, std::size_t n_steps,
                        Rng& rng) {
  if (!(dt > 0.0)) throw InvalidParameter("dt must be positive");
  if (n_steps < 1) throw InvalidParameter("need at least one step");
  if (!(sigma >= 0.0)) throw InvalidParameter("sigma must be non-negative");
  std::vector<double> u(n_steps + 1);
  u[0] = u0;
  const double noise_scale = sigma * std::sqrt(dt);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double f = model.drift(u[i]);
    const double xi = rng.normal();
    u[i + 1] = u[i] + f * dt + noise_scale * xi;
    if (!std::isfinite(f) || !std::isfinite(u[i + 1]))
      throw IntegrationDiverged(i, "Euler-Maruyama diverged at step " + std::to_string(i));
  }
  return GridPath(0.0, dt, std::move(u));
}

std::size_t snap_index(const GridShape& grid, double t) {
  const double end = grid.t0 + grid.horizon();
  const double slack = 1e-9 * grid.dt;
  if (!(t >= grid.t0 - slack) || !(t <= end + slack))
    throw InvalidParameter("observation time outside the path domain");
  const double x = (t - grid.t0) / grid.dt;
  auto i = static_cast<std::size_t>(std::floor(x));
  // Ties (x exactly half-way, up to rounding) stay on the earlier node.
  if (x - static_cast<double>(i) > 0.5 + 1e-9) ++i;
  return std::min(i, grid.n_steps);
}

ObservationSet observe(const GridPath& path, const std::vector<double>& times, double gamma, Rng& rng) {
  if (!(gamma >= 0.0)) throw InvalidParameter("observation noise gamma must be >= 0");
  ObservationSet obs;
  obs.gamma = gamma;
  obs.times.reserve(times.size());
  obs.values.reserve(times.size());
  const auto grid = path.shape();
  for (double t : times) {
    const std::size_t i = snap_index(grid, t);
    obs.times.push_back(path.time(i));
    obs.values.push_back(path[i] + gamma * rng.normal());
  }
  obs.validate();
  return obs;
}

std::vector<double> evenly_spaced_times(const GridShape& grid, std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t j = 0; j < count; ++j)
    t[j] = grid.t0 + static_cast<double>(j + 1) * grid.horizon() / static_cast<double>(count + 1);
  return t;
}

void write_observations_csv(std::ostream& out, const ObservationSet& obs) {
  const auto old_precision = out.precision();
  out << "t,y\n" << std::setprecision(17);
  for (std::size_t j = 0; j < obs.size(); ++j) out << obs.times[j] << ',' << obs.values[j] << '\n';
  out.precision(old_precision);
}

ObservationSet read_observations_csv(std::istream& in, double gamma) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,y", 0) != 0) throw InvalidInput("expected CSV header 't,y'");
  ObservationSet obs;
  obs.gamma = gamma;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double t = 0.0;
    double y = 0.0;
    char comma = 0;
    if (!(row >> t >> comma >> y) || comma != ',') throw InvalidInput("malformed CSV row: " + line);
    obs.times.push_back(t);
    obs.values.push_back(y);
  }
  obs.validate();
  return obs;
}

std::string observation_sidecar_json(const ObservationMeta& meta) {
  nlohmann::ordered_json j;
  j["gamma"] = meta.gamma;
  j["seed"] = meta.seed;
  j["drift"] = meta.drift;
  j["sigma"] = meta.sigma;
  return j.dump(2);
}

ObservationMeta parse_observation_sidecar(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    ObservationMeta meta;
    meta.gamma = j.at("gamma").get<double>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.drift = j.at("drift").get<std::string>();
    meta.sigma = j.at("sigma").get<double>();
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad observation sidecar: ") + e.what());
  }
}

}  // namespace ommap
