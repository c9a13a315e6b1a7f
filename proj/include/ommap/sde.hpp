#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ommap/drift.hpp"
#include "ommap/gaussian.hpp"
#include "ommap/rng.hpp"

namespace ommap {

/// Noisy point observations y_j = u(t_j) + gamma * xi_j.
struct ObservationSet {
  std::vector<double> times;
  std::vector<double> values;
  double gamma = 0.0;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
  /// Strictly increasing finite times, matching lengths, gamma >= 0.
  void validate() const;
};

/// u_{i+1} = u_i + f(u_i) dt + sigma sqrt(dt) xi_i, u_0 = u0.
/// Throws IntegrationDiverged (with the step index) on a non-finite state.
GridPath euler_maruyama(const DriftModel& model, double sigma, double u0, double dt, std::size_t n_steps,
                        Rng& rng);

/// Index of the grid node nearest to t; ties go to the earlier node.
std::size_t snap_index(const GridShape& grid, double t);

/// Observes `path` at the nodes nearest to `times`. Returned times are the
/// snapped node times. gamma = 0 gives exact projections.
ObservationSet observe(const GridPath& path, const std::vector<double>& times, double gamma, Rng& rng);

/// t0 + j T / (J + 1), j = 1..J: J interior, equally spaced times.
std::vector<double> evenly_spaced_times(const GridShape& grid, std::size_t count);

struct ObservationMeta {
  double gamma = 0.0;
  std::uint64_t seed = 0;
  std::string drift;
  double sigma = 1.0;
};

void write_observations_csv(std::ostream& out, const ObservationSet& obs);
ObservationSet read_observations_csv(std::istream& in, double gamma);
/// JSON sidecar {gamma, seed, drift, sigma}.
std::string observation_sidecar_json(const ObservationMeta& meta);
ObservationMeta parse_observation_sidecar(const std::string& json_text);

}  // namespace ommap
