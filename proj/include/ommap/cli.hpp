#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ommap/consistency.hpp"
#include "ommap/errors.hpp"
#include "ommap/gaussian.hpp"
#include "ommap/om_functional.hpp"
#include "ommap/optimizer.hpp"

namespace ommap::cli {

/// Bad flag values or an inconsistent combination; the CLI exits with 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// Fully resolved run configuration. Every field has a concrete value after
/// `resolve`, so a manifest written from it replays the run exactly.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  unsigned threads = 1;
  std::string format = "csv";

  // model and grid
  std::string variant = "smoothing";
  std::string drift = "double-well";
  double sigma = 1.0;
  double u_minus = -1.0;
  std::optional<double> u_plus;
  double horizon = 10.0;
  double dt = 0.01;
  std::string problem_file;  // map: load the problem instead of simulating one

  // observations and experiments
  std::size_t n_obs = 0;  // 0 selects the per-command default
  double gamma = -1.0;    // negative selects the per-command default
  std::vector<double> gammas;
  std::vector<std::size_t> j_values;
  std::size_t n_starts = 0;
  double tol = 1e-8;
  double dedup = 1e-3;
  std::string metric = "sup";

  // smallball
  std::vector<double> prior_eigs;
  std::vector<double> z1;
  std::vector<double> z2;
  std::vector<double> potential_coeffs;  // empty: Phi = 0; else Phi(x) = c . x
  std::vector<double> radii;
  std::size_t n_samples = 0;

  // check
  std::vector<int> criteria;
  bool quick = false;

  /// Fills per-command defaults.
  void resolve();
  /// Throws ConfigError.
  void validate() const;
};

std::string to_json(const RunConfig& config);
RunConfig from_json(const std::string& text);
RunConfig read_manifest(const std::filesystem::path& path);

/// FNV-1a of the canonical config JSON, as 16 hex digits.
std::string config_hash(const RunConfig& config);

std::vector<std::string> command_names();

/// Runs the command and writes its artifacts plus `manifest.json` into
/// output_dir. Returns the process exit status: 0 on success, 1 when `check`
/// reports a failure. Throws ConfigError or ommap::Error.
int run(RunConfig config, std::ostream& log);

/// Same as `run` but converts exceptions into an exit status (2 for
/// configuration errors, 1 otherwise) and writes `error.json`.
int run_guarded(RunConfig config, std::ostream& log, std::ostream& err);

/// The problem `map` minimises: loaded from problem_file, or built from the
/// flags (smoothing data simulated from the seed).
OMProblem build_map_problem(const RunConfig& config);
/// Multistart from the default starts, seeded by config.seed.
MultistartReport map_experiment(const RunConfig& config, const OMProblem& problem);

/// The experiment behind `consistency-noise` and `consistency-samples` for a
/// resolved config: truth path from the seed, then the smoothing experiment.
ConsistencyReport noise_experiment(const RunConfig& config);
ConsistencyReport samples_experiment(const RunConfig& config);

/// The truth path used by `simulate`, `map` and the experiments.
GridPath simulate_truth(const RunConfig& config);

}  // namespace ommap::cli
