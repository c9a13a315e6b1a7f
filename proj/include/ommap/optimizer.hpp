#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ommap/gaussian.hpp"
#include "ommap/om_functional.hpp"
#include "ommap/rng.hpp"

namespace ommap {

struct MinimizationResult {
  GridPath minimizer;
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::string start_label;
  std::vector<double> value_history;
};

struct MultistartReport {
  /// Sorted ascending by (value, start_label).
  std::vector<MinimizationResult> minima;
  double dedup_threshold = 1e-3;
  std::size_t n_starts = 0;

  const MinimizationResult& best() const { return minima.front(); }
};

struct LabeledStart {
  std::string label;
  GridPath path;
};

struct MinimizeOptions {
  double tol = 1e-8;
  /// 0 selects 10 * N.
  std::size_t max_iter = 0;
  /// Start BFGS from the prior covariance instead of the identity.
  bool precondition = true;
};

/// BFGS on the free nodes of `problem`, starting at `start`. Pinned nodes are
/// never updated. Line-search failure yields converged = false, not a throw.
MinimizationResult minimize(const OMProblem& problem, const GridPath& start, const MinimizeOptions& options = {},
                            std::string label = {});

/// Runs `minimize` from every start (in parallel when threads != 1), then
/// keeps the lowest-valued result of each cluster of minimisers closer than
/// `dedup_threshold` in sup-norm.
MultistartReport multistart(const OMProblem& problem, const std::vector<LabeledStart>& starts,
                            const MinimizeOptions& options = {}, double dedup_threshold = 1e-3,
                            unsigned threads = 1);
MultistartReport multistart(const OMProblem& problem, const std::vector<GridPath>& starts,
                            const MinimizeOptions& options = {}, double dedup_threshold = 1e-3,
                            unsigned threads = 1);

/// Canonical starts first (bridge mean; constant u_minus; constant +1 for the
/// double well; the piecewise-linear observation interpolant), truncated to
/// k, then smoothed prior samples up to k in total.
std::vector<LabeledStart> default_starts(const OMProblem& problem, std::size_t k, Rng& rng);

/// Writes one `<prefix>_<rank>.csv` per minimum into `dir` and returns the
/// report JSON: {dedup_threshold, n_starts, minima: [{value, grad_norm,
/// iterations, converged, start_label, path_file}]}.
std::string write_report(const MultistartReport& report, const std::filesystem::path& dir,
                         const std::string& prefix = "minimizer");

}  // namespace ommap
