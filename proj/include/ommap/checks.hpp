#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ommap {

/// Outcome of one acceptance criterion.
struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct CheckOptions {
  unsigned threads = 1;
  /// Scratch directory for the reproducibility check.
  std::string work_dir = "ommap_check";
  /// Shrinks sample counts and experiment sizes for smoke runs. Verdicts from
  /// a quick run are not acceptance verdicts.
  bool quick = false;
};

CheckResult check_gradient(const CheckOptions& options);
CheckResult check_linear_gaussian(const CheckOptions& options);
CheckResult check_om_ratio(const CheckOptions& options);
CheckResult check_lemma_bound(const CheckOptions& options);
CheckResult check_local_minima(const CheckOptions& options);
CheckResult check_small_noise(const CheckOptions& options);
CheckResult check_large_sample(const CheckOptions& options);
CheckResult check_finite_consistency(const CheckOptions& options);
CheckResult check_reproducibility(const CheckOptions& options);

/// Runs the listed criteria (all nine when empty) in order.
std::vector<CheckResult> run_checks(const CheckOptions& options, const std::vector<int>& ids = {});

/// "PASS  3 om-ratio-limit (12.3 s): detail"
std::string format_result(const CheckResult& r);

}  // namespace ommap
