#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ommap/gaussian.hpp"
#include "ommap/rng.hpp"

namespace ommap {

/// Potential Phi on R^n. An empty function means Phi = 0.
using Potential = std::function<double(std::span<const double>)>;

/// Monte-Carlo estimate of the (unnormalised) mass
///   E_{mu0}[ 1{|x - center| < radius} exp(-Phi(x)) ].
struct BallEstimate {
  std::vector<double> center;
  double radius = 0.0;
  double probability = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::size_t hits = 0;
  bool low_hits = false;  // fewer than kLowHitThreshold samples landed in the ball
};

inline constexpr std::size_t kLowHitThreshold = 10;

struct SamplingOptions {
  /// Samples per independently seeded block; results depend on this but
  /// never on the thread count.
  std::size_t block_size = std::size_t{1} << 16;
  unsigned threads = 1;
};

BallEstimate ball_prob(const FiniteGaussian& measure, const Potential& phi, std::span<const double> center,
                       double radius, std::size_t n_samples, Rng& rng, const SamplingOptions& opts = {});

/// Onsager-Machlup functional Phi(z) + 1/2 sum_j z_j^2 / lambda_j.
double om_functional_finite(const FiniteGaussian& measure, const Potential& phi, std::span<const double> z);

/// Ratio of two ball masses estimated from a shared sample, with a
/// delta-method standard error.
struct RatioEstimate {
  double ratio = 0.0;
  double std_error = 0.0;
  std::size_t hits_num = 0;
  std::size_t hits_den = 0;
  bool low_hits = false;
};

RatioEstimate ball_ratio(const FiniteGaussian& measure, const Potential& phi, std::span<const double> z1,
                         std::span<const double> z2, double radius, std::size_t n_samples, Rng& rng,
                         const SamplingOptions& opts = {});

struct RatioRow {
  double radius = 0.0;
  double ratio = 0.0;
  double std_error = 0.0;
  double reference = 0.0;
  bool verdict = false;  // |ratio - reference| <= 4 stderr
  bool low_hits = false;
};

struct RatioTable {
  std::vector<RatioRow> rows;
  double reference = 0.0;
  bool final_within_band = false;
  bool monotone_approach = false;
  bool converged() const { return final_within_band && monotone_approach; }
};

/// delta_k = 0.5 * 2^-k, k = 0..levels-1.
std::vector<double> default_radii(std::size_t levels = 6, double first = 0.5);
/// base * (radii[0]/delta)^dimension, capped.
std::vector<std::size_t> default_sample_counts(std::span<const double> radii, std::size_t dimension,
                                               std::size_t base = 10000, std::size_t cap = 10000000);

/// Ball-mass ratio J(z1)/J(z2) across a decreasing radius schedule versus
/// exp(I(z2) - I(z1)). `n_samples` holds one count per radius, or a single
/// count used for all.
RatioTable om_ratio_check(const FiniteGaussian& measure, const Potential& phi, std::span<const double> z1,
                          std::span<const double> z2, std::span<const double> radii,
                          std::span<const std::size_t> n_samples, Rng& rng, const SamplingOptions& opts = {});

void write_ratio_csv(std::ostream& out, const RatioTable& table);

struct LemmaBoundReport {
  double radius = 0.0;
  double norm_z = 0.0;
  double ratio = 0.0;
  double std_error = 0.0;
  double bound = 0.0;  // exp(a1 d^2 / 2) exp(-a1 (|z| - d)^2 / 2)
  bool holds = false;  // ratio - 4 stderr <= bound
  bool low_hits = false;
};

/// Checks J0(z)/J0(0) <= c exp(-(a1/2)(|z| - delta)^2), c = exp(a1 delta^2 / 2),
/// for the centred measure (Phi = 0).
LemmaBoundReport lemma_bound_check(const FiniteGaussian& measure, std::span<const double> z, double radius,
                                   std::size_t n_samples, Rng& rng, const SamplingOptions& opts = {});

struct CandidateRank {
  std::size_t index = 0;
  double probability = 0.0;
  double std_error = 0.0;
  double om_value = 0.0;
  bool low_hits = false;
};

struct MapRanking {
  /// Sorted by descending probability.
  std::vector<CandidateRank> ranking;
  std::size_t mc_argmax = 0;
  std::size_t om_argmin = 0;
  bool agree() const { return mc_argmax == om_argmin; }
};

/// Ranks candidate centres by ball mass at a fixed radius (shared sample)
/// and compares the winner with the minimiser of the OM functional.
MapRanking empirical_map(const FiniteGaussian& measure, const Potential& phi,
                         const std::vector<std::vector<double>>& candidates, double radius, std::size_t n_samples,
                         Rng& rng, const SamplingOptions& opts = {});

}  // namespace ommap
