#include "ommap/small_ball.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "ommap/errors.hpp"
#include "ommap/parallel.hpp"

namespace ommap {
namespace {

// Exact sufficient statistics for k balls over one sample: weighted hit sums,
// squared-weight sums and the pairwise squared-weight co-hit sums.
struct BallSums {
  std::size_t n = 0;
  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::vector<double> cross;  // k x k, row-major
  std::vector<std::size_t> hits;

  explicit BallSums(std::size_t k) : sum(k, 0.0), sum_sq(k, 0.0), cross(k * k, 0.0), hits(k, 0) {}

  void merge(const BallSums& o) {
    n += o.n;
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += o.sum[i];
      sum_sq[i] += o.sum_sq[i];
      hits[i] += o.hits[i];
    }
    for (std::size_t i = 0; i < cross.size(); ++i) cross[i] += o.cross[i];
  }

  double mean(std::size_t i) const { return sum[i] / static_cast<double>(n); }
  double cov(std::size_t i, std::size_t j) const {
    const double nn = static_cast<double>(n);
    const std::size_t k = sum.size();
    return cross[i * k + j] / nn - mean(i) * mean(j);
  }
};

BallSums estimate_balls(const FiniteGaussian& measure, const Potential& phi,
                        const std::vector<std::span<const double>>& centers, double radius, std::size_t n_samples,
                        Rng& rng, const SamplingOptions& opts) {
  if (!(radius > 0.0)) throw InvalidParameter("ball radius must be positive");
  if (n_samples < 1) throw InvalidParameter("need at least one sample");
  if (opts.block_size < 1) throw InvalidParameter("block size must be positive");
  const std::size_t dim = measure.dimension();
  for (const auto& c : centers) {
    if (c.size() != dim) throw InvalidInput("ball centre dimension does not match the measure");
  }
  const std::size_t k = centers.size();
  const std::uint64_t base = rng.next_u64();
  const std::size_t n_blocks = (n_samples + opts.block_size - 1) / opts.block_size;
  const double r2 = radius * radius;

  std::vector<BallSums> blocks(n_blocks, BallSums(k));
  parallel_for(n_blocks, opts.threads, [&](std::size_t b) {
    Rng local(derive_seed(base, "ball-block", b));
    BallSums& acc = blocks[b];
    const std::size_t count = std::min(opts.block_size, n_samples - b * opts.block_size);
    std::vector<double> x(dim);
    std::vector<double> w(k);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t j = 0; j < dim; ++j) x[j] = std::sqrt(measure.eigenvalues()[j]) * local.normal();
      bool any = false;
      for (std::size_t i = 0; i < k; ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          const double d = x[j] - centers[i][j];
          d2 += d * d;
        }
        w[i] = d2 < r2 ? 1.0 : 0.0;
        any = any || w[i] > 0.0;
      }
      if (any && phi) {
        const double e = std::exp(-phi(x));
        for (auto& wi : w) wi *= e;
      }
      for (std::size_t i = 0; i < k; ++i) {
        if (w[i] == 0.0) continue;
        acc.hits[i] += 1;
        acc.sum[i] += w[i];
        acc.sum_sq[i] += w[i] * w[i];
        for (std::size_t j = 0; j < k; ++j) acc.cross[i * k + j] += w[i] * w[j];
      }
    }
    acc.n = count;
  });

  BallSums total(k);
  for (const auto& b : blocks) total.merge(b);
  return total;
}

std::span<const double> as_span(const std::vector<double>& v) { return {v.data(), v.size()}; }

RatioEstimate ratio_from(const BallSums& s) {
  RatioEstimate r;
  r.hits_num = s.hits[0];
  r.hits_den = s.hits[1];
  r.low_hits = r.hits_num < kLowHitThreshold || r.hits_den < kLowHitThreshold;
  if (s.hits[1] == 0) return r;
  const double p1 = s.mean(0);
  const double p2 = s.mean(1);
  r.ratio = p1 / p2;
  const double var = (s.cov(0, 0) - 2.0 * r.ratio * s.cov(0, 1) + r.ratio * r.ratio * s.cov(1, 1)) /
                     (p2 * p2 * static_cast<double>(s.n));
  r.std_error = std::sqrt(std::max(0.0, var));
  return r;
}

}  // namespace

BallEstimate ball_prob(const FiniteGaussian& measure, const Potential& phi, std::span<const double> center,
                       double radius, std::size_t n_samples, Rng& rng, const SamplingOptions& opts) {
  const BallSums s = estimate_balls(measure, phi, {center}, radius, n_samples, rng, opts);
  BallEstimate e;
  e.center.assign(center.begin(), center.end());
  e.radius = radius;
  e.n_samples = n_samples;
  e.hits = s.hits[0];
  e.low_hits = e.hits < kLowHitThreshold;
  if (e.hits == 0) return e;
  e.probability = s.mean(0);
  e.std_error = std::sqrt(std::max(0.0, s.cov(0, 0)) / static_cast<double>(n_samples));
  return e;
}

double om_functional_finite(const FiniteGaussian& measure, const Potential& phi, std::span<const double> z) {
  return (phi ? phi(z) : 0.0) + measure.half_cameron_martin_sq(z);
}

RatioEstimate ball_ratio(const FiniteGaussian& measure, const Potential& phi, std::span<const double> z1,
                         std::span<const double> z2, double radius, std::size_t n_samples, Rng& rng,
                         const SamplingOptions& opts) {
  return ratio_from(estimate_balls(measure, phi, {z1, z2}, radius, n_samples, rng, opts));
}

std::vector<double> default_radii(std::size_t levels, double first) {
  std::vector<double> r(levels);
  for (std::size_t k = 0; k < levels; ++k) r[k] = first * std::ldexp(1.0, -static_cast<int>(k));
  return r;
}

std::vector<std::size_t> default_sample_counts(std::span<const double> radii, std::size_t dimension,
                                               std::size_t base, std::size_t cap) {
  std::vector<std::size_t> n;
  n.reserve(radii.size());
  for (double d : radii) {
    const double want = static_cast<double>(base) * std::pow(radii.front() / d, static_cast<double>(dimension));
    n.push_back(static_cast<std::size_t>(std::min(static_cast<double>(cap), std::ceil(want))));
  }
  return n;
}

RatioTable om_ratio_check(const FiniteGaussian& measure, const Potential& phi, std::span<const double> z1,
                          std::span<const double> z2, std::span<const double> radii,
                          std::span<const std::size_t> n_samples, Rng& rng, const SamplingOptions& opts) {
  if (radii.empty()) throw InvalidParameter("need at least one radius");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0)) throw InvalidParameter("radii must be positive");
    if (k > 0 && !(radii[k] < radii[k - 1])) throw InvalidParameter("radii must be strictly decreasing");
  }
  if (n_samples.size() != 1 && n_samples.size() != radii.size())
    throw InvalidParameter("give one sample count, or one per radius");
  for (double v : z1) if (!std::isfinite(v)) throw InvalidParameter("z1 must be finite");
  for (double v : z2) if (!std::isfinite(v)) throw InvalidParameter("z2 must be finite");

  RatioTable t;
  t.reference = std::exp(om_functional_finite(measure, phi, z2) - om_functional_finite(measure, phi, z1));
  const std::uint64_t base = rng.next_u64();
  for (std::size_t k = 0; k < radii.size(); ++k) {
    Rng level(derive_seed(base, "radius", k));
    const std::size_t n = n_samples.size() == 1 ? n_samples[0] : n_samples[k];
    const RatioEstimate e = ball_ratio(measure, phi, z1, z2, radii[k], n, level, opts);
    RatioRow row;
    row.radius = radii[k];
    row.ratio = e.ratio;
    row.std_error = e.std_error;
    row.reference = t.reference;
    row.low_hits = e.low_hits;
    row.verdict = std::abs(e.ratio - t.reference) <= 4.0 * e.std_error;
    t.rows.push_back(row);
  }
  t.final_within_band = t.rows.back().verdict && !t.rows.back().low_hits;
  // Deviation from the reference may not grow over the last three radii by
  // more than the combined 4-sigma band of each consecutive pair.
  t.monotone_approach = true;
  const std::size_t first = t.rows.size() >= 3 ? t.rows.size() - 3 : 0;
  for (std::size_t k = first + 1; k < t.rows.size(); ++k) {
    const auto& a = t.rows[k - 1];
    const auto& b = t.rows[k];
    const double band = 4.0 * std::hypot(a.std_error, b.std_error);
    if (std::abs(b.ratio - t.reference) > std::abs(a.ratio - t.reference) + band) t.monotone_approach = false;
  }
  return t;
}

void write_ratio_csv(std::ostream& out, const RatioTable& table) {
  const auto old_precision = out.precision();
  out << "radius,ratio,stderr,reference,verdict\n" << std::setprecision(17);
  for (const auto& r : table.rows)
    out << r.radius << ',' << r.ratio << ',' << r.std_error << ',' << r.reference << ',' << (r.verdict ? "pass" : "fail")
        << '\n';
  out.precision(old_precision);
}

LemmaBoundReport lemma_bound_check(const FiniteGaussian& measure, std::span<const double> z, double radius,
                                   std::size_t n_samples, Rng& rng, const SamplingOptions& opts) {
  const std::vector<double> origin(measure.dimension(), 0.0);
  const RatioEstimate e = ball_ratio(measure, Potential{}, z, as_span(origin), radius, n_samples, rng, opts);
  LemmaBoundReport r;
  r.radius = radius;
  r.norm_z = std::sqrt(std::inner_product(z.begin(), z.end(), z.begin(), 0.0));
  r.ratio = e.ratio;
  r.std_error = e.std_error;
  r.low_hits = e.low_hits;
  const double a1 = measure.smallest_precision();
  const double gap = r.norm_z - radius;
  r.bound = std::exp(0.5 * a1 * radius * radius) * std::exp(-0.5 * a1 * gap * gap);
  // At z = 0 both sides equal 1 exactly; allow for rounding in the bound.
  r.holds = r.ratio - 4.0 * r.std_error <= r.bound * (1.0 + 1e-12);
  return r;
}

MapRanking empirical_map(const FiniteGaussian& measure, const Potential& phi,
                         const std::vector<std::vector<double>>& candidates, double radius, std::size_t n_samples,
                         Rng& rng, const SamplingOptions& opts) {
  if (candidates.size() < 2) throw InvalidParameter("need at least two candidates");
  std::vector<std::span<const double>> centers;
  centers.reserve(candidates.size());
  for (const auto& c : candidates) centers.push_back(as_span(c));
  const BallSums s = estimate_balls(measure, phi, centers, radius, n_samples, rng, opts);

  MapRanking m;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    CandidateRank c;
    c.index = i;
    c.probability = s.mean(i);
    c.std_error = std::sqrt(std::max(0.0, s.cov(i, i)) / static_cast<double>(s.n));
    c.om_value = om_functional_finite(measure, phi, centers[i]);
    c.low_hits = s.hits[i] < kLowHitThreshold;
    m.ranking.push_back(c);
  }
  m.om_argmin = std::min_element(m.ranking.begin(), m.ranking.end(), [](const auto& a, const auto& b) {
                  return a.om_value < b.om_value;
                })->index;
  std::stable_sort(m.ranking.begin(), m.ranking.end(),
                   [](const auto& a, const auto& b) { return a.probability > b.probability; });
  m.mc_argmax = m.ranking.front().index;
  return m;
}

}  // namespace ommap
