#include <cmath>
#include <sstream>
#include <gtest/gtest.h>

#include "ommap/errors.hpp"
#include "ommap/sde.hpp"

using namespace ommap;

TEST(EulerMaruyama, NoiseFreeOuMatchesExponential) {
  Rng rng(1);
  const auto p = euler_maruyama(ornstein_uhlenbeck(), 0.0, 1.0, 1e-4, 10000, rng);
  EXPECT_NEAR(p.back(), std::exp(-1.0), 1e-3);
  EXPECT_NEAR(p.horizon(), 1.0, 1e-12);
}

TEST(EulerMaruyama, ZeroDriftNoNoiseIsConstant) {
  Rng rng(1);
  const auto p = euler_maruyama(zero_drift(), 0.0, 3.0, 0.1, 50, rng);
  for (double v : p.values()) EXPECT_EQ(v, 3.0);
}

TEST(EulerMaruyama, BrownianVarianceAtOne) {
  Rng rng(11);
  const int n = 20000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = euler_maruyama(zero_drift(), 1.0, 0.0, 0.01, 100, rng).back();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(EulerMaruyama, DoubleWellMeanStaysNearStartWell) {
  // Started in a well with small noise, paths stay close to it.
  Rng rng(3);
  double mean = 0.0;
  const int n = 200;
  for (int k = 0; k < n; ++k) mean += euler_maruyama(double_well(), 0.2, -1.0, 0.01, 200, rng).back() / n;
  EXPECT_NEAR(mean, -1.0, 0.05);
}

TEST(EulerMaruyama, DivergenceReportsStep) {
  DriftModel explosive = zero_drift();
  explosive.name = "explosive";
  explosive.drift = [](double u) { return u * u * u * u; };
  Rng rng(1);
  try {
    euler_maruyama(explosive, 0.0, 10.0, 1.0, 100, rng);
    FAIL() << "expected divergence";
  } catch (const IntegrationDiverged& e) {
    EXPECT_GT(e.step(), 0u);
    EXPECT_LT(e.step(), 100u);
    EXPECT_EQ(e.kind(), "integration-diverged");
  }
}

TEST(EulerMaruyama, RejectsBadParameters) {
  Rng rng(1);
  EXPECT_THROW(euler_maruyama(zero_drift(), 1.0, 0.0, 0.0, 10, rng), InvalidParameter);
  EXPECT_THROW(euler_maruyama(zero_drift(), 1.0, 0.0, 0.1, 0, rng), InvalidParameter);
  EXPECT_THROW(euler_maruyama(zero_drift(), -1.0, 0.0, 0.1, 10, rng), InvalidParameter);
}

TEST(EulerMaruyama, DeterministicPerSeed) {
  Rng a(99), b(99), c(100);
  const auto pa = euler_maruyama(double_well(), 1.0, -1.0, 0.01, 300, a);
  const auto pb = euler_maruyama(double_well(), 1.0, -1.0, 0.01, 300, b);
  const auto pc = euler_maruyama(double_well(), 1.0, -1.0, 0.01, 300, c);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i], pb[i]);
  EXPECT_GT(sup_distance(pa, pc), 0.0);
}

TEST(SnapIndex, NearestWithTiesToEarlier) {
  const GridShape g{0.0, 0.1, 10};
  EXPECT_EQ(snap_index(g, 0.0), 0u);
  EXPECT_EQ(snap_index(g, 0.14), 1u);
  EXPECT_EQ(snap_index(g, 0.16), 2u);
  EXPECT_EQ(snap_index(g, 0.15), 1u);
  EXPECT_EQ(snap_index(g, 1.0), 10u);
  EXPECT_THROW(snap_index(g, 1.2), InvalidParameter);
  EXPECT_THROW(snap_index(g, -0.1), InvalidParameter);
}

TEST(Observe, NoiseFreeIsExactProjection) {
  const GridPath p(0.0, 0.5, {0.0, 1.0, 4.0, 9.0, 16.0});
  Rng rng(5);
  const auto obs = observe(p, {0.5, 1.4, 2.0}, 0.0, rng);
  EXPECT_EQ(obs.values, (std::vector<double>{1.0, 9.0, 16.0}));
  EXPECT_EQ(obs.times, (std::vector<double>{0.5, 1.5, 2.0}));
}

TEST(Observe, NoiseMomentsMatchGamma) {
  const auto p = GridPath::constant({0.0, 0.01, 100}, 2.0);
  const auto times = evenly_spaced_times(p.shape(), 99);
  Rng rng(8);
  double s = 0.0, s2 = 0.0;
  std::size_t n = 0;
  for (int rep = 0; rep < 200; ++rep) {
    for (double y : observe(p, times, 0.5, rng).values) {
      s += y - 2.0;
      s2 += (y - 2.0) * (y - 2.0);
      ++n;
    }
  }
  const double nn = static_cast<double>(n);
  EXPECT_NEAR(s / nn, 0.0, 5.0 * 0.5 / std::sqrt(nn));
  EXPECT_NEAR(s2 / nn, 0.25, 5.0 * 0.25 * std::sqrt(2.0 / nn));
}

TEST(Observe, RejectsNegativeGammaAndDuplicateSnaps) {
  const auto p = GridPath::constant({0.0, 0.1, 10}, 0.0);
  Rng rng(1);
  EXPECT_THROW(observe(p, {0.5}, -1.0, rng), InvalidParameter);
  EXPECT_THROW(observe(p, {0.51, 0.52}, 0.1, rng), InvalidParameter);
}

TEST(EvenlySpacedTimes, Interior) {
  const auto t = evenly_spaced_times({0.0, 0.1, 10}, 4);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_DOUBLE_EQ(t[0], 0.2);
  EXPECT_DOUBLE_EQ(t[3], 0.8);
}

TEST(ObservationCsv, RoundTrip) {
  ObservationSet obs{{0.1, 0.2, 0.7}, {1.0 / 3.0, -2.5, 1e-17}, 0.25};
  std::stringstream ss;
  write_observations_csv(ss, obs);
  const auto back = read_observations_csv(ss, 0.25);
  EXPECT_EQ(back.times, obs.times);
  EXPECT_EQ(back.values, obs.values);
  EXPECT_EQ(back.gamma, 0.25);
}

TEST(ObservationCsv, RejectsMalformedInput) {
  std::stringstream no_header("0.1,2\n");
  EXPECT_THROW(read_observations_csv(no_header, 0.1), InvalidInput);
  std::stringstream bad_row("t,y\n0.1;2\n");
  EXPECT_THROW(read_observations_csv(bad_row, 0.1), InvalidInput);
  std::stringstream unsorted("t,y\n0.2,1\n0.1,1\n");
  EXPECT_THROW(read_observations_csv(unsorted, 0.1), InvalidParameter);
}

TEST(ObservationSidecar, RoundTrip) {
  const ObservationMeta meta{0.125, 18446744073709551615ull, "double-well", 0.7};
  const auto back = parse_observation_sidecar(observation_sidecar_json(meta));
  EXPECT_EQ(back.gamma, meta.gamma);
  EXPECT_EQ(back.seed, meta.seed);
  EXPECT_EQ(back.drift, meta.drift);
  EXPECT_EQ(back.sigma, meta.sigma);
  EXPECT_THROW(parse_observation_sidecar("{\"gamma\": 1}"), InvalidInput);
}
