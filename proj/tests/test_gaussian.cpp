#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <gtest/gtest.h>

#include "ommap/errors.hpp"
#include "ommap/gaussian.hpp"

using namespace ommap;

namespace {

GridPath sampled(double t0, double horizon, std::size_t n, double (*f)(double)) {
  const double dt = horizon / static_cast<double>(n);
  std::vector<double> v(n + 1);
  for (std::size_t i = 0; i <= n; ++i) v[i] = f(t0 + static_cast<double>(i) * dt);
  return GridPath(t0, dt, std::move(v));
}

}  // namespace

TEST(GridPath, RejectsBadInput) {
  EXPECT_THROW(GridPath(0.0, 0.0, {1.0, 2.0}), InvalidInput);
  EXPECT_THROW(GridPath(0.0, 0.1, {1.0}), InvalidInput);
  EXPECT_THROW(GridPath(0.0, 0.1, {1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidInput);
  EXPECT_THROW(GridPath(0.0, 0.1, {1.0, std::numeric_limits<double>::infinity()}), InvalidInput);
}

TEST(GridPath, HorizonIsDerived) {
  const GridPath p(0.5, 0.25, {0.0, 1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(p.horizon(), 1.0);
  EXPECT_DOUBLE_EQ(p.time(4), 1.5);
}

TEST(H1Seminorm, LinearPathIsExact) {
  const auto p = sampled(0.0, 1.0, 100, [](double t) { return t; });
  EXPECT_NEAR(h1_seminorm_sq(p), 1.0, 1e-12);
}

TEST(H1Seminorm, ConstantIsZero) {
  EXPECT_EQ(h1_seminorm_sq(GridPath::constant({0.0, 0.1, 10}, 3.7)), 0.0);
}

TEST(H1Seminorm, QuadraticConverges) {
  // int_0^1 (2t)^2 dt = 4/3; the forward-difference error is h^2 / 3.
  const auto coarse = sampled(0.0, 1.0, 500, [](double t) { return t * t; });
  const auto fine = sampled(0.0, 1.0, 1000, [](double t) { return t * t; });
  EXPECT_NEAR(h1_seminorm_sq(fine), 4.0 / 3.0, 1e-4);
  const double e_coarse = std::abs(h1_seminorm_sq(coarse) - 4.0 / 3.0);
  const double e_fine = std::abs(h1_seminorm_sq(fine) - 4.0 / 3.0);
  EXPECT_NEAR(e_coarse / e_fine, 4.0, 0.05);
}

TEST(H1Seminorm, ShiftInvariantAndQuadratic) {
  const auto p = sampled(0.0, 2.0, 64, [](double t) { return std::sin(3.0 * t) + t; });
  std::vector<double> shifted(p.values().begin(), p.values().end());
  std::vector<double> scaled(shifted);
  for (auto& x : shifted) x += 5.0;
  for (auto& x : scaled) x *= -2.5;
  EXPECT_NEAR(h1_seminorm_sq(p.with_values(shifted)), h1_seminorm_sq(p), 1e-10);
  EXPECT_NEAR(h1_seminorm_sq(p.with_values(scaled)), 6.25 * h1_seminorm_sq(p), 1e-10);
}

TEST(H1Seminorm, RefinementOfPiecewiseLinearIsExact) {
  const GridPath p(0.0, 0.3, {0.0, 1.0, -2.0, 0.5, 0.5, 3.0});
  EXPECT_NEAR(h1_seminorm_sq(p.refined()), h1_seminorm_sq(p), 1e-12);
  EXPECT_EQ(p.refined().size(), 11u);
}

TEST(CameronMartin, Scaling) {
  const auto p = sampled(0.0, 1.0, 100, [](double t) { return t; });
  EXPECT_NEAR(cameron_martin_norm_sq(p, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(cameron_martin_norm_sq(p, 2.0), h1_seminorm_sq(p) / 4.0, 1e-14);
  EXPECT_THROW(cameron_martin_norm_sq(p, 0.0), InvalidParameter);
  EXPECT_THROW(cameron_martin_norm_sq(p, -1.0), InvalidParameter);
}

TEST(CameronMartin, SineAgainstIntegral) {
  const auto p = sampled(0.0, 1.0, 1000, [](double t) { return std::sin(std::numbers::pi * t); });
  EXPECT_NEAR(cameron_martin_norm_sq(p, 1.0), std::numbers::pi * std::numbers::pi / 2.0, 1e-3);
}

TEST(BridgeMean, Examples) {
  const auto m = bridge_mean(-1.0, 1.0, {0.0, 0.25, 4});
  EXPECT_NEAR(m[2], 0.0, 1e-15);
  EXPECT_EQ(m.front(), -1.0);
  EXPECT_EQ(m.back(), 1.0);

  const auto c = bridge_mean(0.7, 0.7, {0.0, 0.1, 10});
  for (double v : c.values()) EXPECT_DOUBLE_EQ(v, 0.7);

  const auto m2 = bridge_mean(-1.0, 2.0, {0.0, 0.5, 4});  // T = 2, node 1 is t = 0.5
  EXPECT_NEAR(m2[1], -0.25, 1e-15);
}

TEST(BridgeMean, Affine) {
  const GridShape g{0.0, 0.1, 20};
  const auto a = bridge_mean(1.0, -2.0, g);
  const auto b = bridge_mean(0.5, 4.0, g);
  const auto s = bridge_mean(1.5, 2.0, g);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(a[i] + b[i], s[i], 1e-14);
}

TEST(GridCsv, RoundTripFullPrecision) {
  const GridPath p(0.0, 0.1, {1.0 / 3.0, std::numbers::pi, -1e-300, 2.0});
  std::stringstream ss;
  write_csv(ss, p);
  EXPECT_EQ(ss.str().substr(0, 8), "t,value\n");
  const GridPath q = read_grid_csv(ss);
  ASSERT_EQ(q.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(q[i], p[i]);
  EXPECT_DOUBLE_EQ(q.dt(), p.dt());
}

TEST(FiniteGaussian, Validation) {
  EXPECT_THROW(FiniteGaussian({}), InvalidParameter);
  EXPECT_THROW(FiniteGaussian({1.0, 2.0}), InvalidParameter);
  EXPECT_THROW(FiniteGaussian({1.0, 0.0}), InvalidParameter);
  const FiniteGaussian g({4.0, 1.0});
  EXPECT_DOUBLE_EQ(g.smallest_precision(), 0.25);
  const std::vector<double> z{2.0, 1.0};
  EXPECT_DOUBLE_EQ(g.half_cameron_martin_sq(z), 0.5 * (1.0 + 1.0));
}

TEST(FiniteGaussian, SamplerIsReproducible) {
  const FiniteGaussian g({1.0});
  Rng a(42), b(42);
  EXPECT_EQ(sample_finite_gaussian(g, a), sample_finite_gaussian(g, b));
}

TEST(FiniteGaussian, MomentsMatchWithinFiveStderr) {
  const FiniteGaussian g({4.0, 1.0});
  Rng rng(7);
  const int n = 100000;
  double s0 = 0, s1 = 0, s01 = 0;
  for (int k = 0; k < n; ++k) {
    const auto x = sample_finite_gaussian(g, rng);
    s0 += x[0] * x[0];
    s1 += x[1] * x[1];
    s01 += x[0] * x[1];
  }
  // Var of x^2 is 2 lambda^2; var of x0 x1 is lambda0 lambda1.
  EXPECT_NEAR(s0 / n, 4.0, 5.0 * 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s1 / n, 1.0, 5.0 * 1.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s01 / n, 0.0, 5.0 * std::sqrt(4.0 / n));
}
