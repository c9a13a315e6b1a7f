#include <cmath>
#include <sstream>
#include <gtest/gtest.h>

#include "ommap/errors.hpp"
#include "ommap/small_ball.hpp"

using namespace ommap;

namespace {

const std::vector<double> kOrigin1{0.0};

double linear_phi(std::span<const double> x) { return x[0]; }

}  // namespace

TEST(BallProb, StandardNormalUnitBall) {
  const FiniteGaussian g({1.0});
  Rng rng(1);
  const auto e = ball_prob(g, Potential{}, kOrigin1, 1.0, 400000, rng);
  const double exact = std::erf(1.0 / std::sqrt(2.0));  // 0.6827
  EXPECT_NEAR(e.probability, exact, 5.0 * e.std_error);
  EXPECT_LT(e.std_error, 1e-3);
  EXPECT_FALSE(e.low_hits);
}

TEST(BallProb, WeightedByPotential) {
  // Completing the square: E[1{|x| < r} e^{-x}] = e^{1/2} [N(r + 1) - N(1 - r)], N the normal cdf.
  const FiniteGaussian g({1.0});
  Rng rng(2);
  const double r = 0.5;
  const auto e = ball_prob(g, linear_phi, kOrigin1, r, 400000, rng);
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  const double exact = std::exp(0.5) * (cdf(r + 1.0) - cdf(-r + 1.0));
  EXPECT_NEAR(e.probability, exact, 5.0 * e.std_error);
}

TEST(BallProb, Validation) {
  const FiniteGaussian g({1.0, 0.5});
  Rng rng(1);
  const std::vector<double> c{0.0, 0.0};
  EXPECT_THROW(ball_prob(g, Potential{}, c, 0.0, 10, rng), InvalidParameter);
  EXPECT_THROW(ball_prob(g, Potential{}, c, 1.0, 0, rng), InvalidParameter);
  EXPECT_THROW(ball_prob(g, Potential{}, kOrigin1, 1.0, 10, rng), InvalidInput);
}

TEST(BallProb, ThreadCountDoesNotChangeResult) {
  const FiniteGaussian g({1.0, 0.5});
  const std::vector<double> c{0.2, -0.1};
  Rng a(5), b(5);
  SamplingOptions one{1024, 1}, four{1024, 4};
  const auto x = ball_prob(g, Potential{}, c, 0.4, 20000, a, one);
  const auto y = ball_prob(g, Potential{}, c, 0.4, 20000, b, four);
  EXPECT_EQ(x.probability, y.probability);
  EXPECT_EQ(x.hits, y.hits);
}

TEST(BallRatio, IdenticalCentresGiveOne) {
  const FiniteGaussian g({1.0, 0.3});
  const std::vector<double> z{0.4, 0.1};
  Rng rng(3);
  const auto r = ball_ratio(g, Potential{}, z, z, 0.3, 50000, rng);
  EXPECT_EQ(r.ratio, 1.0);
}

TEST(BallRatio, SymmetricCentresAgree) {
  const FiniteGaussian g({1.0});
  const std::vector<double> z{0.7}, mz{-0.7};
  Rng rng(4);
  const auto r = ball_ratio(g, Potential{}, z, mz, 0.3, 400000, rng);
  EXPECT_NEAR(r.ratio, 1.0, 5.0 * r.std_error);
}

TEST(BallRatio, AndersonShiftLowersMass) {
  const FiniteGaussian g({1.0, 0.5});
  const std::vector<double> z{0.8, -0.4}, o{0.0, 0.0};
  Rng rng(6);
  const auto r = ball_ratio(g, Potential{}, z, o, 0.3, 200000, rng);
  EXPECT_LT(r.ratio + 4.0 * r.std_error, 1.0);
}

TEST(OmFunctionalFinite, Values) {
  const FiniteGaussian g({4.0, 1.0});
  const std::vector<double> z{2.0, 1.0};
  EXPECT_DOUBLE_EQ(om_functional_finite(g, Potential{}, z), 1.0);
  EXPECT_DOUBLE_EQ(om_functional_finite(g, linear_phi, z), 3.0);
}

TEST(OmRatioCheck, OneDimensionalLinearPotential) {
  // I(z) = z + z^2 / 2, so the limit ratio is exp(I(0) - I(0.5)) = exp(-0.625).
  const FiniteGaussian g({1.0});
  const std::vector<double> z1{0.5};
  const auto radii = default_radii(4);
  const std::vector<std::size_t> n{1000000};
  Rng rng(8);
  const auto t = om_ratio_check(g, linear_phi, z1, kOrigin1, radii, n, rng);
  EXPECT_NEAR(t.reference, std::exp(-0.625), 1e-15);
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_TRUE(t.converged());
  std::ostringstream csv;
  write_ratio_csv(csv, t);
  EXPECT_EQ(csv.str().rfind("radius,ratio,stderr,reference,verdict\n", 0), 0u);
}

TEST(OmRatioCheck, RejectsBadSchedules) {
  const FiniteGaussian g({1.0});
  Rng rng(1);
  const std::vector<std::size_t> n{100};
  const std::vector<double> up{0.1, 0.2};
  EXPECT_THROW(om_ratio_check(g, Potential{}, kOrigin1, kOrigin1, up, n, rng), InvalidParameter);
  const std::vector<double> radii{0.2, 0.1};
  const std::vector<std::size_t> three{1, 2, 3};
  EXPECT_THROW(om_ratio_check(g, Potential{}, kOrigin1, kOrigin1, radii, three, rng), InvalidParameter);
}

TEST(DefaultRadii, Halving) {
  const auto r = default_radii(3);
  EXPECT_EQ(r, (std::vector<double>{0.5, 0.25, 0.125}));
  const auto n = default_sample_counts(r, 2, 100, 1000);
  EXPECT_EQ(n, (std::vector<std::size_t>{100, 400, 1000}));
}

TEST(LemmaBound, BoundValueAndVerdict) {
  // a1 = 1, |z| = 2, delta = 0.5: exp(0.125) exp(-1.125) = exp(-1).
  const FiniteGaussian g({1.0});
  const std::vector<double> z{2.0};
  Rng rng(9);
  const auto r = lemma_bound_check(g, z, 0.5, 200000, rng);
  EXPECT_NEAR(r.bound, std::exp(-1.0), 1e-15);
  EXPECT_DOUBLE_EQ(r.norm_z, 2.0);
  EXPECT_TRUE(r.holds);
  EXPECT_LT(r.ratio, r.bound);
}

TEST(LemmaBound, OriginIsTight) {
  const FiniteGaussian g({1.0, 0.5});
  const std::vector<double> z{0.0, 0.0};
  Rng rng(10);
  const auto r = lemma_bound_check(g, z, 0.25, 10000, rng);
  EXPECT_EQ(r.ratio, 1.0);
  EXPECT_TRUE(r.holds);
}

TEST(EmpiricalMap, AgreesWithOmMinimiser) {
  const FiniteGaussian g({1.0});
  const std::vector<std::vector<double>> c{{1.0}, {0.0}, {2.0}};
  Rng rng(12);
  const auto m = empirical_map(g, Potential{}, c, 0.2, 200000, rng);
  EXPECT_EQ(m.om_argmin, 1u);
  EXPECT_EQ(m.mc_argmax, 1u);
  EXPECT_TRUE(m.agree());
  EXPECT_EQ(m.ranking.back().index, 2u);

  // A linear potential pulls the mode to z = -1.
  const std::vector<std::vector<double>> d{{0.0}, {-1.0}, {-2.0}};
  const auto n = empirical_map(g, linear_phi, d, 0.2, 200000, rng);
  EXPECT_EQ(n.om_argmin, 1u);
  EXPECT_TRUE(n.agree());
  EXPECT_THROW(empirical_map(g, Potential{}, {{0.0}}, 0.2, 10, rng), InvalidParameter);
}
