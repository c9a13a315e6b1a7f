#include <cmath>
#include <filesystem>
#include <fstream>
#include <gtest/gtest.h>

#include "ommap/errors.hpp"
#include "ommap/om_functional.hpp"

using namespace ommap;

namespace {

const GridShape kUnit{0.0, 0.01, 100};

ObservationSet one_observation(double t, double y, double gamma) { return ObservationSet{{t}, {y}, gamma}; }

GridPath wiggle(const OMProblem& p, double amplitude) {
  std::vector<double> v(p.grid.n_steps + 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = p.grid.time(i);
    v[i] = p.u_minus + amplitude * std::sin(7.0 * t) + 0.3 * t;
  }
  if (p.u_plus) v.back() = *p.u_plus;
  return GridPath(p.grid, std::move(v));
}

}  // namespace

TEST(Phi, DoubleWellConstantZeroPath) {
  // Psi(0) = 3 over [0, 1] and F(0) = -1, so Phi = 3 - (-1) = 4.
  const auto p = make_unconditioned(double_well(), 1.0, 0.0, kUnit);
  const auto zero = GridPath::constant(kUnit, 0.0);
  EXPECT_NEAR(phi(p, zero), 4.0, 1e-12);
  EXPECT_NEAR(om_value(p, zero), 4.0, 1e-12);
}

TEST(Phi, BridgeOmitsEndpointPotential) {
  const auto p = make_bridge(double_well(), 1.0, 0.0, 0.0, kUnit);
  EXPECT_NEAR(phi(p, GridPath::constant(kUnit, 0.0)), 3.0, 1e-12);
}

TEST(Phi, SmoothingAddsMisfit) {
  const auto p = make_smoothing(double_well(), 1.0, 0.0, one_observation(0.5, 0.5, 0.5), kUnit);
  // 4 + 0.5^2 / (2 * 0.25)
  EXPECT_NEAR(phi(p, GridPath::constant(kUnit, 0.0)), 4.5, 1e-12);
}

TEST(Phi, OrnsteinUhlenbeckConstant) {
  // Psi(0) = -1/2 and F(0) = 0.
  const GridShape g{0.0, 0.05, 40};
  const auto p = make_unconditioned(ornstein_uhlenbeck(), 1.0, 0.0, g);
  EXPECT_NEAR(om_value(p, GridPath::constant(g, 0.0)), -1.0, 1e-12);
}

TEST(OmValue, ZeroDriftIsCameronMartin) {
  const auto p = make_unconditioned(zero_drift(), 0.5, 0.0, kUnit);
  const auto u = wiggle(p, 0.4);
  EXPECT_NEAR(om_value(p, u), cameron_martin_norm_sq(u, 0.5) / 2.0, 1e-12);
}

TEST(OmValue, BridgeShiftIsFree) {
  const auto p = make_bridge(zero_drift(), 1.0, -1.0, 1.0, kUnit);
  EXPECT_NEAR(om_value(p, p.shift()), 0.0, 1e-14);
}

TEST(OmValue, TrapezoidConvergesQuadratically) {
  auto value_at = [](std::size_t n) {
    const GridShape g{0.0, 1.0 / static_cast<double>(n), n};
    const auto p = make_unconditioned(double_well(), 1.0, 0.0, g);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) v[i] = std::sin(g.time(i));
    return phi(p, GridPath(g, std::move(v)));
  };
  const double a = value_at(50), b = value_at(100), c = value_at(200);
  const double ratio = (a - b) / (b - c);
  EXPECT_GE(ratio, 3.5);
  EXPECT_LE(ratio, 4.5);
}

TEST(OmGradient, MatchesFiniteDifferences) {
  const GridShape g{0.0, 0.02, 50};
  std::vector<OMProblem> problems{
      make_unconditioned(double_well(), 0.8, -1.0, g),
      make_bridge(double_well(), 0.8, -1.0, 1.0, g),
      make_smoothing(double_well(), 0.8, -1.0, ObservationSet{{0.2, 0.5, 1.0}, {-0.5, 0.3, 1.1}, 0.3}, g),
  };
  for (const auto& p : problems) {
    const auto u = wiggle(p, 0.6);
    const auto grad = om_gradient(p, u);
    const auto fixed = p.fixed_nodes();
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (fixed[i]) {
        EXPECT_EQ(grad[i], 0.0);
        continue;
      }
      const double h = 1e-6 * std::max(1.0, std::abs(u[i]));
      std::vector<double> up(u.values().begin(), u.values().end()), dn(up);
      up[i] += h;
      dn[i] -= h;
      const double fd = (om_value(p, u.with_values(up)) - om_value(p, u.with_values(dn))) / (2.0 * h);
      EXPECT_LT(std::abs(grad[i] - fd) / std::max(1.0, std::abs(fd)), 1e-5) << to_string(p.variant) << " node " << i;
    }
  }
}

TEST(OMProblem, FixedNodes) {
  const GridShape g{0.0, 0.1, 10};
  const auto exact = make_smoothing(zero_drift(), 1.0, 0.0, ObservationSet{{0.3, 0.6}, {1.0, 2.0}, 0.0}, g);
  const auto f = exact.fixed_nodes();
  EXPECT_TRUE(f[0]);
  EXPECT_TRUE(f[3]);
  EXPECT_TRUE(f[6]);
  EXPECT_FALSE(f[10]);
  EXPECT_EQ(exact.observation_nodes(), (std::vector<std::size_t>{3, 6}));

  const auto bridge = make_bridge(zero_drift(), 1.0, 0.0, 1.0, g);
  EXPECT_TRUE(bridge.fixed_nodes()[10]);
}

TEST(OMProblem, Validation) {
  const GridShape g{0.0, 0.1, 10};
  EXPECT_THROW(make_unconditioned(zero_drift(), 0.0, 0.0, g), InvalidParameter);
  EXPECT_THROW(make_smoothing(zero_drift(), 1.0, 0.0, one_observation(0.35, 1.0, 0.1), g), InvalidParameter);
  EXPECT_THROW(make_smoothing(zero_drift(), 1.0, 0.0, one_observation(0.0, 1.0, 0.1), g), InvalidParameter);
  EXPECT_THROW(variant_from_string("filtering"), InvalidParameter);

  const auto p = make_bridge(zero_drift(), 1.0, 0.0, 1.0, g);
  EXPECT_THROW(phi(p, GridPath::constant(g, 0.0)), InvalidPath);
  EXPECT_THROW(phi(p, GridPath::constant({0.0, 0.2, 5}, 0.0)), InvalidPath);
}

TEST(PriorCovariance, BrownianAndBridge) {
  const GridShape g{0.0, 0.25, 4};
  const auto bm = prior_covariance(make_unconditioned(zero_drift(), 2.0, 0.0, g));
  // 4 min(t_i, t_j), zero on the pinned start.
  EXPECT_EQ(bm(0, 0), 0.0);
  EXPECT_NEAR(bm(1, 3), 4.0 * 0.25, 1e-14);
  EXPECT_NEAR(bm(4, 4), 4.0, 1e-14);

  const auto br = prior_covariance(make_bridge(zero_drift(), 1.0, 0.0, 0.0, g));
  // t_i (1 - t_j) for i <= j.
  EXPECT_NEAR(br(1, 3), 0.25 * 0.25, 1e-14);
  EXPECT_NEAR(br(2, 2), 0.25, 1e-14);
  EXPECT_EQ(br(4, 4), 0.0);
}

TEST(PriorCovariance, InvertsQuadraticHessian) {
  // For zero drift the functional is |u|^2_{H^1} / (2 sigma^2); its Hessian on
  // the free nodes times the prior covariance is the identity.
  const GridShape g{0.0, 0.1, 8};
  const auto p = make_unconditioned(zero_drift(), 1.3, 0.0, g);
  const auto c = prior_covariance(p);
  const Eigen::Index n = 9;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  const auto base = GridPath::constant(g, 0.0);
  for (Eigen::Index j = 1; j < n; ++j) {
    std::vector<double> e(9, 0.0);
    e[static_cast<std::size_t>(j)] = 1.0;
    const auto col = om_gradient(p, base.with_values(e));
    for (Eigen::Index i = 0; i < n; ++i) h(i, j) = col[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd prod = h.bottomRightCorner(8, 8) * c.bottomRightCorner(8, 8);
  EXPECT_LT((prod - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ProblemJson, RoundTrip) {
  const auto p = make_bridge(double_well(), 0.7, -1.0, 1.0, {0.0, 0.05, 40});
  const auto q = parse_problem_json(problem_to_json(p));
  EXPECT_EQ(q.variant, Variant::Bridge);
  EXPECT_EQ(q.model.name, "double-well");
  EXPECT_EQ(q.sigma, 0.7);
  EXPECT_EQ(*q.u_plus, 1.0);
  EXPECT_EQ(q.grid.n_steps, 40u);
}

TEST(ProblemJson, ObservationsFromFileAndSidecar) {
  const auto dir = std::filesystem::temp_directory_path() / "ommap_problem_json_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "obs.csv");
    write_observations_csv(csv, ObservationSet{{0.5, 1.0}, {0.2, -0.4}, 0.3});
    std::ofstream meta(dir / "obs.json");
    meta << observation_sidecar_json({0.3, 4, "double-well", 1.0});
  }
  const std::string text =
      R"({"variant": "smoothing", "drift": "double-well", "sigma": 1.0, "u_minus": -1.0,)"
      R"( "dt": 0.05, "n_steps": 20, "observations_file": "obs.csv"})";
  const auto p = parse_problem_json(text, dir);
  ASSERT_TRUE(p.observations);
  EXPECT_EQ(p.observations->gamma, 0.3);
  EXPECT_EQ(p.observation_nodes(), (std::vector<std::size_t>{10, 20}));
  EXPECT_THROW(parse_problem_json("{\"variant\": \"bridge\"}"), InvalidInput);
  EXPECT_THROW(parse_problem_json("not json"), InvalidInput);
  std::filesystem::remove_all(dir);
}
