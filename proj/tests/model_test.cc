#include "lqrhc/model.hpp"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "test_common.hpp"

namespace lqrhc {
namespace {

using testing::random_data;
using testing::scalar_data;
using testing::default_data;

bool has_violation(const ValidationReport& r, const std::string& name) {
  return std::find(r.violations.begin(), r.violations.end(), name) !=
         r.violations.end();
}

TEST(ValidateProblem, DefaultExampleIsValid) {
  // A is unstable but (A,B) is stabilizable.
  const auto d = default_data();
  EXPECT_GT(d.A.eigenvalues().real().maxCoeff(), 0.0);
  EXPECT_TRUE(validate_problem(d).ok());
}

TEST(ValidateProblem, ZeroAlpha) {
  auto d = default_data();
  d.alpha = 0.0;
  const auto r = validate_problem(d);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_violation(r, "alpha > 0"));
}

TEST(ValidateProblem, UncontrollableUnstableMode) {
  const auto r = validate_problem(scalar_data(1.0, 0.0, 1.0, 1.0));
  EXPECT_TRUE(has_violation(r, "stabilizability"));
  EXPECT_FALSE(has_violation(r, "detectability"));
}

TEST(ValidateProblem, UnobservableUnstableMode) {
  const auto r = validate_problem(scalar_data(1.0, 1.0, 0.0, 1.0));
  EXPECT_TRUE(has_violation(r, "detectability"));
}

TEST(ValidateProblem, TerminalWeight) {
  auto d = default_data();
  d.Q << 1.0, 0.5, 0.0, 1.0;
  EXPECT_TRUE(has_violation(validate_problem(d), "Q symmetric"));
  d.Q << -1.0, 0.0, 0.0, 1.0;
  EXPECT_TRUE(has_violation(validate_problem(d), "Q positive semi-definite"));
}

TEST(ValidateProblem, DimensionMismatchIsStructural) {
  auto d = default_data();
  d.B.resize(3, 1);
  d.B.setOnes();
  EXPECT_THROW(validate_problem(d), DimensionError);
}

TEST(RunningCost, Formula) {
  auto d = scalar_data(0.0, 1.0, 1.0, 1.0);
  EXPECT_EQ(running_cost(d, VectorXd::Zero(1), VectorXd::Zero(1)), 0.0);
  EXPECT_DOUBLE_EQ(
      running_cost(d, VectorXd::Constant(1, 2.0), VectorXd::Constant(1, 1.0)),
      2.5);
  d.g_star(0) = 1.0;
  d.h_star(0) = -1.0;
  EXPECT_DOUBLE_EQ(
      running_cost(d, VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 1.0)),
      1.0);
}

TEST(RunningCost, ConvexOnRandomPairs) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_data(rng);
    const VectorXd ya = testing::random_matrix(rng, 2, 1);
    const VectorXd yb = testing::random_matrix(rng, 2, 1);
    const VectorXd ua = testing::random_matrix(rng, 1, 1);
    const VectorXd ub = testing::random_matrix(rng, 1, 1);
    const double mid = running_cost(d, 0.5 * (ya + yb), 0.5 * (ua + ub));
    EXPECT_LE(mid, 0.5 * running_cost(d, ya, ua) + 0.5 * running_cost(d, yb, ub) +
                       1e-12);
  }
}

TEST(Grid, Construction) {
  const Grid g = make_grid(0.0, 30.0, 5e-3);
  EXPECT_EQ(g.K, 6000);
  EXPECT_NEAR(g.node(g.K), 30.0, 1e-10);
  EXPECT_THROW(make_grid(0.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(make_grid(0.0, 1.0, 0.3), std::invalid_argument);
  EXPECT_FALSE(steps_in(1.0, 0.3).has_value());
  EXPECT_EQ(*steps_in(7.5, 5e-3), 1500);
}

Trajectory random_trajectory(std::mt19937& rng, const Grid& g) {
  Trajectory t;
  t.grid = g;
  t.states = testing::random_matrix(rng, 2, g.K + 1);
  t.controls = testing::random_matrix(rng, 1, g.K);
  return t;
}

TEST(TotalCost, ZeroTrajectory) {
  auto d = default_data();
  d.f_star.setZero();
  Trajectory t;
  t.grid = make_grid(0.0, 1.0, 0.1);
  t.states = MatrixXd::Zero(2, 11);
  t.controls = MatrixXd::Zero(1, 10);
  const CostReport r = total_cost(d, t, MatrixXd::Identity(2, 2),
                                  VectorXd::Zero(2));
  EXPECT_EQ(r.total, 0.0);
}

TEST(TotalCost, ConstantIntegrand) {
  const auto d = default_data();
  VectorXd y(2), u(1);
  y << -0.3, 0.7;
  u << 0.4;
  Trajectory t;
  t.grid = make_grid(0.0, d.T_bar, 5e-3);
  t.states = y.replicate(1, t.grid.K + 1);
  t.controls = u.replicate(1, t.grid.K);
  const CostReport r = total_cost(d, t, d.Q, d.q);
  const double expected = d.T_bar * running_cost(d, y, u);
  EXPECT_NEAR(r.running, expected, 1e-12 * std::abs(expected));
  EXPECT_NEAR(r.total, r.running + r.terminal, 1e-12 * std::abs(r.total));
}

TEST(TotalCost, AdditiveOverConcatenation) {
  std::mt19937 rng(5);
  const auto d = random_data(rng);
  const Grid g = make_grid(0.0, 2.0, 0.05);
  const Trajectory t = random_trajectory(rng, g);
  const std::ptrdiff_t s = 17;
  Trajectory left, right;
  left.grid = Grid{0.0, g.node(s), g.h, s};
  left.states = t.states.leftCols(s + 1);
  left.controls = t.controls.leftCols(s);
  right.grid = Grid{g.node(s), g.t1, g.h, g.K - s};
  right.states = t.states.rightCols(g.K - s + 1);
  right.controls = t.controls.rightCols(g.K - s);
  const double whole = total_cost(d, t, d.Q, d.q).total;
  const double parts = total_cost(d, left, d.Q, d.q).running +
                       total_cost(d, right, d.Q, d.q).total;
  EXPECT_NEAR(whole, parts, 1e-12 * std::max(1.0, std::abs(whole)));
}

TEST(L2Distance, ClosedForms) {
  const Grid g = make_grid(0.0, 3.0, 0.01);
  const MatrixXd a = MatrixXd::Constant(1, g.K, 2.0);
  EXPECT_EQ(l2_distance(a, a, g), 0.0);
  const MatrixXd b = MatrixXd::Constant(1, g.K, -0.5);
  EXPECT_NEAR(l2_distance(a, b, g), 2.5 * std::sqrt(3.0), 1e-12);
  EXPECT_THROW(l2_distance(a, MatrixXd::Zero(2, g.K), g), DimensionError);
}

TEST(L2Distance, ConvergesToPolynomialIntegral) {
  // ∫₀¹ (t² − t/2)² dt = 1/5 − 1/4 + 1/12 = 1/30, sampled at right endpoints.
  auto err = [](double h) {
    const Grid g = make_grid(0.0, 1.0, h);
    MatrixXd a(1, g.K);
    for (std::ptrdiff_t k = 1; k <= g.K; ++k) {
      const double t = g.node(k);
      a(0, k - 1) = t * t - 0.5 * t;
    }
    return std::abs(l2_distance(a, MatrixXd::Zero(1, g.K), g) -
                    std::sqrt(1.0 / 30.0));
  };
  const double ratio = err(0.01) / err(0.005);
  EXPECT_NEAR(ratio, 2.0, 0.2);
}

TEST(L2Distance, TriangleInequality) {
  std::mt19937 rng(3);
  const Grid g = make_grid(0.0, 1.0, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd a = testing::random_matrix(rng, 2, g.K + 1);
    const MatrixXd b = testing::random_matrix(rng, 2, g.K + 1);
    const MatrixXd c = testing::random_matrix(rng, 2, g.K + 1);
    EXPECT_LE(l2_distance(a, c, g),
              l2_distance(a, b, g) + l2_distance(b, c, g) + 1e-12);
  }
}

}  // namespace
}  // namespace lqrhc
