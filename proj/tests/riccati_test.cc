#include "lqrhc/riccati.hpp"

#include <random>
#include <thread>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "test_common.hpp"

namespace lqrhc {
namespace {

using testing::scalar_data;
using testing::default_data;

void expect_care_invariants(const ProblemData& d, const CareSolution& s) {
  const double nf = s.Pi.norm();
  EXPECT_LE(care_residual(d, s.Pi), 1e-8 * (1.0 + nf * nf));
  EXPECT_LE((s.Pi - s.Pi.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(s.Pi);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  EXPECT_LE(s.A_pi.eigenvalues().real().maxCoeff(), -s.lambda + 1e-9);
  EXPECT_GT(s.lambda, 0.0);
}

TEST(SolveCare, ScalarIntegrator) {
  const auto d = scalar_data(0.0, 1.0, 1.0, 1.0);
  const auto s = solve_care(d);
  EXPECT_NEAR(s.Pi(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(s.A_pi(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(s.lambda, 1.0, 1e-12);
  EXPECT_NEAR(s.gain(0, 0), 1.0, 1e-12);
  expect_care_invariants(d, s);
}

TEST(SolveCare, LyapunovCase) {
  const auto s = solve_care(scalar_data(-1.0, 0.0, 1.0, 1.0));
  EXPECT_NEAR(s.Pi(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(s.lambda, 1.0, 1e-12);
  const auto s2 = solve_care(scalar_data(-2.0, 0.0, 1.0, 1.0));
  EXPECT_NEAR(s2.Pi(0, 0), 0.25, 1e-12);
  EXPECT_NEAR(decay_rate(s2), 2.0, 1e-12);
}

TEST(SolveCare, DefaultExample) {
  const auto d = default_data();
  const auto s = solve_care(d);
  EXPECT_NEAR(s.lambda, 0.36, 0.01);
  EXPECT_LE(s.residual, 1e-10);
  expect_care_invariants(d, s);
}

TEST(SolveCare, ImaginaryAxisHamiltonianThrows) {
  // Uncontrollable and unobserved mode at zero.
  EXPECT_THROW(solve_care(scalar_data(0.0, 0.0, 0.0, 1.0)), SolverError);
}

TEST(SolveCare, RandomInstances) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = testing::random_data(rng, 3, 2);
    const auto s = solve_care(d);
    expect_care_invariants(d, s);
  }
}

TEST(DecayRate, RejectsUnstable) {
  EXPECT_THROW(decay_rate(MatrixXd::Identity(2, 2)), SolverError);
}

TEST(DecayRate, MatchesMatrixExponentialDecay) {
  const auto d = default_data();
  const auto s = solve_care(d);
  std::mt19937 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const VectorXd y0 = testing::random_matrix(rng, 2, 1);
    std::vector<double> t, v;
    for (double tt = 1.0 / s.lambda; tt <= 10.0 / s.lambda; tt += 0.1) {
      t.push_back(tt);
      v.push_back((MatrixXd(s.A_pi * tt).exp() * y0).norm());
    }
    EXPECT_NEAR(-testing::log_slope(t, v), s.lambda, 0.05 * s.lambda);
  }
}

TEST(SolveLyapunov, Residual) {
  std::mt19937 rng(8);
  const MatrixXd A = testing::random_matrix(rng, 3, 3) -
                     4.0 * MatrixXd::Identity(3, 3);
  const MatrixXd W = testing::random_psd(rng, 3);
  const MatrixXd X = solve_lyapunov(A, W);
  EXPECT_LE((A.transpose() * X + X * A + W).norm(), 1e-10);
}

TEST(RiccatiFlow, FixedPointAtCareSolution) {
  const auto d = default_data();
  const auto s = solve_care(d);
  const auto flow = riccati_flow(d, s.Pi, 10.0, 5e-3);
  for (const auto& P : flow.P_seq) {
    EXPECT_LE((P - s.Pi).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(RiccatiFlow, EmptyHorizon) {
  const auto d = default_data();
  std::mt19937 rng(1);
  const MatrixXd Q = testing::random_psd(rng, 2);
  const auto flow = riccati_flow(d, Q, 0.0, 5e-3);
  ASSERT_EQ(flow.steps(), 0);
  EXPECT_EQ(flow.P_seq[0], Q);
  EXPECT_EQ(flow.G_seq[0], MatrixXd::Identity(2, 2));
}

TEST(RiccatiFlow, NonIntegerHorizonThrows) {
  EXPECT_THROW(riccati_flow(default_data(), MatrixXd::Zero(2, 2), 1.0, 0.3),
               std::invalid_argument);
}

TEST(RiccatiFlow, DecayRates) {
  const auto d = default_data();
  const auto s = solve_care(d);
  const double h = 5e-3;
  const auto flow = riccati_flow(d, MatrixXd::Zero(2, 2), 10.0, h);
  std::vector<double> t, pi_gap, g_norm;
  for (std::ptrdiff_t k = 400; k <= 2000; k += 10) {
    t.push_back(k * h);
    pi_gap.push_back(spectral_norm(flow.P_seq[k] - s.Pi));
    g_norm.push_back(spectral_norm(flow.G_seq[k]));
  }
  EXPECT_GE(-testing::log_slope(t, pi_gap), 1.8 * s.lambda);
  EXPECT_GE(-testing::log_slope(t, g_norm), 0.9 * s.lambda);
}

TEST(RiccatiFlow, SymmetricPsdAndMonotoneEnvelope) {
  const auto d = default_data();
  const auto s = solve_care(d);
  std::mt19937 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const MatrixXd Q = testing::random_psd(rng, 2);
    const auto flow = riccati_flow(d, Q, 15.0, 5e-3);
    const auto first = static_cast<std::ptrdiff_t>(std::ceil(1.0 / s.lambda / 5e-3));
    double prev = spectral_norm(flow.P_seq[first] - s.Pi);
    for (std::ptrdiff_t k = 0; k <= flow.steps(); ++k) {
      const MatrixXd& P = flow.P_seq[k];
      ASSERT_LE((P - P.transpose()).cwiseAbs().maxCoeff(), 1e-9);
      const Eigen::SelfAdjointEigenSolver<MatrixXd> es(P);
      ASSERT_GE(es.eigenvalues().minCoeff(), -1e-10);
      if (k > first) {
        const double gap = spectral_norm(P - s.Pi);
        ASSERT_LE(gap, 1.1 * prev + 1e-14) << "k = " << k;
        prev = gap;
      }
    }
  }
}

TEST(RiccatiFlow, SecondOrderInStep) {
  // Error of P_seq[K] at T = 2 against a sixteenth-step reference.
  const auto d = default_data();
  const double T = 2.0, h = 0.05;
  auto end = [&](double step) {
    return riccati_flow(d, MatrixXd::Zero(2, 2), T, step).P_seq.back();
  };
  const MatrixXd ref = end(h / 16);
  const double e1 = (end(h) - ref).norm();
  const double e2 = (end(h / 2) - ref).norm();
  EXPECT_NEAR(e1 / e2, 4.0, 1.0);
}

TEST(FlowCache, ReusesEntriesAcrossThreads) {
  FlowCache cache(default_data());
  const MatrixXd Q = MatrixXd::Zero(2, 2);
  const auto first = cache.get(Q, 3.0, 5e-3);
  std::vector<std::shared_ptr<const RiccatiFlow>> got(8);
  std::vector<std::thread> workers;
  for (int i = 0; i < 8; ++i) {
    workers.emplace_back([&, i] { got[i] = cache.get(Q, 3.0, 5e-3); });
  }
  for (auto& w : workers) w.join();
  for (const auto& g : got) EXPECT_EQ(g.get(), first.get());
  EXPECT_EQ(cache.size(), 1u);
  cache.get(Q, 2.0, 5e-3);
  cache.get(MatrixXd::Identity(2, 2), 3.0, 5e-3);
  EXPECT_EQ(cache.size(), 3u);
}

}  // namespace
}  // namespace lqrhc
