#include "lqrhc/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace lqrhc {
namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = -1e-10;

std::string shape(const MatrixXd& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

void expect(bool cond, const std::string& what) {
  if (!cond) throw DimensionError("dimension mismatch: " + what);
}

// Rank test of a complex matrix via its singular values.
bool full_column_rank(const Eigen::MatrixXcd& M, Eigen::Index rank,
                      double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return rank == 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++r;
  }
  return r >= rank;
}

}  // namespace

void check_dimensions(const ProblemData& d) {
  const auto n = d.A.rows();
  expect(n > 0 && d.A.cols() == n, "A must be square, got " + shape(d.A));
  expect(d.B.rows() == n && d.B.cols() > 0,
         "B must have n rows, got " + shape(d.B));
  expect(d.C.cols() == n && d.C.rows() > 0,
         "C must have n columns, got " + shape(d.C));
  expect(d.f_star.size() == n, "f_star must have length n");
  expect(d.g_star.size() == n, "g_star must have length n");
  expect(d.h_star.size() == d.B.cols(), "h_star must have length m");
  expect(d.Q.rows() == n && d.Q.cols() == n,
         "Q must be n x n, got " + shape(d.Q));
  expect(d.q.size() == n, "q must have length n");
  expect(d.y0.size() == n, "y0 must have length n");
}

bool is_stabilizable(const MatrixXd& A, const MatrixXd& B, double rel_tol) {
  const auto n = A.rows();
  Eigen::EigenSolver<MatrixXd> es(A, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> mu = es.eigenvalues()(i);
    if (mu.real() < 0.0) continue;
    Eigen::MatrixXcd H(n, n + B.cols());
    H.leftCols(n) = mu * Eigen::MatrixXcd::Identity(n, n) -
                    A.cast<std::complex<double>>();
    H.rightCols(B.cols()) = B.cast<std::complex<double>>();
    // Row rank n of [μI − A, B] equals column rank n of its adjoint.
    if (!full_column_rank(H.adjoint(), n, rel_tol)) return false;
  }
  return true;
}

bool is_detectable(const MatrixXd& A, const MatrixXd& C, double rel_tol) {
  return is_stabilizable(A.transpose(), C.transpose(), rel_tol);
}

ValidationReport validate_problem(const ProblemData& d) {
  check_dimensions(d);
  ValidationReport report;
  if (!(d.alpha > 0.0)) report.violations.emplace_back("alpha > 0");
  if (!(d.T_bar > 0.0)) report.violations.emplace_back("T_bar > 0");

  const double asym = (d.Q - d.Q.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol) {
    report.violations.emplace_back("Q symmetric");
  } else {
    const MatrixXd sym = 0.5 * (d.Q + d.Q.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kPsdTol) {
      report.violations.emplace_back("Q positive semi-definite");
    }
  }
  if (!is_stabilizable(d.A, d.B)) report.violations.emplace_back("stabilizability");
  if (!is_detectable(d.A, d.C)) report.violations.emplace_back("detectability");
  return report;
}

std::optional<std::ptrdiff_t> steps_in(double span, double h) {
  if (!(h > 0.0) || span < 0.0) return std::nullopt;
  const double ratio = span / h;
  const double k = std::round(ratio);
  if (std::abs(span - k * h) > 1e-10 * std::max(1.0, std::abs(span))) {
    return std::nullopt;
  }
  return static_cast<std::ptrdiff_t>(k);
}

Grid make_grid(double t0, double t1, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("h must be positive");
  if (t1 < t0) throw std::invalid_argument("grid end precedes grid start");
  const auto K = steps_in(t1 - t0, h);
  if (!K) {
    std::ostringstream os;
    os.precision(17);
    os << "segment length " << (t1 - t0) << " is not a multiple of h = " << h;
    throw std::invalid_argument(os.str());
  }
  return Grid{t0, t1, h, *K};
}

void check_trajectory(const Trajectory& traj) {
  const auto K = traj.grid.K;
  expect(traj.states.cols() == K + 1, "states must have K+1 columns");
  expect(traj.controls.cols() == K, "controls must have K columns");
  expect(traj.costates.cols() == 0 || traj.costates.cols() == K + 1,
         "costates must be empty or have K+1 columns");
}

double running_cost(const ProblemData& d, const VectorXd& y,
                    const VectorXd& u) {
  expect(y.size() == d.n(), "state length");
  expect(u.size() == d.m(), "control length");
  return 0.5 * (d.C * y).squaredNorm() + d.g_star.dot(y) +
         0.5 * d.alpha * u.squaredNorm() + d.h_star.dot(u);
}

CostReport total_cost(const ProblemData& d, const Trajectory& traj,
                      const MatrixXd& Qterm, const VectorXd& qterm) {
  check_trajectory(traj);
  CostReport r;
  double sum = 0.0;
  for (Eigen::Index k = 1; k <= traj.grid.K; ++k) {
    const VectorXd mid = 0.5 * (traj.states.col(k - 1) + traj.states.col(k));
    sum += running_cost(d, mid, traj.controls.col(k - 1));
  }
  r.running = traj.grid.h * sum;
  const VectorXd yK = traj.final_state();
  r.terminal = 0.5 * yK.dot(Qterm * yK) + qterm.dot(yK);
  r.total = r.running + r.terminal;
  return r;
}

double l2_distance(const MatrixXd& a, const MatrixXd& b, const Grid& grid) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("l2_distance: shape mismatch " + shape(a) + " vs " +
                         shape(b));
  }
  const auto K = grid.K;
  if (a.cols() != K && a.cols() != K + 1) {
    throw DimensionError("l2_distance: sample count does not match grid");
  }
  const auto diff = (a.rightCols(K) - b.rightCols(K));
  return std::sqrt(grid.h * diff.squaredNorm());
}

double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(0);
}

}  // namespace lqrhc
