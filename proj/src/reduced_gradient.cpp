// Reduced-gradient solver: L-BFGS on u ↦ J(u) in the discrete L² inner
// product, with the gradient obtained from one adjoint back-substitution.

#include <cmath>
#include <deque>
#include <sstream>

#include "lqrhc/lq_solver.hpp"

namespace lqrhc {
namespace {

struct CurvaturePair {
  MatrixXd s;
  MatrixXd y;
  double rho;
};

double inner(const MatrixXd& a, const MatrixXd& b, double h) {
  return h * (a.array() * b.array()).sum();
}

// Same segment with every affine term removed: its reduced gradient at d is
// the Hessian applied to d.
SegmentProblem homogeneous(const SegmentProblem& seg) {
  SegmentProblem out = seg;
  out.data.f_star.setZero();
  out.data.g_star.setZero();
  out.data.h_star.setZero();
  out.y_init.setZero();
  out.qterm.setZero();
  return out;
}

MatrixXd two_loop(const MatrixXd& g, const std::deque<CurvaturePair>& pairs,
                  double h) {
  MatrixXd q = g;
  std::vector<double> a(pairs.size());
  for (std::size_t i = pairs.size(); i-- > 0;) {
    a[i] = pairs[i].rho * inner(pairs[i].s, q, h);
    q -= a[i] * pairs[i].y;
  }
  if (!pairs.empty()) {
    const auto& last = pairs.back();
    q *= inner(last.s, last.y, h) / inner(last.y, last.y, h);
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double b = pairs[i].rho * inner(pairs[i].y, q, h);
    q += (a[i] - b) * pairs[i].s;
  }
  return q;
}

}  // namespace

LqSolution reduced_gradient_solve(const SegmentProblem& seg,
                                  const ReducedGradientOptions& options) {
  check_segment(seg);
  if (!(options.tol > 0.0)) {
    throw std::invalid_argument("reduced_gradient_solve: tol must be positive");
  }
  const double h = seg.grid.h;
  const auto K = seg.grid.K;
  const auto m = seg.data.m();
  const long cap = options.max_iterations > 0
                       ? options.max_iterations
                       : 10L * static_cast<long>(K) * static_cast<long>(m);
  const SegmentProblem hom = homogeneous(seg);

  MatrixXd u = MatrixXd::Zero(m, K);
  Trajectory traj = simulate_with_adjoint(seg, u);
  MatrixXd g = reduced_gradient(seg, traj);
  double gnorm = std::sqrt(inner(g, g, h));
  std::deque<CurvaturePair> pairs;

  long it = 0;
  while (gnorm > options.tol) {
    if (it++ >= cap) {
      std::ostringstream os;
      os << "reduced_gradient_solve: no convergence after " << cap
         << " iterations (gradient norm " << gnorm << ")";
      throw SolverError(os.str());
    }
    MatrixXd d = -two_loop(g, pairs, h);
    double slope = inner(g, d, h);
    if (!(slope < 0.0)) {
      pairs.clear();
      d = -g;
      slope = -gnorm * gnorm;
    }
    const MatrixXd Hd = reduced_gradient(hom, simulate_with_adjoint(hom, d));
    const double curvature = inner(d, Hd, h);
    if (!(curvature > 0.0)) {
      throw SolverError("reduced_gradient_solve: nonpositive curvature");
    }
    const double t = -slope / curvature;
    u += t * d;
    traj = simulate_with_adjoint(seg, u);
    MatrixXd g_next = reduced_gradient(seg, traj);

    CurvaturePair pair{t * d, t * Hd, 0.0};
    const double sy = inner(pair.s, pair.y, h);
    if (sy > 0.0) {
      pair.rho = 1.0 / sy;
      pairs.push_back(std::move(pair));
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }
    g = std::move(g_next);
    gnorm = std::sqrt(inner(g, g, h));
  }

  LqSolution sol;
  sol.traj = std::move(traj);
  sol.value = total_cost(seg.data, sol.traj, seg.Qterm, seg.qterm).total;
  sol.kkt_residual = kkt_residual(seg, sol.traj);
  return sol;
}

}  // namespace lqrhc
