#include "lqrhc/lq_solver.hpp"

#include <algorithm>
#include <cmath>

namespace lqrhc {

void check_segment(const SegmentProblem& seg) {
  const auto& d = seg.data;
  const auto n = d.n();
  if (n == 0 || d.A.cols() != n || d.B.rows() != n || d.C.cols() != n ||
      d.f_star.size() != n || d.g_star.size() != n ||
      d.h_star.size() != d.m()) {
    throw DimensionError("lq_solver: inconsistent segment data");
  }
  if (seg.y_init.size() != n || seg.qterm.size() != n ||
      seg.Qterm.rows() != n || seg.Qterm.cols() != n) {
    throw DimensionError("lq_solver: initial state or terminal pair size");
  }
  if (!(d.alpha > 0.0)) {
    throw std::invalid_argument("lq_solver: ill-posed segment, alpha <= 0");
  }
  if (seg.grid.K <= 0 || !(seg.grid.h > 0.0)) {
    throw std::invalid_argument("lq_solver: segment grid is empty");
  }
  if ((seg.Qterm - seg.Qterm.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(1.0, seg.Qterm.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("lq_solver: Qterm is not symmetric");
  }
}

LqSweep backward_sweep(const ProblemData& data, const MatrixXd& Qterm,
                       const VectorXd& qterm, double h, std::ptrdiff_t K) {
  const MidpointStep step(data, h);
  LqSweep sweep;
  sweep.h = h;
  sweep.P.resize(K + 1);
  sweep.s.resize(K + 1);
  sweep.c.resize(K + 1);
  sweep.feedback.resize(K);
  sweep.feedforward.resize(K);
  sweep.P[K] = Qterm;
  sweep.s[K] = qterm;
  sweep.c[K] = 0.0;
  for (std::ptrdiff_t k = K; k >= 1; --k) {
    auto b = step.backward(sweep.P[k], sweep.s[k], sweep.c[k]);
    sweep.P[k - 1] = std::move(b.P);
    sweep.s[k - 1] = std::move(b.s);
    sweep.c[k - 1] = b.c;
    sweep.feedback[k - 1] = std::move(b.feedback);
    sweep.feedforward[k - 1] = std::move(b.feedforward);
  }
  return sweep;
}

Trajectory rollout(const MidpointStep& step, const LqSweep& sweep,
                   const VectorXd& y_init, const Grid& grid) {
  const auto K = sweep.steps();
  if (grid.K != K) throw DimensionError("rollout: grid does not match sweep");
  const auto n = y_init.size();
  const auto m = sweep.feedforward.empty() ? 0 : sweep.feedforward[0].size();
  Trajectory traj;
  traj.grid = grid;
  traj.states.resize(n, K + 1);
  traj.controls.resize(m, K);
  traj.costates.resize(n, K + 1);
  traj.states.col(0) = y_init;
  for (std::ptrdiff_t k = 1; k <= K; ++k) {
    const VectorXd y = traj.states.col(k - 1);
    const VectorXd u = -sweep.feedback[k - 1] * y - sweep.feedforward[k - 1];
    traj.controls.col(k - 1) = u;
    traj.states.col(k) = step.advance(y, u);
  }
  for (std::ptrdiff_t k = 0; k <= K; ++k) {
    traj.costates.col(k) = sweep.P[k] * traj.states.col(k) + sweep.s[k];
  }
  return traj;
}

double kkt_residual(const SegmentProblem& seg, const Trajectory& traj) {
  check_trajectory(traj);
  if (!traj.has_costates()) {
    throw std::invalid_argument("kkt_residual: trajectory has no costates");
  }
  const auto& d = seg.data;
  const double h = traj.grid.h;
  const auto K = traj.grid.K;
  const MatrixXd CtC = d.C.transpose() * d.C;
  double r = (traj.states.col(0) - seg.y_init).cwiseAbs().maxCoeff();
  for (std::ptrdiff_t k = 1; k <= K; ++k) {
    const VectorXd y0 = traj.states.col(k - 1), y1 = traj.states.col(k);
    const VectorXd p0 = traj.costates.col(k - 1), p1 = traj.costates.col(k);
    const VectorXd u = traj.controls.col(k - 1);
    const VectorXd ym = 0.5 * (y0 + y1), pm = 0.5 * (p0 + p1);
    const VectorXd state = (y1 - y0) / h - (d.A * ym + d.B * u + d.f_star);
    const VectorXd adjoint =
        -(p1 - p0) / h - d.A.transpose() * pm - CtC * ym - d.g_star;
    const VectorXd control = d.alpha * u + d.B.transpose() * pm + d.h_star;
    r = std::max({r, state.cwiseAbs().maxCoeff(),
                  adjoint.cwiseAbs().maxCoeff(),
                  control.cwiseAbs().maxCoeff()});
  }
  const VectorXd terminal =
      traj.costates.col(K) - seg.Qterm * traj.states.col(K) - seg.qterm;
  return std::max(r, terminal.cwiseAbs().maxCoeff());
}

LqSolution solve_lq(const SegmentProblem& seg) {
  check_segment(seg);
  const MidpointStep step(seg.data, seg.grid.h);
  const LqSweep sweep = backward_sweep(seg.data, seg.Qterm, seg.qterm,
                                       seg.grid.h, seg.grid.K);
  LqSolution sol;
  sol.traj = rollout(step, sweep, seg.y_init, seg.grid);
  sol.value = total_cost(seg.data, sol.traj, seg.Qterm, seg.qterm).total;
  sol.kkt_residual = kkt_residual(seg, sol.traj);
  return sol;
}

ValueGradient value_and_gradient(const SegmentProblem& seg) {
  const LqSolution sol = solve_lq(seg);
  return {sol.value, sol.traj.costates.col(0)};
}

Trajectory simulate_with_adjoint(const SegmentProblem& seg,
                                 const MatrixXd& controls) {
  const auto K = seg.grid.K;
  if (controls.cols() != K || controls.rows() != seg.data.m()) {
    throw DimensionError("simulate_with_adjoint: control shape");
  }
  const MidpointStep step(seg.data, seg.grid.h);
  const auto n = seg.data.n();
  Trajectory traj;
  traj.grid = seg.grid;
  traj.controls = controls;
  traj.states.resize(n, K + 1);
  traj.costates.resize(n, K + 1);
  traj.states.col(0) = seg.y_init;
  for (std::ptrdiff_t k = 1; k <= K; ++k) {
    traj.states.col(k) =
        step.advance(traj.states.col(k - 1), controls.col(k - 1));
  }
  traj.costates.col(K) = seg.Qterm * traj.states.col(K) + seg.qterm;
  for (std::ptrdiff_t k = K; k >= 1; --k) {
    const VectorXd ym = 0.5 * (traj.states.col(k - 1) + traj.states.col(k));
    traj.costates.col(k - 1) = step.adjoint(traj.costates.col(k), ym);
  }
  return traj;
}

MatrixXd reduced_gradient(const SegmentProblem& seg, const Trajectory& traj) {
  const auto& d = seg.data;
  const auto K = traj.grid.K;
  MatrixXd g(d.m(), K);
  for (std::ptrdiff_t k = 1; k <= K; ++k) {
    const VectorXd pm = 0.5 * (traj.costates.col(k - 1) + traj.costates.col(k));
    g.col(k - 1) = d.alpha * traj.controls.col(k - 1) + d.B.transpose() * pm +
                   d.h_star;
  }
  return g;
}

}  // namespace lqrhc
