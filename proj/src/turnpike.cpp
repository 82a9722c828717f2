#include "lqrhc/turnpike.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lqrhc {
namespace {

constexpr double kDegenerate = 1e-12;
constexpr std::ptrdiff_t kBoundaryNodes = 5;

struct LineFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double rms = std::numeric_limits<double>::quiet_NaN();
};

// Ordinary least squares of log(dev) against t over [first, last).
LineFit fit_log_linear(const std::vector<double>& t,
                       const std::vector<double>& dev, std::ptrdiff_t first,
                       std::ptrdiff_t last) {
  std::vector<double> xs, ys;
  for (auto k = first; k < last; ++k) {
    if (dev[k] > 0.0) {
      xs.push_back(t[k]);
      ys.push_back(std::log(dev[k]));
    }
  }
  LineFit fit;
  if (xs.size() < 2) return fit;
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (my + fit.slope * (xs[i] - mx));
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

}  // namespace

SteadyState solve_static(const ProblemData& d, const CareSolution& care) {
  check_dimensions(d);
  const double ia = 1.0 / d.alpha;
  const Eigen::FullPivLU<MatrixXd> lu(care.A_pi);
  if (!lu.isInvertible()) {
    throw SolverError("turnpike: A_pi is numerically singular");
  }
  const VectorXd w = care.Pi * d.f_star - ia * care.Pi * d.B * d.h_star +
                     d.g_star;
  const VectorXd r = -care.A_pi.transpose().fullPivLu().solve(w);

  SteadyState s;
  s.y_star = lu.solve(ia * d.B * d.h_star - d.f_star +
                      ia * d.B * (d.B.transpose() * r));
  s.p_star = care.Pi * s.y_star + r;
  s.u_star = -ia * (d.h_star + d.B.transpose() * s.p_star);
  s.v_star = running_cost(d, s.y_star, s.u_star);
  s.q_tilde = d.q - s.p_star + d.Q * s.y_star;
  s.kkt_residual = static_kkt_residual(d, s);
  return s;
}

double static_kkt_residual(const ProblemData& d, const SteadyState& s) {
  const VectorXd r1 = d.A * s.y_star + d.B * s.u_star + d.f_star;
  const VectorXd r2 = -d.A.transpose() * s.p_star -
                      d.C.transpose() * (d.C * s.y_star) - d.g_star;
  const VectorXd r3 = d.alpha * s.u_star + d.B.transpose() * s.p_star + d.h_star;
  return std::max({r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff(),
                   r3.cwiseAbs().maxCoeff()});
}

TurnpikeReport turnpike_check(const Trajectory& traj, const SteadyState& steady,
                              double lambda) {
  check_trajectory(traj);
  if (!traj.has_costates()) {
    throw std::invalid_argument("turnpike_check: trajectory has no costates");
  }
  const auto K = traj.grid.K;
  const double T_bar = traj.grid.length();
  const double y0_dev = (traj.states.col(0) - steady.y_star).norm();
  const double q_dev = steady.q_tilde.norm();

  TurnpikeReport rep;
  rep.times.resize(K + 1);
  rep.deviation.resize(K + 1);
  rep.envelope.resize(K + 1);
  double max_dev = 0.0;
  for (std::ptrdiff_t k = 0; k <= K; ++k) {
    const double t = traj.grid.node(k) - traj.grid.t0;
    rep.times[k] = t;
    rep.deviation[k] =
        std::max((traj.states.col(k) - steady.y_star).norm(),
                 (traj.costates.col(k) - steady.p_star).norm());
    rep.envelope[k] = std::exp(-lambda * t) * y0_dev +
                      std::exp(-lambda * (T_bar - t)) * q_dev;
    max_dev = std::max(max_dev, rep.deviation[k]);
  }

  for (std::ptrdiff_t k = K / 3; k <= (2 * K) / 3; ++k) {
    rep.max_mid_deviation = std::max(rep.max_mid_deviation, rep.deviation[k]);
  }

  if (max_dev < kDegenerate) {
    rep.degenerate = true;
    rep.left_rate = rep.right_rate = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  for (std::ptrdiff_t k = 0; k <= K; ++k) {
    if (rep.envelope[k] >= kDegenerate) {
      rep.fitted_M = std::max(rep.fitted_M, rep.deviation[k] / rep.envelope[k]);
    }
  }
  const LineFit left = fit_log_linear(rep.times, rep.deviation, kBoundaryNodes,
                                      K / 4 + 1);
  const LineFit right = fit_log_linear(rep.times, rep.deviation,
                                       K - K / 4, K + 1 - kBoundaryNodes);
  rep.left_rate = -left.slope;
  rep.left_fit_residual = left.rms;
  rep.right_rate = right.slope;
  rep.right_fit_residual = right.rms;
  return rep;
}

LqSolution solve_full_problem(const ProblemData& data, double h) {
  SegmentProblem seg{data, data.y0, data.Q, data.q, make_grid(0.0, data.T_bar, h)};
  return solve_lq(seg);
}

double value_relation_check(const ProblemData& d, const SteadyState& s,
                            double h) {
  const LqSolution full = solve_full_problem(d, h);
  const auto K = full.traj.grid.K;
  ProblemData hom = d;
  hom.f_star.setZero();
  hom.g_star.setZero();
  hom.h_star.setZero();

  double worst = 0.0;
  for (const std::ptrdiff_t k : {std::ptrdiff_t{0}, K / 2}) {
    const double theta = full.traj.grid.node(k);
    const Grid tail{theta, d.T_bar, h, K - k};
    const VectorXd y_theta = full.traj.states.col(k);
    const double lhs = solve_lq({d, y_theta, d.Q, d.q, tail}).value;
    const double v0 =
        solve_lq({hom, y_theta - s.y_star, d.Q, s.q_tilde, tail}).value;
    const double rhs = v0 + s.p_star.dot(y_theta) +
                       static_cast<double>(K - k) * h * s.v_star +
                       0.5 * s.y_star.dot(d.Q * s.y_star) +
                       (d.q - s.p_star).dot(s.y_star);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

Trajectory overtaking_solution(const ProblemData& d, const SteadyState& s,
                               const CareSolution& care, const Grid& grid) {
  const auto n = d.n();
  const auto K = grid.K;
  const double h = grid.h;
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd step =
      (I - 0.5 * h * care.A_pi).partialPivLu().solve(I + 0.5 * h * care.A_pi);
  const MatrixXd gain = d.B.transpose() * care.Pi / d.alpha;

  Trajectory traj;
  traj.grid = grid;
  traj.states.resize(n, K + 1);
  traj.controls.resize(d.m(), K);
  traj.costates.resize(n, K + 1);
  VectorXd dev = d.y0 - s.y_star;
  traj.states.col(0) = s.y_star + dev;
  traj.costates.col(0) = s.p_star + care.Pi * dev;
  for (std::ptrdiff_t k = 1; k <= K; ++k) {
    const VectorXd next = step * dev;
    traj.controls.col(k - 1) = s.u_star - gain * (0.5 * (dev + next));
    dev = next;
    traj.states.col(k) = s.y_star + dev;
    traj.costates.col(k) = s.p_star + care.Pi * dev;
  }
  return traj;
}

AsymptoticCost asymptotic_cost_check(const ProblemData& d, const SteadyState& s,
                                     const CareSolution& care, double T,
                                     double h) {
  const Grid grid = make_grid(0.0, T, h);
  const Trajectory traj = overtaking_solution(d, s, care, grid);
  const auto n = d.n();
  AsymptoticCost out;
  out.running_cost =
      total_cost(d, traj, MatrixXd::Zero(n, n), VectorXd::Zero(n)).running;
  const VectorXd dev0 = d.y0 - s.y_star;
  const VectorXd devT = traj.final_state() - s.y_star;
  out.formula = T * s.v_star + 0.5 * dev0.dot(care.Pi * dev0) +
                s.p_star.dot(dev0) - s.p_star.dot(devT) -
                0.5 * devT.dot(care.Pi * devT);
  out.mismatch = std::abs(out.running_cost - out.formula);
  return out;
}

}  // namespace lqrhc
