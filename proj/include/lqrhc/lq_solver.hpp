#pragma once

#include <vector>

#include "lqrhc/model.hpp"
#include "lqrhc/riccati.hpp"

namespace lqrhc {

/// Finite-horizon problem on one grid segment: dynamics, running cost and
/// the constant right-hand sides (f⋆, g⋆, h⋆) come from `data`; the initial
/// state and the terminal pair (Qterm, qterm) are per segment. The fields
/// data.y0, data.Q, data.q and data.T_bar are ignored.
struct SegmentProblem {
  ProblemData data;
  VectorXd y_init;
  MatrixXd Qterm;
  VectorXd qterm;
  Grid grid;
};

/// Throws DimensionError / std::invalid_argument on an ill-posed segment.
void check_segment(const SegmentProblem& seg);

/// Backward affine Riccati sweep: on node k the value-to-go is
/// ½ yᵀP[k]y + s[k]ᵀy + c[k], and the control on interval k+1 is
/// u = −feedback[k]·y_k − feedforward[k]. The sweep does not depend on the
/// initial state, so one sweep serves every rollout of the same segment.
struct LqSweep {
  double h = 0.0;
  std::vector<MatrixXd> P;
  std::vector<VectorXd> s;
  std::vector<double> c;
  std::vector<MatrixXd> feedback;
  std::vector<VectorXd> feedforward;

  std::ptrdiff_t steps() const {
    return static_cast<std::ptrdiff_t>(feedback.size());
  }
};

LqSweep backward_sweep(const ProblemData& data, const MatrixXd& Qterm,
                       const VectorXd& qterm, double h, std::ptrdiff_t K);

/// Forward pass of a sweep from y_init; costates are p_k = P[k] y_k + s[k].
Trajectory rollout(const MidpointStep& step, const LqSweep& sweep,
                   const VectorXd& y_init, const Grid& grid);

struct LqSolution {
  Trajectory traj;
  double value = 0.0;
  double kkt_residual = 0.0;
};

/// Max-norm of the five discrete optimality relations (initial condition,
/// state equation, adjoint equation, control relation with the interval
/// average of the costate, terminal condition) at a trajectory with costates.
double kkt_residual(const SegmentProblem& seg, const Trajectory& traj);

/// Exact solution of the discrete problem on the segment.
LqSolution solve_lq(const SegmentProblem& seg);

struct ValueGradient {
  double value = 0.0;
  VectorXd gradient;  // derivative of the optimal value w.r.t. y_init
};

ValueGradient value_and_gradient(const SegmentProblem& seg);

/// Open-loop control to state/costate: forward rollout of a given control
/// and the adjoint backward pass. Used by the reduced-gradient solver.
Trajectory simulate_with_adjoint(const SegmentProblem& seg,
                                 const MatrixXd& controls);

/// L² gradient of the reduced cost u ↦ J(u): αu_k + h⋆ + Bᵀ p̄_k per interval.
MatrixXd reduced_gradient(const SegmentProblem& seg, const Trajectory& traj);

struct ReducedGradientOptions {
  double tol = 1e-10;
  int memory = 10;
  long max_iterations = -1;  // default 10·K·m
};

/// Limited-memory BFGS on the reduced cost, exact line search (the cost is
/// quadratic), stopped when the L² norm of the reduced gradient is below
/// tol. Throws SolverError when the iteration cap is reached.
LqSolution reduced_gradient_solve(const SegmentProblem& seg,
                                  const ReducedGradientOptions& options = {});

}  // namespace lqrhc
