#pragma once

#include <vector>

#include "lqrhc/lq_solver.hpp"
#include "lqrhc/model.hpp"
#include "lqrhc/riccati.hpp"

namespace lqrhc {

/// Solution (y⋆, u⋆) of the static problem min ℓ(y,u) s.t. Ay + Bu + f⋆ = 0,
/// its multiplier p⋆, the value v⋆ = ℓ(y⋆,u⋆), and the terminal mismatch
/// q̃ = q − p⋆ + Q y⋆.
struct SteadyState {
  VectorXd y_star;
  VectorXd u_star;
  VectorXd p_star;
  double v_star = 0.0;
  VectorXd q_tilde;
  double kkt_residual = 0.0;
};

/// Explicit construction through the decoupling r⋆ = p⋆ − Π y⋆:
///   r⋆ = −A_π⁻ᵀ (Π f⋆ − (1/α) Π B h⋆ + g⋆),
///   y⋆ = A_π⁻¹ ((1/α) B h⋆ − f⋆ + (1/α) B Bᵀ r⋆),
///   p⋆ = Π y⋆ + r⋆,  u⋆ = −(1/α)(h⋆ + Bᵀ p⋆).
SteadyState solve_static(const ProblemData& data, const CareSolution& care);

/// Max-norm of the three static optimality relations.
double static_kkt_residual(const ProblemData& data, const SteadyState& s);

struct TurnpikeReport {
  double fitted_M = 0.0;
  double left_rate = 0.0;
  double right_rate = 0.0;
  double left_fit_residual = 0.0;   // RMS of the log-linear fit
  double right_fit_residual = 0.0;
  double max_mid_deviation = 0.0;
  bool degenerate = false;  // deviation below 1e-12 everywhere; no fit

  // Per node: time, max(‖y−y⋆‖, ‖p−p⋆‖), and the envelope
  // e^{−λt}‖y0−y⋆‖ + e^{−λ(T̄−t)}‖q̃‖.
  std::vector<double> times;
  std::vector<double> deviation;
  std::vector<double> envelope;
};

/// Envelope constant and boundary-layer decay rates of an optimal
/// trajectory (with costates) on [t0, t0 + T̄].
TurnpikeReport turnpike_check(const Trajectory& traj, const SteadyState& steady,
                              double lambda);

/// Optimal solution of the full problem on [0, T̄] on a grid of step h.
LqSolution solve_full_problem(const ProblemData& data, double h);

/// Largest |LHS − RHS| of the value-function shift identity
///   V(θ, y_θ) = V⁰_{T̄−θ,Q,q̃}(y_θ − y⋆) + ⟨p⋆,y_θ⟩ + (T̄−θ) v⋆
///               + ½⟨y⋆,Q y⋆⟩ + ⟨q − p⋆, y⋆⟩
/// at θ = 0 and at the node nearest T̄/2, along the optimal trajectory.
double value_relation_check(const ProblemData& data, const SteadyState& steady,
                            double h);

/// (y⋆,u⋆,p⋆) + (ỹ, ũ, Π ỹ) with ỹ advanced by the midpoint rule on
/// dỹ/dt = A_π ỹ from ỹ(t0) = y0 − y⋆, and ũ = −(1/α) Bᵀ Π ỹ on each
/// interval average.
Trajectory overtaking_solution(const ProblemData& data,
                               const SteadyState& steady,
                               const CareSolution& care, const Grid& grid);

struct AsymptoticCost {
  double running_cost = 0.0;  // J(ū, ȳ, T)
  double formula = 0.0;
  double mismatch = 0.0;
};

/// Compares the running cost of the overtaking solution on [0, T] with
///   T v⋆ + ½⟨ỹ0, Π ỹ0⟩ + ⟨p⋆, ỹ0⟩ − ⟨p⋆, ỹ(T)⟩ − ½⟨ỹ(T), Π ỹ(T)⟩,
/// ỹ = ȳ − y⋆.
AsymptoticCost asymptotic_cost_check(const ProblemData& data,
                                     const SteadyState& steady,
                                     const CareSolution& care, double T,
                                     double h);

}  // namespace lqrhc
