#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lqrhc/lq_solver.hpp"
#include "lqrhc/riccati.hpp"
#include "lqrhc/turnpike.hpp"

namespace lqrhc {

enum class TerminalMode { Zero, Constant, Exact };

const char* to_string(TerminalMode mode);
TerminalMode terminal_mode_from_string(const std::string& name);

/// Terminal cost of the receding-horizon sub-problems,
///
///   φ(t, y) = ½⟨y − y⋆, Π̃(T̄−t)(y − y⋆)⟩ + ⟨G̃(T̄−t) q̃, y⟩ + ⟨p̃, y⟩.
///
/// Zero: Π̃ = G̃ = 0. Constant: Π̃ and G̃ are the given constant matrices (the
/// time-independent infinite-horizon cost uses G̃ = 0). Exact: Π̃(s) and G̃(s)
/// are the finite-horizon operators Π(s, Q), G(s, Q) and p̃ = p⋆, which makes
/// φ the value function up to a constant.
struct TerminalCostSpec {
  TerminalMode mode = TerminalMode::Zero;
  MatrixXd pi_tilde;
  MatrixXd g_tilde;
  VectorXd p_tilde;

  static TerminalCostSpec zero(VectorXd p_tilde);
  static TerminalCostSpec constant(MatrixXd pi_tilde, VectorXd p_tilde,
                                   MatrixXd g_tilde = {});
  static TerminalCostSpec exact();
};

class TerminalCost {
 public:
  /// `flow` must be the flow of (data.Q, T̄) for Exact mode; throws
  /// std::invalid_argument if it is missing or the spec is malformed.
  TerminalCost(TerminalCostSpec spec, const SteadyState& steady, double T_bar,
               std::shared_ptr<const RiccatiFlow> flow = nullptr);

  /// φ(t, ·) as ½ yᵀQ y + qᵀy + c.
  struct Quadratic {
    MatrixXd Q;
    VectorXd q;
    double c = 0.0;
  };
  Quadratic at(double t) const;

  double value(double t, const VectorXd& y) const;
  VectorXd gradient(double t, const VectorXd& y) const;

  MatrixXd pi_tilde(double time_to_go) const;
  MatrixXd g_tilde(double time_to_go) const;
  const VectorXd& p_tilde() const { return p_tilde_; }
  TerminalMode mode() const { return spec_.mode; }

 private:
  std::ptrdiff_t flow_index(double time_to_go) const;

  TerminalCostSpec spec_;
  VectorXd y_star_;
  VectorXd q_tilde_;
  VectorXd p_tilde_;
  double T_bar_;
  std::shared_ptr<const RiccatiFlow> flow_;
};

struct RhcConfig {
  double tau = 1.0;
  double T = 1.0;
  std::ptrdiff_t N = 0;
  TerminalCostSpec terminal;
  double h = 5e-3;
};

/// N = ⌊(T̄ − 2T)/τ⌋ clamped at zero.
std::ptrdiff_t default_iterations(double T_bar, double tau, double T);

/// Immutable inputs shared by every receding-horizon run on one problem: the
/// Riccati and steady-state data, the one-shot reference solution on
/// [0, T̄], and a cache of Riccati flows. Safe to share between threads.
class RhcProblem {
 public:
  RhcProblem(ProblemData data, double h);
  RhcProblem(ProblemData data, CareSolution care, SteadyState steady,
             double h);

  const ProblemData& data() const { return data_; }
  const CareSolution& care() const { return care_; }
  const SteadyState& steady() const { return steady_; }
  double h() const { return h_; }
  const Grid& grid() const { return grid_; }
  const LqSolution& reference() const { return reference_; }

  /// Flow of (Q, T̄): Π(s, Q) and G(s, Q) for s on the grid.
  std::shared_ptr<const RiccatiFlow> exact_flow() const { return exact_flow_; }
  FlowCache& flows() const { return *flows_; }

  TerminalCost terminal_cost(const TerminalCostSpec& spec) const;

 private:
  ProblemData data_;
  CareSolution care_;
  SteadyState steady_;
  double h_;
  Grid grid_;
  LqSolution reference_;
  std::shared_ptr<FlowCache> flows_;
  std::shared_ptr<const RiccatiFlow> exact_flow_;
};

struct RhcIteration {
  std::ptrdiff_t n = 0;
  double handoff_state_error = 0.0;  // b_n = ‖y_RH(nτ) − ȳ(nτ)‖
  double segment_error = 0.0;        // a_n = ‖u_RH − ū‖ on the kept window
};

struct RhcResult {
  Trajectory traj;
  double error_u = 0.0;
  double error_y = 0.0;
  double cost_gap = 0.0;
  std::vector<RhcIteration> per_iter;
};

/// Throws std::invalid_argument unless τ, T are positive multiples of h with
/// τ ≤ T, and (finite horizon) N τ + T ≤ T̄.
void check_config(const RhcConfig& cfg, double T_bar, bool finite_horizon);

/// Finite-horizon receding-horizon method: N sub-problems on (nτ, nτ + T)
/// with terminal cost φ, keeping (nτ, (n+1)τ), then one solve on (Nτ, T̄)
/// with the true terminal pair (Q, q). Errors are measured against the
/// one-shot solution on [0, T̄].
RhcResult run_rhc_finite(const RhcProblem& problem, const RhcConfig& cfg);

/// Infinite-horizon variant: N sub-problems with the time-independent cost
/// ½⟨y − y⋆, Π̂(y − y⋆)⟩ + ⟨p̂, y⟩ (Zero or Constant mode with G̃ = 0). The
/// result covers (0, Nτ) and is compared with the overtaking solution there;
/// cost_gap uses the terminal pair (Π, p⋆ − Π y⋆) for which the overtaking
/// solution is optimal on (0, Nτ).
RhcResult run_rhc_infinite(const RhcProblem& problem, const RhcConfig& cfg,
                           double T_end);

/// ρ(τ, T) = ln(error_u) + 2λT − λτ. Throws std::domain_error if
/// error_u <= 0.
double rho_statistic(double error_u, double tau, double T, double lambda);

struct BoundTerms {
  double pi_gap = 0.0;  // sup_s ‖Π̃(s) − Π(s,Q)‖
  double g_gap = 0.0;   // sup_s e^{λs} ‖G̃(s) − G(s,Q)‖
  double K1 = 0.0;
  double K2 = 0.0;
  double p_gap = 0.0;   // ‖p̃ − p⋆‖
  double bound = 0.0;
};

/// e^{−λ(T−τ)} (e^{−λT} K1 + e^{−λ(T̄−(Nτ+T))} K2 + N ‖p̃ − p⋆‖) with unit
/// constant. The suprema are maxima over the flow samples s ∈ {h, …, T̄}.
BoundTerms predicted_bound(const RhcProblem& problem, const RhcConfig& cfg);

struct SweepRow {
  double tau = 0.0;
  double T = 0.0;
  std::ptrdiff_t N = 0;
  double error_u = 0.0;
  double error_y = 0.0;
  double cost_gap = 0.0;
  double rho = 0.0;
  double predicted_bound = 0.0;
  std::string status;
};

struct SweepOptions {
  std::vector<double> tau_list;
  std::vector<double> T_list;
  TerminalCostSpec terminal;
  std::optional<std::ptrdiff_t> N;  // default: ⌊(T̄ − 2T)/τ⌋
  unsigned jobs = 1;
};

/// One row per cell with τ ≤ T, τ-major then T, independent of `jobs`.
/// Cells that cannot run (grid misalignment, solver failure) keep their row
/// with the reason in `status`.
std::vector<SweepRow> sweep(const RhcProblem& problem,
                            const SweepOptions& options);

}  // namespace lqrhc
