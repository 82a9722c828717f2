#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lqrhc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Thrown when matrix and vector sizes of a problem do not agree. Kept
/// distinct from invariant failures, which are reported, not thrown.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown by solvers when a numerical postcondition cannot be met.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Data of the linear-quadratic problem
///
///   min  ∫₀^T̄ ℓ(y,u) dt + ½⟨y(T̄), Q y(T̄)⟩ + ⟨q, y(T̄)⟩
///   s.t. ẏ = A y + B u + f⋆,  y(0) = y0,
///
/// with ℓ(y,u) = ½‖Cy‖² + ⟨g⋆,y⟩ + (α/2)‖u‖² + ⟨h⋆,u⟩.
struct ProblemData {
  MatrixXd A;
  MatrixXd B;
  MatrixXd C;
  double alpha = 1.0;
  VectorXd f_star;
  VectorXd g_star;
  VectorXd h_star;
  MatrixXd Q;
  VectorXd q;
  VectorXd y0;
  double T_bar = 1.0;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }
};

/// Throws DimensionError unless all sizes are mutually consistent.
void check_dimensions(const ProblemData& data);

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks the problem invariants: α > 0, T̄ > 0, Q symmetric PSD,
/// (A,B) stabilizable and (A,C) detectable (Hautus test).
/// Throws DimensionError on inconsistent sizes.
ValidationReport validate_problem(const ProblemData& data);

// Hautus tests on every eigenvalue of A with nonnegative real part. Rank is
// decided by singular values relative to the largest one.
bool is_stabilizable(const MatrixXd& A, const MatrixXd& B,
                     double rel_tol = 1e-9);
bool is_detectable(const MatrixXd& A, const MatrixXd& C,
                   double rel_tol = 1e-9);

/// Uniform time grid t_k = t0 + k h, k = 0..K.
struct Grid {
  double t0 = 0.0;
  double t1 = 0.0;
  double h = 0.0;
  std::ptrdiff_t K = 0;

  double node(std::ptrdiff_t k) const {
    return t0 + static_cast<double>(k) * h;
  }
  double length() const { return t1 - t0; }
};

/// Builds the grid on [t0,t1] with step h. Throws std::invalid_argument if
/// h <= 0, t1 < t0, or (t1 - t0) is not an integer multiple of h.
Grid make_grid(double t0, double t1, double h);

/// Number of steps of length h in a span, or nullopt if the span is not an
/// integer multiple of h within 1e-10 relative.
std::optional<std::ptrdiff_t> steps_in(double span, double h);

/// Samples of one solve. Columns are time samples: states has K+1 columns
/// (nodes t_0..t_K), controls has K columns (control on (t_{k-1},t_k],
/// stored at the right endpoint), costates is empty or has K+1 columns.
struct Trajectory {
  Grid grid;
  MatrixXd states;
  MatrixXd controls;
  MatrixXd costates;

  bool has_costates() const { return costates.cols() > 0; }
  VectorXd final_state() const { return states.col(states.cols() - 1); }
};

/// Throws DimensionError unless column counts match the grid.
void check_trajectory(const Trajectory& traj);

struct CostReport {
  double running = 0.0;
  double terminal = 0.0;
  double total = 0.0;
};

/// ℓ(y,u) = ½‖Cy‖² + ⟨g⋆,y⟩ + (α/2)‖u‖² + ⟨h⋆,u⟩.
double running_cost(const ProblemData& data, const VectorXd& y,
                    const VectorXd& u);

/// Discrete cost of a trajectory: running part h·Σ_k ℓ(ȳ_k, u_k) with
/// ȳ_k = (y_{k-1} + y_k)/2 (the quadrature the solvers optimize), terminal
/// part ½⟨y_K, Qterm y_K⟩ + ⟨qterm, y_K⟩.
CostReport total_cost(const ProblemData& data, const Trajectory& traj,
                      const MatrixXd& Qterm, const VectorXd& qterm);

/// Discrete L² distance (h·Σ_k ‖a_k − b_k‖²)^{1/2} over the last grid.K
/// columns, so state sequences (K+1 columns) are summed over right endpoints.
double l2_distance(const MatrixXd& a, const MatrixXd& b, const Grid& grid);

/// Operator 2-norm.
double spectral_norm(const MatrixXd& M);

}  // namespace lqrhc
