#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <vector>

#include "lqrhc/model.hpp"

namespace lqrhc {

/// Stabilizing solution of the algebraic Riccati equation
///
///   AᵀΠ + ΠA + CᵀC − (1/α) Π B Bᵀ Π = 0
///
/// together with the closed-loop matrix A_π = A − (1/α) B Bᵀ Π, its decay
/// rate λ = −max Re σ(A_π) and the feedback gain (1/α) Bᵀ Π.
struct CareSolution {
  MatrixXd Pi;
  MatrixXd A_pi;
  double lambda = 0.0;
  MatrixXd gain;
  double residual = 0.0;  // Frobenius norm of the Riccati residual
};

/// Frobenius norm of the Riccati residual at X.
double care_residual(const ProblemData& data, const MatrixXd& X);

/// Ordered real Schur decomposition of the Hamiltonian followed by
/// Newton–Kleinman refinement. Throws SolverError if the Hamiltonian has
/// eigenvalues on the imaginary axis or the refinement fails.
CareSolution solve_care(const ProblemData& data);

/// −max Re σ(A_pi). Throws SolverError if the result is not positive.
double decay_rate(const MatrixXd& A_pi);
inline double decay_rate(const CareSolution& care) {
  return decay_rate(care.A_pi);
}

/// Solves Aᵀ X + X A + W = 0 for X (small dense problems).
MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& W);

/// One step of the implicit midpoint discretization on a step of length h:
///
///   y_k = E y_{k-1} + F u_k + e,   ȳ_k = Sx y_{k-1} + Su u_k + s0,
///
/// and the backward dynamic-programming step of the discrete cost
/// h ℓ(ȳ_k, u_k) + V_k(y_k) with V_k(y) = ½ yᵀP y + sᵀy + c.
class MidpointStep {
 public:
  MidpointStep(const ProblemData& data, double h);

  struct Backward {
    MatrixXd P;
    VectorXd s;
    double c = 0.0;
    MatrixXd feedback;     // u = −feedback·y_{k-1} − feedforward
    VectorXd feedforward;
  };

  /// Value-to-go one step earlier. With `affine == false` the linear terms
  /// f⋆, g⋆, h⋆ are treated as zero.
  Backward backward(const MatrixXd& P, const VectorXd& s, double c,
                    bool affine = true) const;

  VectorXd advance(const VectorXd& y, const VectorXd& u,
                   bool affine = true) const {
    return affine ? VectorXd(E_ * y + F_ * u + e_) : VectorXd(E_ * y + F_ * u);
  }

  /// Costate one step earlier: p_{k-1} from p_k and the interval average ȳ_k.
  VectorXd adjoint(const VectorXd& p_next, const VectorXd& y_mid,
                   bool affine = true) const;

  const MatrixXd& E() const { return E_; }
  const MatrixXd& F() const { return F_; }
  double h() const { return h_; }

 private:
  double h_;
  double alpha_;
  MatrixXd A_, B_, CtC_;
  VectorXd g_, hs_;
  MatrixXd E_, F_;
  VectorXd e_;
  MatrixXd Sx_, Su_;
  VectorXd s0_;
  Eigen::PartialPivLU<MatrixXd> adj_lu_;  // I − (h/2) Aᵀ
  MatrixXd adj_rhs_;                      // I + (h/2) Aᵀ
};

/// Discrete finite-horizon operators: P_seq[k] ≈ Π(k h, Q_T) and
/// G_seq[k] ≈ G(k h, Q_T), i.e. the costate at the start of a horizon of
/// k steps is P_seq[k] y0 + G_seq[k] q when f⋆ = g⋆ = h⋆ = 0.
struct RiccatiFlow {
  MatrixXd Q_T;
  double h = 0.0;
  std::vector<MatrixXd> P_seq;
  std::vector<MatrixXd> G_seq;

  std::ptrdiff_t steps() const {
    return static_cast<std::ptrdiff_t>(P_seq.size()) - 1;
  }
};

/// Backward sweep of the discrete Riccati recursion over T = K h. Throws
/// std::invalid_argument if T/h is not an integer.
RiccatiFlow riccati_flow(const ProblemData& data, const MatrixXd& Q_T,
                         double T, double h);

/// Memoizes riccati_flow for one problem, keyed by (Q_T, T, h). Concurrent
/// lookups are safe; a missing entry is computed outside the lock and the
/// first inserted value wins.
class FlowCache {
 public:
  explicit FlowCache(ProblemData data) : data_(std::move(data)) {}

  std::shared_ptr<const RiccatiFlow> get(const MatrixXd& Q_T, double T,
                                         double h);
  std::size_t size() const;

 private:
  ProblemData data_;
  mutable std::shared_mutex mutex_;
  std::map<std::vector<double>, std::shared_ptr<const RiccatiFlow>> entries_;
};

}  // namespace lqrhc
