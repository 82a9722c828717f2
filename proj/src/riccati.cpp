#include "lqrhc/riccati.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include <lapacke.h>

namespace lqrhc {
namespace {

constexpr double kRefineTol = 1e-10;
constexpr int kMaxNewtonIterations = 50;

lapack_logical select_stable(const double* wr, const double* /*wi*/) {
  return *wr < 0.0;
}

MatrixXd symmetrize(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

// Stable invariant subspace of the Hamiltonian via an ordered real Schur form.
MatrixXd schur_riccati(const ProblemData& d) {
  const auto n = d.n();
  const MatrixXd S = d.B * d.B.transpose() / d.alpha;
  MatrixXd H(2 * n, 2 * n);
  H << d.A, -S, -d.C.transpose() * d.C, -d.A.transpose();

  const lapack_int N = static_cast<lapack_int>(2 * n);
  MatrixXd T = H;
  MatrixXd U(2 * n, 2 * n);
  VectorXd wr(2 * n), wi(2 * n);
  lapack_int sdim = 0;
  const lapack_int info =
      LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'S', select_stable, N, T.data(), N,
                    &sdim, wr.data(), wi.data(), U.data(), N);
  if (info != 0) {
    throw SolverError("riccati: Schur decomposition failed (info " +
                      std::to_string(info) + ")");
  }
  const double scale = std::max(1.0, H.norm());
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (std::abs(wr(i)) <= 1e-10 * scale) {
      throw SolverError(
          "riccati: Hamiltonian has eigenvalues on the imaginary axis; no "
          "stabilizing solution");
    }
  }
  if (sdim != n) {
    throw SolverError("riccati: stable subspace has dimension " +
                      std::to_string(sdim) + ", expected " +
                      std::to_string(n));
  }
  const MatrixXd U11 = U.topLeftCorner(n, n);
  const MatrixXd U21 = U.bottomLeftCorner(n, n);
  Eigen::FullPivLU<MatrixXd> lu(U11);
  if (!lu.isInvertible()) {
    throw SolverError("riccati: stable subspace is not a graph");
  }
  // Π = U21 U11⁻¹, computed as the transpose of U11⁻ᵀ U21ᵀ.
  const MatrixXd Pi = U11.transpose().fullPivLu().solve(U21.transpose());
  return symmetrize(Pi.transpose());
}

}  // namespace

double care_residual(const ProblemData& d, const MatrixXd& X) {
  const MatrixXd R = d.A.transpose() * X + X * d.A +
                     d.C.transpose() * d.C -
                     X * d.B * d.B.transpose() * X / d.alpha;
  return R.norm();
}

MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& W) {
  const auto n = A.rows();
  // vec(AᵀX + XA) = (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(X), column-major vec.
  MatrixXd L = MatrixXd::Zero(n * n, n * n);
  const MatrixXd At = A.transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    L.block(j * n, j * n, n, n) += At;
    for (Eigen::Index l = 0; l < n; ++l) {
      L.block(j * n, l * n, n, n).diagonal().array() += At(j, l);
    }
  }
  const VectorXd rhs = -Eigen::Map<const VectorXd>(W.data(), n * n);
  const VectorXd x = L.partialPivLu().solve(rhs);
  return Eigen::Map<const MatrixXd>(x.data(), n, n);
}

CareSolution solve_care(const ProblemData& d) {
  check_dimensions(d);
  if (!(d.alpha > 0.0)) throw SolverError("riccati: alpha must be positive");

  MatrixXd Pi = schur_riccati(d);
  double res = care_residual(d, Pi);

  // Newton–Kleinman: (A − S Π_k)ᵀ X + X (A − S Π_k) + CᵀC + Π_k S Π_k = 0.
  const MatrixXd S = d.B * d.B.transpose() / d.alpha;
  const MatrixXd CtC = d.C.transpose() * d.C;
  for (int it = 0; it < kMaxNewtonIterations && res > kRefineTol; ++it) {
    const MatrixXd Ak = d.A - S * Pi;
    const MatrixXd next = symmetrize(solve_lyapunov(Ak, CtC + Pi * S * Pi));
    const double next_res = care_residual(d, next);
    if (!std::isfinite(next_res) || next_res >= res) break;
    Pi = next;
    res = next_res;
  }
  if (res > 1e-8 * (1.0 + Pi.squaredNorm())) {
    std::ostringstream os;
    os << "riccati: residual " << res << " after refinement";
    throw SolverError(os.str());
  }

  CareSolution out;
  out.Pi = Pi;
  out.gain = d.B.transpose() * Pi / d.alpha;
  out.A_pi = d.A - d.B * out.gain;
  out.lambda = decay_rate(out.A_pi);
  out.residual = res;
  return out;
}

double decay_rate(const MatrixXd& A_pi) {
  Eigen::EigenSolver<MatrixXd> es(A_pi, false);
  const double lambda = -es.eigenvalues().real().maxCoeff();
  if (!(lambda > 0.0)) {
    throw SolverError("riccati: closed loop is not exponentially stable");
  }
  return lambda;
}

MidpointStep::MidpointStep(const ProblemData& d, double h)
    : h_(h),
      alpha_(d.alpha),
      A_(d.A),
      B_(d.B),
      CtC_(d.C.transpose() * d.C),
      g_(d.g_star),
      hs_(d.h_star) {
  if (!(h > 0.0)) throw std::invalid_argument("h must be positive");
  const auto n = d.n();
  const MatrixXd I = MatrixXd::Identity(n, n);
  const Eigen::PartialPivLU<MatrixXd> lu(I - 0.5 * h * d.A);
  E_ = lu.solve(I + 0.5 * h * d.A);
  F_ = lu.solve(h * d.B);
  e_ = lu.solve(h * d.f_star);
  Sx_ = 0.5 * (I + E_);
  Su_ = 0.5 * F_;
  s0_ = 0.5 * e_;
  adj_lu_.compute(I - 0.5 * h * d.A.transpose());
  adj_rhs_ = I + 0.5 * h * d.A.transpose();
}

MidpointStep::Backward MidpointStep::backward(const MatrixXd& P,
                                              const VectorXd& s, double c,
                                              bool affine) const {
  const MatrixXd PE = P * E_;
  const MatrixXd PF = P * F_;
  const MatrixXd CSu = CtC_ * Su_;

  MatrixXd Huu = h_ * (Su_.transpose() * CSu) + F_.transpose() * PF;
  Huu.diagonal().array() += h_ * alpha_;
  const MatrixXd Hux = h_ * (CSu.transpose() * Sx_) + F_.transpose() * PE;
  const MatrixXd Hxx = h_ * (Sx_.transpose() * CtC_ * Sx_) + E_.transpose() * PE;

  VectorXd lu, lx;
  double c0 = c;
  if (affine) {
    const VectorXd w = CtC_ * s0_ + g_;
    const VectorXd Pe_s = P * e_ + s;
    lu = h_ * (Su_.transpose() * w + hs_) + F_.transpose() * Pe_s;
    lx = h_ * (Sx_.transpose() * w) + E_.transpose() * Pe_s;
    c0 += h_ * (0.5 * s0_.dot(CtC_ * s0_) + g_.dot(s0_)) +
          0.5 * e_.dot(P * e_) + s.dot(e_);
  } else {
    lu = F_.transpose() * s;
    lx = E_.transpose() * s;
  }

  const Eigen::LLT<MatrixXd> llt(Huu);
  if (llt.info() != Eigen::Success) {
    throw SolverError("lq_solver: stage Hessian is not positive definite");
  }
  Backward out;
  out.feedback = llt.solve(Hux);
  out.feedforward = llt.solve(lu);
  MatrixXd Pn = Hxx - Hux.transpose() * out.feedback;
  out.P = symmetrize(Pn);
  out.s = lx - Hux.transpose() * out.feedforward;
  out.c = c0 - 0.5 * lu.dot(out.feedforward);
  return out;
}

VectorXd MidpointStep::adjoint(const VectorXd& p_next, const VectorXd& y_mid,
                               bool affine) const {
  VectorXd rhs = adj_rhs_ * p_next + h_ * (CtC_ * y_mid);
  if (affine) rhs += h_ * g_;
  return adj_lu_.solve(rhs);
}

RiccatiFlow riccati_flow(const ProblemData& d, const MatrixXd& Q_T, double T,
                         double h) {
  const auto K = steps_in(T, h);
  if (!K) throw std::invalid_argument("riccati_flow: T is not a multiple of h");
  const auto n = d.n();
  if (Q_T.rows() != n || Q_T.cols() != n) {
    throw DimensionError("riccati_flow: Q_T must be n x n");
  }
  const MidpointStep step(d, h);
  RiccatiFlow flow;
  flow.Q_T = Q_T;
  flow.h = h;
  flow.P_seq.reserve(*K + 1);
  flow.G_seq.reserve(*K + 1);
  flow.P_seq.push_back(Q_T);
  flow.G_seq.push_back(MatrixXd::Identity(n, n));
  const VectorXd zero = VectorXd::Zero(n);
  for (std::ptrdiff_t k = 1; k <= *K; ++k) {
    const auto b = step.backward(flow.P_seq.back(), zero, 0.0, false);
    // Closed-loop transition Φ = E − F·feedback; G advances by Φᵀ.
    const MatrixXd Phi = step.E() - step.F() * b.feedback;
    flow.G_seq.push_back(Phi.transpose() * flow.G_seq.back());
    flow.P_seq.push_back(b.P);
  }
  return flow;
}

std::shared_ptr<const RiccatiFlow> FlowCache::get(const MatrixXd& Q_T,
                                                  double T, double h) {
  std::vector<double> key(Q_T.data(), Q_T.data() + Q_T.size());
  const auto K = steps_in(T, h);
  if (!K) throw std::invalid_argument("riccati_flow: T is not a multiple of h");
  key.push_back(static_cast<double>(*K));
  key.push_back(h);
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  auto flow = std::make_shared<const RiccatiFlow>(riccati_flow(data_, Q_T, T, h));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(std::move(key), std::move(flow));
  return it->second;
}

std::size_t FlowCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace lqrhc
