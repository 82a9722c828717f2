#include "lqrhc/rhc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace lqrhc {
namespace {

constexpr double kSymTol = 1e-10;
constexpr double kPsdTol = 1e-10;

std::ptrdiff_t require_steps(double span, double h, const char* what) {
  const auto K = steps_in(span, h);
  if (!K || *K <= 0) {
    std::ostringstream os;
    os << "rhc: " << what << " = " << span
       << " is not a positive multiple of h = " << h;
    throw std::invalid_argument(os.str());
  }
  return *K;
}

void check_symmetric_psd(const MatrixXd& M, const char* what) {
  if ((M - M.transpose()).cwiseAbs().maxCoeff() >
      kSymTol * std::max(1.0, M.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument(std::string("rhc: ") + what +
                                " is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()),
                                                   Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kPsdTol) {
    throw std::invalid_argument(std::string("rhc: ") + what +
                                " is not positive semi-definite");
  }
}

// Rolls the first `keep` steps of a sweep forward from y, writing states,
// controls and costates into `out` starting at global node `offset`.
VectorXd rollout_window(const MidpointStep& step, const LqSweep& sweep,
                        const VectorXd& y_start, std::ptrdiff_t keep,
                        std::ptrdiff_t offset, Trajectory& out) {
  VectorXd y = y_start;
  for (std::ptrdiff_t k = 0; k < keep; ++k) {
    out.states.col(offset + k) = y;
    out.costates.col(offset + k) = sweep.P[k] * y + sweep.s[k];
    const VectorXd u = -sweep.feedback[k] * y - sweep.feedforward[k];
    out.controls.col(offset + k) = u;
    y = step.advance(y, u);
  }
  return y;
}

Trajectory empty_trajectory(const Grid& grid, Eigen::Index n, Eigen::Index m) {
  Trajectory traj;
  traj.grid = grid;
  traj.states.resize(n, grid.K + 1);
  traj.controls.resize(m, grid.K);
  traj.costates.resize(n, grid.K + 1);
  return traj;
}

double window_l2(const MatrixXd& a, const MatrixXd& b, std::ptrdiff_t first,
                 std::ptrdiff_t count, double h) {
  return std::sqrt(
      h * (a.middleCols(first, count) - b.middleCols(first, count))
              .squaredNorm());
}

}  // namespace

const char* to_string(TerminalMode mode) {
  switch (mode) {
    case TerminalMode::Zero:
      return "zero";
    case TerminalMode::Constant:
      return "constant";
    case TerminalMode::Exact:
      return "exact";
  }
  return "unknown";
}

TerminalMode terminal_mode_from_string(const std::string& name) {
  if (name == "zero") return TerminalMode::Zero;
  if (name == "constant") return TerminalMode::Constant;
  if (name == "exact") return TerminalMode::Exact;
  throw std::invalid_argument("unknown terminal mode '" + name +
                              "' (expected zero, constant or exact)");
}

TerminalCostSpec TerminalCostSpec::zero(VectorXd p_tilde) {
  TerminalCostSpec s;
  s.mode = TerminalMode::Zero;
  s.p_tilde = std::move(p_tilde);
  return s;
}

TerminalCostSpec TerminalCostSpec::constant(MatrixXd pi_tilde, VectorXd p_tilde,
                                            MatrixXd g_tilde) {
  TerminalCostSpec s;
  s.mode = TerminalMode::Constant;
  s.pi_tilde = std::move(pi_tilde);
  s.p_tilde = std::move(p_tilde);
  s.g_tilde = std::move(g_tilde);
  return s;
}

TerminalCostSpec TerminalCostSpec::exact() {
  TerminalCostSpec s;
  s.mode = TerminalMode::Exact;
  return s;
}

TerminalCost::TerminalCost(TerminalCostSpec spec, const SteadyState& steady,
                           double T_bar,
                           std::shared_ptr<const RiccatiFlow> flow)
    : spec_(std::move(spec)),
      y_star_(steady.y_star),
      q_tilde_(steady.q_tilde),
      T_bar_(T_bar),
      flow_(std::move(flow)) {
  const auto n = y_star_.size();
  switch (spec_.mode) {
    case TerminalMode::Zero:
      if (spec_.p_tilde.size() != n) {
        throw DimensionError("terminal cost: p_tilde must have size n");
      }
      p_tilde_ = spec_.p_tilde;
      break;
    case TerminalMode::Constant:
      if (spec_.p_tilde.size() != n || spec_.pi_tilde.rows() != n ||
          spec_.pi_tilde.cols() != n) {
        throw DimensionError("terminal cost: pi_tilde must be n x n, p_tilde n");
      }
      if (spec_.g_tilde.size() == 0) spec_.g_tilde = MatrixXd::Zero(n, n);
      if (spec_.g_tilde.rows() != n || spec_.g_tilde.cols() != n) {
        throw DimensionError("terminal cost: g_tilde must be n x n");
      }
      check_symmetric_psd(spec_.pi_tilde, "pi_tilde");
      p_tilde_ = spec_.p_tilde;
      break;
    case TerminalMode::Exact:
      if (!flow_) {
        throw std::invalid_argument(
            "terminal cost: Exact mode requires a Riccati flow");
      }
      if (flow_->P_seq.empty() || flow_->P_seq[0].rows() != n) {
        throw DimensionError("terminal cost: flow does not match the problem");
      }
      p_tilde_ = steady.p_star;
      break;
  }
}

std::ptrdiff_t TerminalCost::flow_index(double time_to_go) const {
  const auto k = steps_in(time_to_go, flow_->h);
  if (!k || *k < 0 || *k > flow_->steps()) {
    std::ostringstream os;
    os << "terminal cost: time to go " << time_to_go
       << " is not a node of the Riccati flow";
    throw std::invalid_argument(os.str());
  }
  return *k;
}

MatrixXd TerminalCost::pi_tilde(double time_to_go) const {
  const auto n = y_star_.size();
  switch (spec_.mode) {
    case TerminalMode::Zero:
      return MatrixXd::Zero(n, n);
    case TerminalMode::Constant:
      return spec_.pi_tilde;
    case TerminalMode::Exact:
      return flow_->P_seq[flow_index(time_to_go)];
  }
  return {};
}

MatrixXd TerminalCost::g_tilde(double time_to_go) const {
  const auto n = y_star_.size();
  switch (spec_.mode) {
    case TerminalMode::Zero:
      return MatrixXd::Zero(n, n);
    case TerminalMode::Constant:
      return spec_.g_tilde;
    case TerminalMode::Exact:
      return flow_->G_seq[flow_index(time_to_go)];
  }
  return {};
}

TerminalCost::Quadratic TerminalCost::at(double t) const {
  const double s = T_bar_ - t;
  Quadratic out;
  out.Q = pi_tilde(s);
  out.q = -out.Q * y_star_ + g_tilde(s) * q_tilde_ + p_tilde_;
  out.c = 0.5 * y_star_.dot(out.Q * y_star_);
  return out;
}

double TerminalCost::value(double t, const VectorXd& y) const {
  const Quadratic f = at(t);
  return 0.5 * y.dot(f.Q * y) + f.q.dot(y) + f.c;
}

VectorXd TerminalCost::gradient(double t, const VectorXd& y) const {
  const Quadratic f = at(t);
  return f.Q * y + f.q;
}

std::ptrdiff_t default_iterations(double T_bar, double tau, double T) {
  if (!(tau > 0.0)) throw std::invalid_argument("rhc: tau must be positive");
  const double N = std::floor((T_bar - 2.0 * T) / tau + 1e-9);
  return N > 0.0 ? static_cast<std::ptrdiff_t>(N) : 0;
}

RhcProblem::RhcProblem(ProblemData data, double h)
    : RhcProblem(data, solve_care(data), SteadyState{}, h) {}

RhcProblem::RhcProblem(ProblemData data, CareSolution care, SteadyState steady,
                       double h)
    : data_(std::move(data)), care_(std::move(care)), h_(h) {
  check_dimensions(data_);
  steady_ = steady.y_star.size() == 0 ? solve_static(data_, care_)
                                      : std::move(steady);
  grid_ = make_grid(0.0, data_.T_bar, h_);
  reference_ = solve_full_problem(data_, h_);
  flows_ = std::make_shared<FlowCache>(data_);
  exact_flow_ = flows_->get(data_.Q, data_.T_bar, h_);
}

TerminalCost RhcProblem::terminal_cost(const TerminalCostSpec& spec) const {
  return TerminalCost(spec, steady_, data_.T_bar,
                      spec.mode == TerminalMode::Exact ? exact_flow_ : nullptr);
}

void check_config(const RhcConfig& cfg, double T_bar, bool finite_horizon) {
  if (!(cfg.h > 0.0)) throw std::invalid_argument("h must be positive");
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("rhc: tau must be positive");
  if (!(cfg.T > 0.0)) throw std::invalid_argument("rhc: T must be positive");
  if (cfg.N < 0) throw std::invalid_argument("rhc: N must be nonnegative");
  require_steps(cfg.tau, cfg.h, "tau");
  require_steps(cfg.T, cfg.h, "T");
  if (cfg.tau > cfg.T + 1e-10 * std::max(1.0, cfg.T)) {
    throw std::invalid_argument("rhc: tau must not exceed T");
  }
  if (finite_horizon) {
    require_steps(T_bar, cfg.h, "T_bar");
    const double end = static_cast<double>(cfg.N) * cfg.tau + cfg.T;
    if (cfg.N > 0 && end > T_bar + 1e-10 * std::max(1.0, T_bar)) {
      std::ostringstream os;
      os << "rhc: N*tau + T = " << end << " exceeds T_bar = " << T_bar;
      throw std::invalid_argument(os.str());
    }
  }
}

RhcResult run_rhc_finite(const RhcProblem& problem, const RhcConfig& cfg) {
  const auto& d = problem.data();
  if (std::abs(cfg.h - problem.h()) > 1e-15 * std::max(1.0, problem.h())) {
    throw std::invalid_argument("rhc: config h differs from the problem grid");
  }
  check_config(cfg, d.T_bar, true);
  const double h = cfg.h;
  const Grid& grid = problem.grid();
  const auto K_tau = require_steps(cfg.tau, h, "tau");
  const auto K_T = require_steps(cfg.T, h, "T");
  const TerminalCost phi = problem.terminal_cost(cfg.terminal);
  const MidpointStep step(d, h);
  const Trajectory& ref = problem.reference().traj;

  RhcResult res;
  res.traj = empty_trajectory(grid, d.n(), d.m());
  res.per_iter.reserve(cfg.N);

  // Zero and Constant costs do not depend on t, so one sweep serves every n.
  std::optional<LqSweep> shared;
  if (phi.mode() != TerminalMode::Exact && cfg.N > 0) {
    const auto f = phi.at(0.0);
    shared = backward_sweep(d, f.Q, f.q, h, K_T);
  }

  VectorXd y = d.y0;
  for (std::ptrdiff_t n = 0; n < cfg.N; ++n) {
    const std::ptrdiff_t offset = n * K_tau;
    RhcIteration rec;
    rec.n = n;
    rec.handoff_state_error = (y - ref.states.col(offset)).norm();
    if (shared) {
      y = rollout_window(step, *shared, y, K_tau, offset, res.traj);
    } else {
      const auto f = phi.at(grid.node(offset + K_T));
      const LqSweep sw = backward_sweep(d, f.Q, f.q, h, K_T);
      y = rollout_window(step, sw, y, K_tau, offset, res.traj);
    }
    rec.segment_error =
        window_l2(res.traj.controls, ref.controls, offset, K_tau, h);
    res.per_iter.push_back(rec);
  }

  const std::ptrdiff_t offset = cfg.N * K_tau;
  const std::ptrdiff_t rest = grid.K - offset;
  const LqSweep last = backward_sweep(d, d.Q, d.q, h, rest);
  y = rollout_window(step, last, y, rest, offset, res.traj);
  res.traj.states.col(grid.K) = y;
  res.traj.costates.col(grid.K) = last.P[rest] * y + last.s[rest];

  res.error_u = l2_distance(res.traj.controls, ref.controls, grid);
  res.error_y = l2_distance(res.traj.states, ref.states, grid);
  res.cost_gap =
      total_cost(d, res.traj, d.Q, d.q).total - problem.reference().value;
  return res;
}

RhcResult run_rhc_infinite(const RhcProblem& problem, const RhcConfig& cfg,
                           double T_end) {
  const auto& d = problem.data();
  check_config(cfg, d.T_bar, false);
  if (cfg.terminal.mode == TerminalMode::Exact) {
    throw std::invalid_argument(
        "rhc infinite: terminal cost must be time-independent");
  }
  if (cfg.terminal.mode == TerminalMode::Constant &&
      cfg.terminal.g_tilde.size() != 0 &&
      cfg.terminal.g_tilde.cwiseAbs().maxCoeff() != 0.0) {
    throw std::invalid_argument("rhc infinite: g_tilde must be zero");
  }
  if (cfg.N <= 0) throw std::invalid_argument("rhc infinite: N must be positive");
  const double h = cfg.h;
  const auto K_tau = require_steps(cfg.tau, h, "tau");
  const auto K_T = require_steps(cfg.T, h, "T");
  const double window = static_cast<double>(cfg.N) * cfg.tau;
  if (window > T_end + 1e-10 * std::max(1.0, T_end)) {
    throw std::invalid_argument("rhc infinite: N*tau exceeds T_end");
  }

  const SteadyState& s = problem.steady();
  const TerminalCost phi(cfg.terminal, s, d.T_bar);
  const auto f = phi.at(0.0);
  const MidpointStep step(d, h);
  const LqSweep sw = backward_sweep(d, f.Q, f.q, h, K_T);
  const Grid grid = make_grid(0.0, window, h);
  const Trajectory ref = overtaking_solution(d, s, problem.care(), grid);

  RhcResult res;
  res.traj = empty_trajectory(grid, d.n(), d.m());
  VectorXd y = d.y0;
  for (std::ptrdiff_t n = 0; n < cfg.N; ++n) {
    const std::ptrdiff_t offset = n * K_tau;
    RhcIteration rec;
    rec.n = n;
    rec.handoff_state_error = (y - ref.states.col(offset)).norm();
    y = rollout_window(step, sw, y, K_tau, offset, res.traj);
    rec.segment_error =
        window_l2(res.traj.controls, ref.controls, offset, K_tau, h);
    res.per_iter.push_back(rec);
  }
  // The last kept window ends at Nτ; its costate comes from the last sweep.
  res.traj.states.col(grid.K) = y;
  res.traj.costates.col(grid.K) = sw.P[K_tau] * y + sw.s[K_tau];

  res.error_u = l2_distance(res.traj.controls, ref.controls, grid);
  res.error_y = l2_distance(res.traj.states, ref.states, grid);
  const MatrixXd& Pi = problem.care().Pi;
  const VectorXd qT = s.p_star - Pi * s.y_star;
  res.cost_gap = total_cost(d, res.traj, Pi, qT).total -
                 total_cost(d, ref, Pi, qT).total;
  return res;
}

double rho_statistic(double error_u, double tau, double T, double lambda) {
  if (!(error_u > 0.0)) {
    throw std::domain_error("rho_statistic: error_u must be positive");
  }
  return std::log(error_u) + 2.0 * lambda * T - lambda * tau;
}

BoundTerms predicted_bound(const RhcProblem& problem, const RhcConfig& cfg) {
  const auto& d = problem.data();
  const auto& s = problem.steady();
  const double lambda = problem.care().lambda;
  const TerminalCost phi = problem.terminal_cost(cfg.terminal);
  const RiccatiFlow& flow = *problem.exact_flow();

  BoundTerms b;
  for (std::ptrdiff_t k = 1; k <= flow.steps(); ++k) {
    const double t = static_cast<double>(k) * flow.h;
    b.pi_gap = std::max(b.pi_gap, spectral_norm(phi.pi_tilde(t) - flow.P_seq[k]));
    b.g_gap = std::max(b.g_gap, std::exp(lambda * t) *
                                    spectral_norm(phi.g_tilde(t) - flow.G_seq[k]));
  }
  b.K1 = b.pi_gap * (d.y0 - s.y_star).norm();
  b.K2 = (b.pi_gap + b.g_gap) * s.q_tilde.norm();
  b.p_gap = (phi.p_tilde() - s.p_star).norm();
  const double N = static_cast<double>(cfg.N);
  b.bound = std::exp(-lambda * (cfg.T - cfg.tau)) *
            (std::exp(-lambda * cfg.T) * b.K1 +
             std::exp(-lambda * (d.T_bar - (N * cfg.tau + cfg.T))) * b.K2 +
             N * b.p_gap);
  return b;
}

std::vector<SweepRow> sweep(const RhcProblem& problem,
                            const SweepOptions& options) {
  std::vector<SweepRow> rows;
  for (const double tau : options.tau_list) {
    for (const double T : options.T_list) {
      if (tau > T + 1e-10 * std::max(1.0, T)) continue;
      SweepRow row;
      row.tau = tau;
      row.T = T;
      rows.push_back(row);
    }
  }

  const double lambda = problem.care().lambda;
  const double T_bar = problem.data().T_bar;
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  auto run_cell = [&](SweepRow& row) {
    row.error_u = row.error_y = row.cost_gap = row.rho = row.predicted_bound =
        nan;
    try {
      RhcConfig cfg;
      cfg.tau = row.tau;
      cfg.T = row.T;
      cfg.h = problem.h();
      cfg.terminal = options.terminal;
      cfg.N = options.N ? *options.N : default_iterations(T_bar, row.tau, row.T);
      row.N = cfg.N;
      const RhcResult res = run_rhc_finite(problem, cfg);
      row.error_u = res.error_u;
      row.error_y = res.error_y;
      row.cost_gap = res.cost_gap;
      row.predicted_bound = predicted_bound(problem, cfg).bound;
      if (res.error_u > 0.0) {
        row.rho = rho_statistic(res.error_u, row.tau, row.T, lambda);
        row.status = "ok";
      } else {
        row.status = "ok (error_u is zero, rho undefined)";
      }
    } catch (const std::exception& e) {
      row.status = e.what();
    }
  };

  const unsigned jobs =
      std::max(1u, std::min<unsigned>(options.jobs,
                                      static_cast<unsigned>(rows.size())));
  if (jobs <= 1) {
    for (auto& row : rows) run_cell(row);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (unsigned j = 0; j < jobs; ++j) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < rows.size(); i = next++) {
        run_cell(rows[i]);
      }
    });
  }
  for (auto& w : workers) w.join();
  return rows;
}

}  // namespace lqrhc
