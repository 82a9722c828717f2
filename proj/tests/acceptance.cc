// Acceptance criteria on the two-state default example. Prints one line per
// criterion and exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lqrhc/rhc.hpp"
#include "test_common.hpp"

namespace lqrhc {
namespace {

using testing::default_data;

struct Verdict {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

double fitted_rate(const std::vector<double>& t, const std::vector<double>& v) {
  return -testing::log_slope(t, v);
}

const RhcProblem& problem() {
  static const RhcProblem p(default_data(), 5e-3);
  return p;
}

std::vector<double> half_grid() {
  std::vector<double> v;
  for (int i = 1; i <= 15; ++i) v.push_back(0.5 * i);
  return v;
}

std::vector<SweepRow> zero_mode_sweep(unsigned jobs) {
  SweepOptions opt;
  opt.tau_list = opt.T_list = half_grid();
  opt.terminal = TerminalCostSpec::zero(problem().steady().p_star);
  opt.jobs = jobs;
  return sweep(problem(), opt);
}

Verdict care_correctness() {
  Verdict v;
  const auto d = default_data();
  const auto t0 = std::chrono::steady_clock::now();
  const auto care = solve_care(d);
  const double elapsed = seconds_since(t0);
  v.check(std::abs(care.lambda - 0.36) <= 0.01, fmt("lambda = %.6f", care.lambda));
  v.check(care.residual <= 1e-10, fmt("residual = %.2e", care.residual));
  v.check(elapsed < 0.01, fmt("runtime %.2f ms", 1e3 * elapsed));
  return v;
}

Verdict exact_recovery() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const RhcProblem p(default_data(), 5e-3);
  RhcConfig cfg;
  cfg.tau = 1.0;
  cfg.T = 3.0;
  cfg.N = default_iterations(30.0, 1.0, 3.0);
  cfg.terminal = TerminalCostSpec::exact();
  const auto r = run_rhc_finite(p, cfg);
  const double elapsed = seconds_since(t0);
  v.check(r.error_u <= 1e-6, fmt("error_u = %.2e", r.error_u));
  v.check(elapsed < 5.0, fmt("runtime %.2f s", elapsed));
  return v;
}

Verdict rho_flatness() {
  Verdict v;
  const double lambda = problem().care().lambda;
  auto t0 = std::chrono::steady_clock::now();
  const auto rows = zero_mode_sweep(1);
  const double serial = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const auto rows8 = zero_mode_sweep(8);
  const double parallel = seconds_since(t0);

  double rho_lo = INFINITY, rho_hi = -INFINITY, s_lo = INFINITY, s_hi = -INFINITY;
  bool all_ok = true;
  for (const auto& r : rows) {
    all_ok = all_ok && r.status == "ok";
    rho_lo = std::min(rho_lo, r.rho);
    rho_hi = std::max(rho_hi, r.rho);
    const double s = 2 * lambda * r.T - lambda * r.tau;
    s_lo = std::min(s_lo, s);
    s_hi = std::max(s_hi, s);
  }
  v.check(all_ok && rows.size() == 120, fmt("%.0f cells", rows.size()));
  v.check(rho_hi - rho_lo <= 1.0, fmt("rho spread %.4f", rho_hi - rho_lo));
  v.check(s_hi - s_lo >= 4.5, fmt("2λT−λτ span %.3f", s_hi - s_lo));

  auto error_at = [&](double tau, double T) {
    for (const auto& r : rows) {
      if (std::abs(r.tau - tau) < 1e-9 && std::abs(r.T - T) < 1e-9) return r.error_u;
    }
    return std::nan("");
  };
  const auto grid = half_grid();
  int pairs = 0, good = 0;
  for (double tau : grid) {  // rows: strictly decreasing in T
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
      if (grid[j] < tau) continue;
      ++pairs;
      good += error_at(tau, grid[j + 1]) < error_at(tau, grid[j]);
    }
  }
  for (double T : grid) {  // columns: nondecreasing in τ
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      if (grid[i + 1] > T) continue;
      ++pairs;
      good += error_at(grid[i + 1], T) >= error_at(grid[i], T);
    }
  }
  const double share = static_cast<double>(good) / pairs;
  v.check(share >= 0.95, fmt("monotone pairs %.0f/%.0f (%.1f%%)", good, pairs,
                             100 * share));
  v.check(serial < 600.0, fmt("serial %.2f s", serial));
  v.check(parallel < 120.0, fmt("8 jobs %.2f s", parallel));
  bool same = rows.size() == rows8.size();
  for (std::size_t i = 0; same && i < rows.size(); ++i) {
    same = rows[i].error_u == rows8[i].error_u;
  }
  v.check(same, "parallel rows identical");
  return v;
}

Verdict decay_rates() {
  Verdict v;
  const auto d = default_data();
  const auto care = solve_care(d);
  const double h = 5e-3;
  const auto flow = riccati_flow(d, MatrixXd::Zero(2, 2), 10.0, h);
  std::vector<double> t, pi_gap, g;
  for (std::ptrdiff_t k = 400; k <= 2000; k += 10) {
    t.push_back(k * h);
    pi_gap.push_back(spectral_norm(flow.P_seq[k] - care.Pi));
    g.push_back(spectral_norm(flow.G_seq[k]));
  }
  const double rg = fitted_rate(t, g), rp = fitted_rate(t, pi_gap);
  v.check(rg >= 0.9 * care.lambda, fmt("G rate %.4f (≥ %.4f)", rg, 0.9 * care.lambda));
  v.check(rp >= 1.8 * care.lambda,
          fmt("Π gap rate %.4f (≥ %.4f)", rp, 1.8 * care.lambda));
  const auto fixed = riccati_flow(d, care.Pi, 10.0, h);
  double worst = 0.0;
  for (const auto& P : fixed.P_seq) {
    worst = std::max(worst, (P - care.Pi).cwiseAbs().maxCoeff());
  }
  v.check(worst <= 1e-8, fmt("Π(T,Π) − Π = %.2e", worst));
  return v;
}

Verdict turnpike_uniformity() {
  // M across all three horizons; boundary rates on the longest one. Shorter
  // horizons are reported only.
  Verdict v;
  double lo = INFINITY, hi = 0.0;
  std::string rates;
  for (double T_bar : {10.0, 20.0, 30.0}) {
    const auto d = default_data(T_bar);
    const auto care = solve_care(d);
    const auto s = solve_static(d, care);
    const auto rep = turnpike_check(solve_full_problem(d, 5e-3).traj, s, care.lambda);
    lo = std::min(lo, rep.fitted_M);
    hi = std::max(hi, rep.fitted_M);
    const double worst = std::max(std::abs(rep.left_rate - care.lambda),
                                  std::abs(rep.right_rate - care.lambda)) /
                         care.lambda;
    if (T_bar == 30.0) {
      v.check(worst <= 0.15,
              fmt("T̄=30 rates %.4f, %.4f (λ = %.4f)", rep.left_rate,
                  rep.right_rate, care.lambda));
    } else {
      rates += fmt(" T̄=%.0f rates off by %.0f%%", T_bar, 100 * worst);
    }
  }
  v.check(hi / lo <= 2.0, fmt("M range [%.4f, %.4f]", lo, hi));
  v.detail += ";" + rates;
  return v;
}

Verdict oracle_equivalence() {
  Verdict v;
  std::mt19937 rng(2024);
  double kkt = 0.0, rg = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = testing::random_data(rng);
    const auto seg = testing::segment_of(d, 1.0, 0.01);  // K = 100
    const auto sol = solve_lq(seg);
    const auto ref = testing::dense_kkt_oracle(seg);
    kkt = std::max({kkt, (sol.traj.states - ref.states).cwiseAbs().maxCoeff(),
                    (sol.traj.controls - ref.controls).cwiseAbs().maxCoeff()});
    ReducedGradientOptions opt;
    opt.tol = 1e-10;
    const auto it = reduced_gradient_solve(seg, opt);
    rg = std::max(rg, l2_distance(it.traj.controls, sol.traj.controls, seg.grid));
  }
  v.check(kkt <= 1e-8, fmt("dense KKT gap %.2e", kkt));
  v.check(rg <= 1e-6, fmt("reduced-gradient gap %.2e", rg));
  return v;
}

Verdict sensitivity_identities() {
  Verdict v;
  std::mt19937 rng(7);
  double fd_worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto seg = testing::segment_of(testing::random_data(rng), 1.5, 0.01);
    const VectorXd g = value_and_gradient(seg).gradient;
    VectorXd fd(2);
    for (int i = 0; i < 2; ++i) {
      auto a = seg, b = seg;
      a.y_init(i) += 1e-5;
      b.y_init(i) -= 1e-5;
      fd(i) = (solve_lq(a).value - solve_lq(b).value) / 2e-5;
    }
    fd_worst = std::max(fd_worst, (g - fd).norm() / std::max(1.0, fd.norm()));
  }
  v.check(fd_worst <= 1e-5, fmt("gradient vs differences %.2e", fd_worst));

  const auto d = default_data();
  const auto care = solve_care(d);
  const auto s = solve_static(d, care);
  const auto sol = solve_full_problem(d, 5e-3);
  const auto flow = riccati_flow(d, d.Q, d.T_bar, 5e-3);
  const auto K = sol.traj.grid.K;
  double costate = 0.0;
  for (std::ptrdiff_t k = 0; k <= K; ++k) {
    const VectorXd e = flow.P_seq[K - k] * (sol.traj.states.col(k) - s.y_star) +
                       flow.G_seq[K - k] * s.q_tilde + s.p_star;
    costate = std::max(costate, (sol.traj.costates.col(k) - e).norm());
  }
  v.check(costate <= 1e-7, fmt("costate identity %.2e", costate));
  const double rel = value_relation_check(d, s, 5e-3);
  v.check(rel <= 1e-7, fmt("value relation %.2e", rel));
  return v;
}

Verdict infinite_horizon() {
  Verdict v;
  auto d = default_data();
  d.y0 << 1.0, -0.5;
  const RhcProblem p(d, 5e-3);
  const auto& s = p.steady();
  RhcConfig cfg;
  cfg.tau = 1.0;
  cfg.T = 3.0;
  cfg.N = 10;
  cfg.terminal = TerminalCostSpec::constant(p.care().Pi, s.p_star);
  const auto r = run_rhc_infinite(p, cfg, 10.0);
  v.check(r.error_u <= 1e-6, fmt("exact overtaking error %.2e", r.error_u));

  const auto base = default_data();
  auto gap = [&](double T) {
    const auto a = asymptotic_cost_check(base, s, p.care(), T, 5e-3);
    return std::abs(a.running_cost / T - s.v_star);
  };
  const double ratio = gap(40.0) / gap(10.0);
  v.check(ratio <= 0.25 * 1.3, fmt("average-cost gap ratio T=40/T=10 %.4f", ratio));

  VectorXd delta(2);
  delta << 0.05, -0.02;
  cfg.terminal = TerminalCostSpec::constant(p.care().Pi, s.p_star + delta);
  std::vector<double> err;
  for (std::ptrdiff_t N : {4, 8, 16}) {
    cfg.N = N;
    err.push_back(run_rhc_infinite(p, cfg, static_cast<double>(N)).error_u);
  }
  const double g1 = err[1] / err[0], g2 = err[2] / err[1];
  v.check(g1 <= 2.4 && g2 <= 2.4, fmt("growth per doubling %.3f, %.3f", g1, g2));
  return v;
}

Verdict suboptimality_law() {
  Verdict v;
  const auto rows = zero_mode_sweep(1);
  std::vector<double> x, y;
  double min_gap = INFINITY;
  for (const auto& r : rows) {
    min_gap = std::min(min_gap, r.cost_gap);
    if (r.error_u >= 1e-6 && r.error_u <= 1.0 && r.cost_gap > 0) {
      x.push_back(std::log(r.error_u));
      y.push_back(std::log(r.cost_gap));
    }
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= x.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  v.check(std::abs(slope - 2.0) <= 0.3,
          fmt("slope %.4f over %.0f cells", slope, x.size()));
  v.check(min_gap >= -1e-9, fmt("min cost_gap %.2e", min_gap));
  return v;
}

}  // namespace
}  // namespace lqrhc

int main() {
  using namespace lqrhc;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"CARE correctness", care_correctness},
      {"exact recovery", exact_recovery},
      {"rho flatness", rho_flatness},
      {"decay rates", decay_rates},
      {"turnpike uniformity", turnpike_uniformity},
      {"oracle equivalence", oracle_equivalence},
      {"sensitivity identities", sensitivity_identities},
      {"infinite horizon", infinite_horizon},
      {"suboptimality law", suboptimality_law},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += !v.pass;
    std::printf("%s [%zu] %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
