#include "lqrhc/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lqrhc/riccati.hpp"
#include "lqrhc/turnpike.hpp"

namespace lqrhc::cli {
namespace {

using nlohmann::json;

json to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const MatrixXd& M) {
  json out = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

double parse_number(const std::string& text, const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw ConfigError(field + ": '" + text + "' is not a number");
  }
  return v;
}

unsigned default_jobs() {
  if (const char* env = std::getenv("TURNPIKE_RHC_JOBS")) {
    const double v = parse_number(env, "TURNPIKE_RHC_JOBS");
    if (v >= 1.0 && v == std::floor(v)) return static_cast<unsigned>(v);
    throw ConfigError("TURNPIKE_RHC_JOBS must be a positive integer");
  }
  return 1;
}

TerminalCostSpec resolve_terminal(const RunConfig& cfg, const CareSolution& care,
                                  const SteadyState& steady) {
  const auto n = steady.p_star.size();
  VectorXd p;
  if (cfg.p_tilde == "pstar") {
    p = steady.p_star;
  } else if (cfg.p_tilde == "zero") {
    p = VectorXd::Zero(n);
  } else {
    p = *cfg.p_tilde_value;
  }
  if (p.size() != n) throw ConfigError("--p-tilde: expected a vector of size n");
  switch (cfg.mode) {
    case TerminalMode::Zero:
      return TerminalCostSpec::zero(p);
    case TerminalMode::Constant: {
      MatrixXd pi;
      if (cfg.pi_tilde == "pi") {
        pi = care.Pi;
      } else if (cfg.pi_tilde == "zero") {
        pi = MatrixXd::Zero(n, n);
      } else {
        pi = *cfg.pi_tilde_value;
      }
      if (pi.rows() != n || pi.cols() != n) {
        throw ConfigError("--pi-tilde: expected an n x n matrix");
      }
      return TerminalCostSpec::constant(pi, p);
    }
    case TerminalMode::Exact:
      return TerminalCostSpec::exact();
  }
  return {};
}

void emit_json(const json& doc, const std::string& path, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

json rhc_summary(const RunConfig& cfg, const RhcConfig& rc,
                 const RhcResult& res, double lambda) {
  json s;
  s["tau"] = rc.tau;
  s["T"] = rc.T;
  s["N"] = rc.N;
  s["mode"] = to_string(rc.terminal.mode);
  s["p_tilde"] = cfg.p_tilde;
  s["error_u"] = res.error_u;
  s["error_y"] = res.error_y;
  s["cost_gap"] = res.cost_gap;
  if (res.error_u > 0.0) {
    s["rho"] = rho_statistic(res.error_u, rc.tau, rc.T, lambda);
  } else {
    s["rho"] = nullptr;
  }
  json iters = json::array();
  for (const auto& it : res.per_iter) {
    iters.push_back({{"n", it.n},
                     {"handoff_state_error", it.handoff_state_error},
                     {"segment_error", it.segment_error}});
  }
  s["per_iter"] = std::move(iters);
  return s;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const ValidationReport rep = validate_problem(cfg.problem.data);
  if (rep.ok()) {
    out << "ok\n";
    return 0;
  }
  for (const auto& v : rep.violations) out << "violation: " << v << "\n";
  return 1;
}

int cmd_care(const RunConfig& cfg, std::ostream& out) {
  const CareSolution care = solve_care(cfg.problem.data);
  const Eigen::VectorXcd eig = care.A_pi.eigenvalues();
  if (cfg.json) {
    json doc;
    doc["Pi"] = to_json(care.Pi);
    doc["lambda"] = care.lambda;
    json e = json::array();
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      e.push_back({eig(i).real(), eig(i).imag()});
    }
    doc["eig_A_pi"] = std::move(e);
    doc["residual"] = care.residual;
    emit_json(doc, cfg.summary, out);
    return 0;
  }
  const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, ", ", "\n", "  [", "]");
  out << "Pi =\n" << care.Pi.format(fmt) << "\n";
  out << "lambda = " << format_double(care.lambda) << "\n";
  out << "eig(A_pi) =";
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    out << " " << format_double(eig(i).real());
    if (eig(i).imag() != 0.0) {
      out << (eig(i).imag() > 0 ? "+" : "") << format_double(eig(i).imag())
          << "i";
    }
  }
  out << "\nresidual = " << format_double(care.residual) << "\n";
  return 0;
}

int cmd_static(const RunConfig& cfg, std::ostream& out) {
  const CareSolution care = solve_care(cfg.problem.data);
  const SteadyState s = solve_static(cfg.problem.data, care);
  json doc;
  doc["y_star"] = to_json(s.y_star);
  doc["u_star"] = to_json(s.u_star);
  doc["p_star"] = to_json(s.p_star);
  doc["v_star"] = s.v_star;
  doc["q_tilde"] = to_json(s.q_tilde);
  doc["kkt_residual"] = s.kkt_residual;
  emit_json(doc, cfg.summary, out);
  return 0;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  const LqSolution sol = solve_full_problem(cfg.problem.data, cfg.problem.h);
  if (!cfg.out.empty()) write_file_atomic(cfg.out, trajectory_csv(sol.traj));
  emit_json({{"value", sol.value}, {"kkt_residual", sol.kkt_residual}},
            cfg.summary, out);
  return 0;
}

int cmd_turnpike(const RunConfig& cfg, std::ostream& out) {
  const auto& d = cfg.problem.data;
  const CareSolution care = solve_care(d);
  const SteadyState s = solve_static(d, care);
  const LqSolution sol = solve_full_problem(d, cfg.problem.h);
  const TurnpikeReport rep = turnpike_check(sol.traj, s, care.lambda);
  if (!cfg.out.empty()) {
    std::ostringstream os;
    os << "t,deviation,envelope\n";
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      os << format_double(rep.times[k]) << ',' << format_double(rep.deviation[k])
         << ',' << format_double(rep.envelope[k]) << "\n";
    }
    write_file_atomic(cfg.out, os.str());
  }
  json doc;
  doc["lambda"] = care.lambda;
  doc["fitted_M"] = rep.fitted_M;
  doc["degenerate"] = rep.degenerate;
  doc["left_rate"] = rep.degenerate ? json(nullptr) : json(rep.left_rate);
  doc["right_rate"] = rep.degenerate ? json(nullptr) : json(rep.right_rate);
  doc["left_fit_residual"] = rep.left_fit_residual;
  doc["right_fit_residual"] = rep.right_fit_residual;
  doc["max_mid_deviation"] = rep.max_mid_deviation;
  emit_json(doc, cfg.summary, out);
  return 0;
}

int cmd_rhc(const RunConfig& cfg, std::ostream& out) {
  const auto& d = cfg.problem.data;
  const RhcProblem problem(d, cfg.problem.h);
  RhcConfig rc;
  rc.tau = cfg.tau;
  rc.T = cfg.T;
  rc.h = cfg.problem.h;
  rc.N = cfg.N ? *cfg.N : default_iterations(d.T_bar, cfg.tau, cfg.T);
  rc.terminal = resolve_terminal(cfg, problem.care(), problem.steady());
  const RhcResult res = run_rhc_finite(problem, rc);
  if (!cfg.out.empty()) write_file_atomic(cfg.out, trajectory_csv(res.traj));
  json s = rhc_summary(cfg, rc, res, problem.care().lambda);
  s["predicted_bound"] = predicted_bound(problem, rc).bound;
  emit_json(s, cfg.summary, out);
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const RhcProblem problem(cfg.problem.data, cfg.problem.h);
  SweepOptions opt;
  opt.tau_list = cfg.tau_list;
  opt.T_list = cfg.T_list;
  opt.terminal = resolve_terminal(cfg, problem.care(), problem.steady());
  opt.N = cfg.N;
  opt.jobs = cfg.jobs;
  const auto rows = sweep(problem, opt);
  const std::string table = sweep_csv(rows);
  if (cfg.out.empty()) {
    out << table;
  } else {
    write_file_atomic(cfg.out, table);
  }
  if (!cfg.figures.empty()) {
    write_file_atomic(cfg.figures + "_error.csv",
                      sweep_matrix_csv(rows, cfg.tau_list, cfg.T_list, false));
    write_file_atomic(cfg.figures + "_rho100.csv",
                      sweep_matrix_csv(rows, cfg.tau_list, cfg.T_list, true));
  }
  return 0;
}

int cmd_infinite(const RunConfig& cfg, std::ostream& out) {
  const RhcProblem problem(cfg.problem.data, cfg.problem.h);
  RhcConfig rc;
  rc.tau = cfg.tau;
  rc.T = cfg.T;
  rc.h = cfg.problem.h;
  rc.N = cfg.N.value_or(10);
  rc.terminal = resolve_terminal(cfg, problem.care(), problem.steady());
  const double T_end =
      cfg.T_end > 0.0 ? cfg.T_end : static_cast<double>(rc.N) * rc.tau;
  const RhcResult res = run_rhc_infinite(problem, rc, T_end);
  if (!cfg.out.empty()) write_file_atomic(cfg.out, trajectory_csv(res.traj));
  emit_json(rhc_summary(cfg, rc, res, problem.care().lambda), cfg.summary, out);
  return 0;
}

}  // namespace

std::vector<double> parse_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  if (text.empty()) throw ConfigError(field + ": empty list");
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) {
      throw ConfigError(field + ": range must be start:stop:step");
    }
    const double a = parse_number(parts[0], field);
    const double b = parse_number(parts[1], field);
    const double s = parse_number(parts[2], field);
    if (!(s > 0.0) || b < a) {
      throw ConfigError(field + ": range needs step > 0 and stop >= start");
    }
    const auto count = static_cast<std::ptrdiff_t>(std::floor((b - a) / s + 1e-9));
    for (std::ptrdiff_t i = 0; i <= count; ++i) {
      double v = a + static_cast<double>(i) * s;
      const double snapped = std::round(v * 1e9) / 1e9;
      if (std::abs(v - snapped) <= 1e-9) v = snapped;
      if (std::abs(v - b) <= 1e-9) v = b;
      out.push_back(v);
    }
    return out;
  }
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    out.push_back(parse_number(part, field));
  }
  return out;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Linear-quadratic receding-horizon control toolkit", "lqrhc"};
  app.set_help_flag("--help", "print this help");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  std::optional<double> h;
  std::string mode, tau_list, T_list;
  std::optional<long long> N;
  std::optional<unsigned> jobs;

  app.add_option("--problem", cfg.problem_path, "problem JSON file")->required();
  app.add_option("--h", h, "time step (overrides the problem file)");

  auto* validate = app.add_subcommand("validate", "check the problem invariants");
  auto* care = app.add_subcommand("care", "solve the algebraic Riccati equation");
  care->add_flag("--json", cfg.json, "emit JSON");
  care->add_option("--summary", cfg.summary, "write the report here");
  auto* stat = app.add_subcommand("static", "solve the steady-state problem");
  stat->add_option("--summary", cfg.summary, "write the report here");
  auto* solve = app.add_subcommand("solve", "solve the problem on [0, T_bar]");
  auto* turnpike =
      app.add_subcommand("turnpike-check", "turnpike envelope diagnostics");
  auto* rhc = app.add_subcommand("rhc", "one finite-horizon receding-horizon run");
  auto* sweep_cmd = app.add_subcommand("sweep", "receding-horizon runs over a tau x T grid");
  auto* infinite =
      app.add_subcommand("infinite", "infinite-horizon receding-horizon run");

  for (auto* sub : {validate, care, stat, solve, turnpike, rhc, sweep_cmd,
                    infinite}) {
    sub->set_help_flag("--help", "print this help");
  }
  for (auto* sub : {solve, turnpike, rhc, infinite}) {
    sub->add_option("--out", cfg.out, "CSV output path");
    sub->add_option("--summary", cfg.summary, "JSON summary path");
  }
  for (auto* sub : {rhc, infinite}) {
    sub->add_option("--tau", cfg.tau, "sampling time");
    sub->add_option("--T", cfg.T, "prediction horizon");
    sub->add_option("--T-end", cfg.T_end, "window end (infinite)");
  }
  for (auto* sub : {rhc, sweep_cmd, infinite}) {
    sub->add_option("--N", N, "iteration count");
    sub->add_option("--mode", mode, "terminal cost: zero, constant, exact");
    sub->add_option("--p-tilde", cfg.p_tilde, "pstar, zero, or a JSON file");
    sub->add_option("--pi-tilde", cfg.pi_tilde, "pi, zero, or a JSON file");
  }
  sweep_cmd->add_option("--tau-list", tau_list, "start:stop:step or a,b,c")
      ->required();
  sweep_cmd->add_option("--T-list", T_list, "start:stop:step or a,b,c")
      ->required();
  sweep_cmd->add_option("--out", cfg.out, "CSV table path (stdout if absent)");
  sweep_cmd->add_option("--jobs", jobs, "worker threads");
  sweep_cmd->add_option("--figures", cfg.figures,
                        "prefix for the error and 100*rho matrices");

  std::vector<const char*> argv{"lqrhc"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();

  cfg.problem = load_problem(cfg.problem_path);
  if (h) cfg.problem.h = *h;
  if (!(cfg.problem.h > 0.0)) throw ConfigError("h must be positive");

  if (N) {
    if (*N < 0) throw ConfigError("--N must be nonnegative");
    cfg.N = static_cast<std::ptrdiff_t>(*N);
  }
  if (mode.empty()) {
    cfg.mode = cfg.command == "infinite" ? TerminalMode::Constant
                                         : TerminalMode::Zero;
  } else {
    try {
      cfg.mode = terminal_mode_from_string(mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--mode: ") + e.what());
    }
  }
  if (cfg.p_tilde != "pstar" && cfg.p_tilde != "zero") {
    cfg.p_tilde_value = load_vector(cfg.p_tilde, "p_tilde");
  }
  if (cfg.pi_tilde != "pi" && cfg.pi_tilde != "zero") {
    cfg.pi_tilde_value = load_matrix(cfg.pi_tilde, "pi_tilde");
  }
  if (cfg.command == "rhc" || cfg.command == "infinite") {
    if (!(cfg.tau > 0.0)) throw ConfigError("--tau must be positive");
    if (!(cfg.T > 0.0)) throw ConfigError("--T must be positive");
  }
  if (cfg.command == "sweep") {
    cfg.tau_list = parse_list(tau_list, "--tau-list");
    cfg.T_list = parse_list(T_list, "--T-list");
    for (double v : cfg.tau_list) {
      if (!(v > 0.0)) throw ConfigError("--tau-list: values must be positive");
    }
    for (double v : cfg.T_list) {
      if (!(v > 0.0)) throw ConfigError("--T-list: values must be positive");
    }
    cfg.jobs = jobs ? *jobs : default_jobs();
    if (cfg.jobs == 0) throw ConfigError("--jobs must be positive");
  }
  return cfg;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.command == "validate") return cmd_validate(cfg, out);
    if (cfg.command == "care") return cmd_care(cfg, out);
    if (cfg.command == "static") return cmd_static(cfg, out);
    if (cfg.command == "solve") return cmd_solve(cfg, out);
    if (cfg.command == "turnpike-check") return cmd_turnpike(cfg, out);
    if (cfg.command == "rhc") return cmd_rhc(cfg, out);
    if (cfg.command == "sweep") return cmd_sweep(cfg, out);
    if (cfg.command == "infinite") return cmd_infinite(cfg, out);
    err << "error: unknown command '" << cfg.command << "'\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << cfg.command << ": " << e.what() << "\n";
    return 1;
  }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunConfig cfg;
  try {
    cfg = parse_config(args);
  } catch (const HelpRequested& help) {
    out << help.text;
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return run(cfg, out, err);
}

}  // namespace lqrhc::cli
