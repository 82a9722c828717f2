#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lqrhc/io.hpp"

namespace lqrhc::cli {

/// Fully resolved command line of the `lqrhc` tool.
struct RunConfig {
  std::string command;  // validate, care, static, solve, turnpike-check,
                        // rhc, sweep, infinite
  std::string problem_path;
  ProblemFile problem;

  bool json = false;
  std::string out;      // CSV output (trajectory, sweep table, node report)
  std::string summary;  // JSON summary; stdout when empty
  std::string figures;  // prefix for the two figure matrices

  double tau = 1.0;
  double T = 3.0;
  std::optional<std::ptrdiff_t> N;
  double T_end = 0.0;  // infinite: defaults to N·τ
  TerminalMode mode = TerminalMode::Zero;
  std::string p_tilde = "pstar";  // pstar | zero | path to JSON vector
  std::string pi_tilde = "pi";    // pi | zero | path to JSON matrix
  std::optional<VectorXd> p_tilde_value;
  std::optional<MatrixXd> pi_tilde_value;

  std::vector<double> tau_list;
  std::vector<double> T_list;
  unsigned jobs = 1;
};

/// `start:stop:step` (inclusive, endpoints snapped within 1e-9), a comma list,
/// or a single number. Throws ConfigError naming `field`.
std::vector<double> parse_list(const std::string& text, const std::string& field);

/// Arguments exclude the program name. Throws ConfigError on unknown flags,
/// unreadable files and schema violations; `--help` throws HelpRequested.
RunConfig parse_config(const std::vector<std::string>& args);

struct HelpRequested {
  std::string text;
};

/// Executes a parsed command; returns the process exit status.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// parse_config + run with diagnostics on `err`.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace lqrhc::cli
