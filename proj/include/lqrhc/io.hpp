#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "lqrhc/model.hpp"
#include "lqrhc/rhc.hpp"

namespace lqrhc {

/// Malformed input file or command line. The message names the offending
/// field or path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

constexpr double kDefaultStep = 5e-3;

struct ProblemFile {
  ProblemData data;
  double h = kDefaultStep;
};

/// Parses a problem document. Required fields: A, B, C, alpha, T_bar.
/// f_star, g_star, h_star, Q, q, y0 default to zero and h to 5e-3.
/// Matrices are row-major arrays of arrays.
ProblemFile problem_from_json_text(const std::string& text,
                                   const std::string& origin = "<string>");
std::string problem_to_json_text(const ProblemFile& problem);

ProblemFile load_problem(const std::filesystem::path& path);
void save_problem(const std::filesystem::path& path, const ProblemFile& problem);

/// Reads a vector from a JSON file holding either an array of numbers or an
/// object with the array under `key`.
VectorXd load_vector(const std::filesystem::path& path, const std::string& key);
/// Reads a matrix (array of arrays) the same way.
MatrixXd load_matrix(const std::filesystem::path& path, const std::string& key);

/// "%.17g".
std::string format_double(double v);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

/// Header t,y_1..y_n,u_1..u_m,p_1..p_n; one row per node, controls at the
/// right endpoint of their interval (blank at t0), costates blank if absent.
std::string trajectory_csv(const Trajectory& traj);

/// Columns tau,T,N,error_u,error_y,cost_gap,rho,predicted_bound,status.
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// τ rows by T columns; cells without a row (τ > T) are left blank.
/// `hundred_rho` selects round(100 ρ) instead of error_u.
std::string sweep_matrix_csv(const std::vector<SweepRow>& rows,
                             const std::vector<double>& tau_list,
                             const std::vector<double>& T_list,
                             bool hundred_rho);

}  // namespace lqrhc
