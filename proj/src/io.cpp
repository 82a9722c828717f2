#include "lqrhc/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lqrhc {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& field,
                       const std::string& what) {
  throw ConfigError(origin + ": field '" + field + "': " + what);
}

double read_number(const json& j, const std::string& origin,
                   const std::string& field) {
  if (!j.is_number()) fail(origin, field, "expected a number");
  return j.get<double>();
}

VectorXd read_vector(const json& j, const std::string& origin,
                     const std::string& field) {
  if (!j.is_array()) fail(origin, field, "expected an array of numbers");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(origin, field, "expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

MatrixXd read_matrix(const json& j, const std::string& origin,
                     const std::string& field) {
  if (!j.is_array() || j.empty()) {
    fail(origin, field, "expected a nonempty array of rows");
  }
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  MatrixXd M(static_cast<Eigen::Index>(j.size()),
             static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      fail(origin, field, "rows must be arrays of equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) fail(origin, field, "entries must be numbers");
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          j[r][c].get<double>();
    }
  }
  return M;
}

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

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read file '" + path.string() + "'");
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": invalid JSON: " + e.what());
  }
}

const json& lookup(const json& doc, const std::string& key,
                   const std::string& origin) {
  if (doc.is_object()) {
    if (!doc.contains(key)) fail(origin, key, "missing");
    return doc.at(key);
  }
  return doc;
}

bool same(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
}

}  // namespace

ProblemFile problem_from_json_text(const std::string& text,
                                   const std::string& origin) {
  const json doc = parse_json(text, origin);
  if (!doc.is_object()) throw ConfigError(origin + ": expected a JSON object");
  for (const char* key : {"A", "B", "C", "alpha", "T_bar"}) {
    if (!doc.contains(key)) fail(origin, key, "missing");
  }
  ProblemFile pf;
  ProblemData& d = pf.data;
  d.A = read_matrix(doc.at("A"), origin, "A");
  d.B = read_matrix(doc.at("B"), origin, "B");
  d.C = read_matrix(doc.at("C"), origin, "C");
  d.alpha = read_number(doc.at("alpha"), origin, "alpha");
  d.T_bar = read_number(doc.at("T_bar"), origin, "T_bar");
  const auto n = d.A.rows();
  const auto m = d.B.cols();
  auto vec = [&](const char* key, Eigen::Index size) -> VectorXd {
    if (!doc.contains(key)) return VectorXd::Zero(size);
    VectorXd v = read_vector(doc.at(key), origin, key);
    if (v.size() != size) {
      fail(origin, key, "expected " + std::to_string(size) + " entries");
    }
    return v;
  };
  d.f_star = vec("f_star", n);
  d.g_star = vec("g_star", n);
  d.h_star = vec("h_star", m);
  d.q = vec("q", n);
  d.y0 = vec("y0", n);
  d.Q = doc.contains("Q") ? read_matrix(doc.at("Q"), origin, "Q")
                          : MatrixXd::Zero(n, n);
  if (doc.contains("h")) pf.h = read_number(doc.at("h"), origin, "h");
  if (d.A.cols() != n) fail(origin, "A", "must be square");
  if (d.B.rows() != n) fail(origin, "B", "row count must match A");
  if (d.C.cols() != n) fail(origin, "C", "column count must match A");
  if (d.Q.rows() != n || d.Q.cols() != n) fail(origin, "Q", "must be n x n");
  if (!(pf.h > 0.0)) throw ConfigError("h must be positive");
  return pf;
}

std::string problem_to_json_text(const ProblemFile& pf) {
  const ProblemData& d = pf.data;
  json doc;
  doc["A"] = to_json(d.A);
  doc["B"] = to_json(d.B);
  doc["C"] = to_json(d.C);
  doc["alpha"] = d.alpha;
  doc["f_star"] = to_json(d.f_star);
  doc["g_star"] = to_json(d.g_star);
  doc["h_star"] = to_json(d.h_star);
  doc["Q"] = to_json(d.Q);
  doc["q"] = to_json(d.q);
  doc["y0"] = to_json(d.y0);
  doc["T_bar"] = d.T_bar;
  doc["h"] = pf.h;
  return doc.dump(2) + "\n";
}

ProblemFile load_problem(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("problem file '" + path.string() + "' does not exist");
  }
  return problem_from_json_text(read_text(path), path.string());
}

void save_problem(const std::filesystem::path& path, const ProblemFile& pf) {
  write_file_atomic(path, problem_to_json_text(pf));
}

VectorXd load_vector(const std::filesystem::path& path, const std::string& key) {
  const std::string origin = path.string();
  const json doc = parse_json(read_text(path), origin);
  return read_vector(lookup(doc, key, origin), origin, key);
}

MatrixXd load_matrix(const std::filesystem::path& path, const std::string& key) {
  const std::string origin = path.string();
  const json doc = parse_json(read_text(path), origin);
  return read_matrix(lookup(doc, key, origin), origin, key);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string trajectory_csv(const Trajectory& traj) {
  check_trajectory(traj);
  const auto n = traj.states.rows();
  const auto m = traj.controls.rows();
  std::ostringstream os;
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",y_" << i;
  for (Eigen::Index i = 1; i <= m; ++i) os << ",u_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",p_" << i;
  os << "\n";
  for (std::ptrdiff_t k = 0; k <= traj.grid.K; ++k) {
    os << format_double(traj.grid.node(k));
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ',' << format_double(traj.states(i, k));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      os << ',';
      if (k > 0) os << format_double(traj.controls(i, k - 1));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ',';
      if (traj.has_costates()) os << format_double(traj.costates(i, k));
    }
    os << "\n";
  }
  return os.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "tau,T,N,error_u,error_y,cost_gap,rho,predicted_bound,status\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    for (char& c : status) {
      if (c == ',' || c == '\n' || c == '"') c = ';';
    }
    os << format_double(r.tau) << ',' << format_double(r.T) << ',' << r.N
       << ',' << format_double(r.error_u) << ',' << format_double(r.error_y)
       << ',' << format_double(r.cost_gap) << ',' << format_double(r.rho)
       << ',' << format_double(r.predicted_bound) << ',' << status << "\n";
  }
  return os.str();
}

std::string sweep_matrix_csv(const std::vector<SweepRow>& rows,
                             const std::vector<double>& tau_list,
                             const std::vector<double>& T_list,
                             bool hundred_rho) {
  std::ostringstream os;
  os << "tau\\T";
  for (double T : T_list) os << ',' << format_double(T);
  os << "\n";
  for (double tau : tau_list) {
    os << format_double(tau);
    for (double T : T_list) {
      os << ',';
      for (const auto& r : rows) {
        if (!same(r.tau, tau) || !same(r.T, T)) continue;
        if (hundred_rho) {
          if (std::isfinite(r.rho)) {
            os << static_cast<long long>(std::llround(100.0 * r.rho));
          }
        } else {
          os << format_double(r.error_u);
        }
        break;
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace lqrhc
