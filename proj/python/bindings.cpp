#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lqrhc/io.hpp"
#include "lqrhc/rhc.hpp"

namespace py = pybind11;
using namespace lqrhc;

namespace {

SegmentProblem make_segment(const ProblemData& data, const VectorXd& y_init,
                            const MatrixXd& Qterm, const VectorXd& qterm,
                            double T, double h) {
  return {data, y_init, Qterm, qterm, make_grid(0.0, T, h)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Receding-horizon control of linear-quadratic problems";

  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<ProblemData>(m, "ProblemData")
      .def(py::init<>())
      .def_readwrite("A", &ProblemData::A)
      .def_readwrite("B", &ProblemData::B)
      .def_readwrite("C", &ProblemData::C)
      .def_readwrite("alpha", &ProblemData::alpha)
      .def_readwrite("f_star", &ProblemData::f_star)
      .def_readwrite("g_star", &ProblemData::g_star)
      .def_readwrite("h_star", &ProblemData::h_star)
      .def_readwrite("Q", &ProblemData::Q)
      .def_readwrite("q", &ProblemData::q)
      .def_readwrite("y0", &ProblemData::y0)
      .def_readwrite("T_bar", &ProblemData::T_bar)
      .def_property_readonly("n", &ProblemData::n)
      .def_property_readonly("m", &ProblemData::m);

  m.def("load_problem", [](const std::filesystem::path& path) {
    const auto pf = load_problem(path);
    return py::make_tuple(pf.data, pf.h);
  }, py::arg("path"), "Returns (ProblemData, h) from a problem JSON file.");
  m.def("problem_from_json", [](const std::string& text) {
    const auto pf = problem_from_json_text(text);
    return py::make_tuple(pf.data, pf.h);
  }, py::arg("text"));
  m.def("problem_to_json", [](const ProblemData& d, double h) {
    return problem_to_json_text({d, h});
  }, py::arg("data"), py::arg("h") = kDefaultStep);
  m.def("validate_problem",
        [](const ProblemData& d) { return validate_problem(d).violations; },
        py::arg("data"), "List of violated invariants; empty when valid.");

  py::class_<CareSolution>(m, "CareSolution")
      .def_readonly("Pi", &CareSolution::Pi)
      .def_readonly("A_pi", &CareSolution::A_pi)
      .def_readonly("lambda_", &CareSolution::lambda)
      .def_readonly("gain", &CareSolution::gain)
      .def_readonly("residual", &CareSolution::residual);
  m.def("solve_care", &solve_care, py::arg("data"));

  py::class_<SteadyState>(m, "SteadyState")
      .def_readonly("y_star", &SteadyState::y_star)
      .def_readonly("u_star", &SteadyState::u_star)
      .def_readonly("p_star", &SteadyState::p_star)
      .def_readonly("v_star", &SteadyState::v_star)
      .def_readonly("q_tilde", &SteadyState::q_tilde)
      .def_readonly("kkt_residual", &SteadyState::kkt_residual);
  m.def("solve_static", &solve_static, py::arg("data"), py::arg("care"));

  py::class_<Grid>(m, "Grid")
      .def_readonly("t0", &Grid::t0)
      .def_readonly("t1", &Grid::t1)
      .def_readonly("h", &Grid::h)
      .def_readonly("K", &Grid::K)
      .def("node", &Grid::node);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("grid", &Trajectory::grid)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("controls", &Trajectory::controls)
      .def_readonly("costates", &Trajectory::costates);

  py::class_<LqSolution>(m, "LqSolution")
      .def_readonly("traj", &LqSolution::traj)
      .def_readonly("value", &LqSolution::value)
      .def_readonly("kkt_residual", &LqSolution::kkt_residual);
  m.def("solve_lq",
        [](const ProblemData& d, const VectorXd& y_init, const MatrixXd& Qterm,
           const VectorXd& qterm, double T, double h) {
          return solve_lq(make_segment(d, y_init, Qterm, qterm, T, h));
        },
        py::arg("data"), py::arg("y_init"), py::arg("Qterm"), py::arg("qterm"),
        py::arg("T"), py::arg("h") = kDefaultStep);
  m.def("value_and_gradient",
        [](const ProblemData& d, const VectorXd& y_init, const MatrixXd& Qterm,
           const VectorXd& qterm, double T, double h) {
          const auto vg =
              value_and_gradient(make_segment(d, y_init, Qterm, qterm, T, h));
          return py::make_tuple(vg.value, vg.gradient);
        },
        py::arg("data"), py::arg("y_init"), py::arg("Qterm"), py::arg("qterm"),
        py::arg("T"), py::arg("h") = kDefaultStep);
  m.def("solve_full_problem", &solve_full_problem, py::arg("data"),
        py::arg("h") = kDefaultStep);

  py::class_<RiccatiFlow>(m, "RiccatiFlow")
      .def_readonly("h", &RiccatiFlow::h)
      .def_readonly("P_seq", &RiccatiFlow::P_seq)
      .def_readonly("G_seq", &RiccatiFlow::G_seq);
  m.def("riccati_flow", &riccati_flow, py::arg("data"), py::arg("Q_T"),
        py::arg("T"), py::arg("h") = kDefaultStep);

  py::class_<TurnpikeReport>(m, "TurnpikeReport")
      .def_readonly("fitted_M", &TurnpikeReport::fitted_M)
      .def_readonly("left_rate", &TurnpikeReport::left_rate)
      .def_readonly("right_rate", &TurnpikeReport::right_rate)
      .def_readonly("max_mid_deviation", &TurnpikeReport::max_mid_deviation)
      .def_readonly("degenerate", &TurnpikeReport::degenerate)
      .def_readonly("times", &TurnpikeReport::times)
      .def_readonly("deviation", &TurnpikeReport::deviation)
      .def_readonly("envelope", &TurnpikeReport::envelope);
  m.def("turnpike_check", &turnpike_check, py::arg("traj"), py::arg("steady"),
        py::arg("lambda_"));

  py::enum_<TerminalMode>(m, "TerminalMode")
      .value("Zero", TerminalMode::Zero)
      .value("Constant", TerminalMode::Constant)
      .value("Exact", TerminalMode::Exact);

  py::class_<TerminalCostSpec>(m, "TerminalCostSpec")
      .def_readwrite("mode", &TerminalCostSpec::mode)
      .def_readwrite("pi_tilde", &TerminalCostSpec::pi_tilde)
      .def_readwrite("g_tilde", &TerminalCostSpec::g_tilde)
      .def_readwrite("p_tilde", &TerminalCostSpec::p_tilde)
      .def_static("zero", &TerminalCostSpec::zero, py::arg("p_tilde"))
      .def_static("constant", &TerminalCostSpec::constant, py::arg("pi_tilde"),
                  py::arg("p_tilde"), py::arg("g_tilde") = MatrixXd())
      .def_static("exact", &TerminalCostSpec::exact);

  py::class_<RhcConfig>(m, "RhcConfig")
      .def(py::init([](double tau, double T, std::ptrdiff_t N,
                       TerminalCostSpec terminal, double h) {
             return RhcConfig{tau, T, N, std::move(terminal), h};
           }),
           py::arg("tau"), py::arg("T"), py::arg("N"), py::arg("terminal"),
           py::arg("h") = kDefaultStep)
      .def_readwrite("tau", &RhcConfig::tau)
      .def_readwrite("T", &RhcConfig::T)
      .def_readwrite("N", &RhcConfig::N)
      .def_readwrite("terminal", &RhcConfig::terminal)
      .def_readwrite("h", &RhcConfig::h);
  m.def("default_iterations", &default_iterations, py::arg("T_bar"),
        py::arg("tau"), py::arg("T"));

  py::class_<RhcProblem, std::shared_ptr<RhcProblem>>(m, "RhcProblem")
      .def(py::init<ProblemData, double>(), py::arg("data"),
           py::arg("h") = kDefaultStep,
           py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("data", &RhcProblem::data)
      .def_property_readonly("care", &RhcProblem::care)
      .def_property_readonly("steady", &RhcProblem::steady)
      .def_property_readonly("h", &RhcProblem::h)
      .def_property_readonly("reference", &RhcProblem::reference);

  py::class_<RhcIteration>(m, "RhcIteration")
      .def_readonly("n", &RhcIteration::n)
      .def_readonly("handoff_state_error", &RhcIteration::handoff_state_error)
      .def_readonly("segment_error", &RhcIteration::segment_error);

  py::class_<RhcResult>(m, "RhcResult")
      .def_readonly("traj", &RhcResult::traj)
      .def_readonly("error_u", &RhcResult::error_u)
      .def_readonly("error_y", &RhcResult::error_y)
      .def_readonly("cost_gap", &RhcResult::cost_gap)
      .def_readonly("per_iter", &RhcResult::per_iter);

  m.def("run_rhc_finite", &run_rhc_finite, py::arg("problem"), py::arg("cfg"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_rhc_infinite", &run_rhc_infinite, py::arg("problem"),
        py::arg("cfg"), py::arg("T_end"),
        py::call_guard<py::gil_scoped_release>());
  m.def("rho_statistic", &rho_statistic, py::arg("error_u"), py::arg("tau"),
        py::arg("T"), py::arg("lambda_"));
  m.def("predicted_bound",
        [](const RhcProblem& p, const RhcConfig& cfg) {
          return predicted_bound(p, cfg).bound;
        },
        py::arg("problem"), py::arg("cfg"));

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("tau", &SweepRow::tau)
      .def_readonly("T", &SweepRow::T)
      .def_readonly("N", &SweepRow::N)
      .def_readonly("error_u", &SweepRow::error_u)
      .def_readonly("error_y", &SweepRow::error_y)
      .def_readonly("cost_gap", &SweepRow::cost_gap)
      .def_readonly("rho", &SweepRow::rho)
      .def_readonly("predicted_bound", &SweepRow::predicted_bound)
      .def_readonly("status", &SweepRow::status);
  m.def("sweep",
        [](const RhcProblem& p, std::vector<double> tau_list,
           std::vector<double> T_list, TerminalCostSpec terminal,
           std::optional<std::ptrdiff_t> N, unsigned jobs) {
          py::gil_scoped_release release;
          return sweep(p, {std::move(tau_list), std::move(T_list),
                           std::move(terminal), N, jobs});
        },
        py::arg("problem"), py::arg("tau_list"), py::arg("T_list"),
        py::arg("terminal"), py::arg("N") = std::nullopt, py::arg("jobs") = 1);
  m.def("sweep_csv", &sweep_csv, py::arg("rows"));
}
