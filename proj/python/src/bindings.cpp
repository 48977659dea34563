#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lascopf/app.hpp"
#include "lascopf/error.hpp"
#include "lascopf/network.hpp"
#include "lascopf/oracle.hpp"
#include "lascopf/prox.hpp"
#include "lascopf/runner.hpp"

namespace py = pybind11;

namespace {

std::string run_json(const std::string& case_path, const std::string& mode, std::optional<int> horizon,
                     std::optional<std::string> contingencies, int jobs, int max_iter, int rolls) {
    lascopf::RunConfig cfg;
    cfg.case_path = case_path;
    cfg.mode = lascopf::parse_mode(mode);
    cfg.horizon = horizon;
    cfg.contingencies = contingencies;
    cfg.jobs = jobs;
    cfg.pmp.max_iter = max_iter;
    cfg.rolls = rolls;
    lascopf::SolveReport rep;
    {
        py::gil_scoped_release release;
        rep = lascopf::run(cfg);
    }
    return lascopf::report_json(rep, false);
}

py::dict case_summary(const std::string& path) {
    const auto spec = lascopf::read_case_file(path);
    const auto net = lascopf::build_network(spec);
    py::dict d;
    d["name"] = spec.name;
    d["buses"] = spec.buses.size();
    d["generators"] = spec.generators.size();
    d["lines"] = spec.lines.size();
    d["loads"] = spec.loads.size();
    d["terminals"] = net.terminal_count();
    d["horizon"] = spec.horizon;
    d["contingencies"] = spec.contingency_lines;
    return d;
}

double prox_generator_scalar(double a, double b, double p_min, double p_max, double rho, double target) {
    lascopf::GenLocalProblem p;
    p.cost_a = a;
    p.cost_b = b;
    p.p_min = p_min;
    p.p_max = p_max;
    p.ramp_down = -INFINITY;
    p.ramp_up = INFINITY;
    p.slots = {lascopf::GenSlot{1.0, true, 0.0, 0.0, 0.0}};
    p.target_slots = {0};
    return lascopf::prox_generator(p, {{target}, {0.0}, rho}).p[0];
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Look-ahead security-constrained OPF solver core";

    py::register_exception<lascopf::UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<lascopf::ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<lascopf::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<lascopf::BuildError>(m, "BuildError", PyExc_ValueError);
    py::register_exception<lascopf::InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
    py::register_exception<lascopf::DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

    m.def("run_json", &run_json, py::arg("case_path"), py::arg("mode") = "lascopf", py::arg("horizon") = py::none(),
          py::arg("contingencies") = py::none(), py::arg("jobs") = 1, py::arg("max_iter") = 20000,
          py::arg("rolls") = 2, "Run one mode and return the JSON summary (schema version 1).");
    m.def("case_summary", &case_summary, py::arg("path"));
    m.def("prox_generator_scalar", &prox_generator_scalar, py::arg("a"), py::arg("b"), py::arg("p_min"),
          py::arg("p_max"), py::arg("rho"), py::arg("target"),
          "Single-slot generator prox: argmin a p^2 + b p + rho/2 (p - target)^2 over [p_min, p_max].");
    m.def(
        "alpha_at", [](const std::string& schedule, int mu) { return lascopf::alpha_at(lascopf::parse_alpha_schedule(schedule), mu); },
        py::arg("schedule"), py::arg("mu"));
    m.def(
        "stop_threshold",
        [](double eps_abs, int terminals, int layers) {
            lascopf::PmpParams p;
            p.eps_abs = eps_abs;
            return lascopf::stop_thresholds(p, terminals, layers).pri;
        },
        py::arg("eps_abs"), py::arg("terminals"), py::arg("layers"));
}
