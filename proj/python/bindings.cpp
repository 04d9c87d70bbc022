#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <string>
#include <vector>

#include "iga/benchmarks.hpp"
#include "iga/cli.hpp"
#include "iga/dual_basis.hpp"
#include "iga/dynamics.hpp"
#include "iga/errors.hpp"

namespace py = pybind11;
using namespace iga;

namespace {

std::vector<std::vector<double>> to_rows(const DenseMatrix& m) {
    std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
    return rows;
}

// Python values become configuration strings: bools as true/false, sequences
// as comma-separated lists.
std::string config_value(const py::handle& value) {
    if (py::isinstance<py::bool_>(value)) return value.cast<bool>() ? "true" : "false";
    if (py::isinstance<py::str>(value)) return value.cast<std::string>();
    if (py::isinstance<py::sequence>(value)) {
        std::string out;
        for (const auto& item : value.cast<py::sequence>()) out += (out.empty() ? "" : ",") + config_value(item);
        return out;
    }
    return py::str(value).cast<std::string>();
}

RunConfig run_config(Experiment e, const py::dict& options) {
    KeyValueConfig config;
    for (const auto& [key, value] : options) {
        const auto name = key.cast<std::string>();
        config.set(name, config_value(value), "option '" + name + "'");
    }
    return make_run_config(e, config);
}

// {"metadata": {...}, "columns": {name: [values]}}; numeric columns become floats.
py::dict table_dict(const CsvTable& t) {
    py::dict metadata, columns;
    for (const auto& [k, v] : t.metadata) metadata[py::str(k)] = v;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        bool numeric = true;
        std::vector<double> values;
        for (const auto& row : t.rows) {
            if (row[c].empty()) {
                values.push_back(std::nan(""));
                continue;
            }
            std::size_t used = 0;
            try {
                values.push_back(std::stod(row[c], &used));
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != row[c].size()) {
                numeric = false;
                break;
            }
        }
        if (numeric) {
            columns[py::str(t.header[c])] = values;
        } else {
            py::list text;
            for (const auto& row : t.rows) text.append(row[c]);
            columns[py::str(t.header[c])] = text;
        }
    }
    py::dict out;
    out["metadata"] = metadata;
    out["columns"] = columns;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Explicit dynamics with approximate dual spline bases";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("bessel_zero", &bessel_zero, py::arg("n"), py::arg("k"), "k-th positive zero of J_n");
    m.def("string_frequency", &string_frequency, py::arg("k"), "k-th exact angular frequency of the unit string");
    m.def("stability_limit", &scheme_stability_limit, py::arg("scheme"),
          "imaginary-axis stability limit of a named time integration scheme");

    m.def(
        "approximate_dual",
        [](std::size_t elements, int degree) { return to_rows(approximate_dual(uniform_space(elements, degree)).S().to_dense()); },
        py::arg("elements"), py::arg("degree"),
        "dense coefficient matrix S of the approximate dual basis on a uniform open knot vector");
    m.def(
        "duality_matrix",
        [](std::size_t elements, int degree) { return to_rows(approximate_dual(uniform_space(elements, degree)).coupling()); },
        py::arg("elements"), py::arg("degree"), "dense product S G");
    m.def(
        "quasi_project",
        [](std::size_t elements, int degree, const std::function<double(double)>& f, bool left, bool right) {
            const auto basis = approximate_dual(uniform_space(elements, degree));
            if (!left && !right) return quasi_project(basis, f);
            return quasi_project(constrain_dual(basis, left, right), f);
        },
        py::arg("elements"), py::arg("degree"), py::arg("f"), py::arg("left") = false, py::arg("right") = false,
        "spline coefficients of the quasi-projection of f on [0, 1], optionally vanishing at either end");
    m.def(
        "evaluate",
        [](std::size_t elements, int degree, const std::vector<double>& coeffs, double x) {
            return evaluate(uniform_space(elements, degree), coeffs, x);
        },
        py::arg("elements"), py::arg("degree"), py::arg("coefficients"), py::arg("x"));

    m.def(
        "run_spectrum", [](const py::dict& o) { return table_dict(run_spectrum(run_config(Experiment::spectrum, o))); },
        py::arg("options") = py::dict());
    m.def(
        "run_project", [](const py::dict& o) { return table_dict(run_project(run_config(Experiment::project, o))); },
        py::arg("options") = py::dict());
    m.def(
        "run_stability",
        [](const py::dict& o) { return table_dict(run_stability(run_config(Experiment::stability, o))); },
        py::arg("options") = py::dict());
    m.def(
        "run_annulus",
        [](const py::dict& o) { return table_dict(run_annulus(run_config(Experiment::annulus, o)).summary); },
        py::arg("options") = py::dict());
    m.def(
        "run_experiment",
        [](const std::string& experiment, const py::dict& o) {
            return run_experiment(run_config(parse_experiment(experiment), o));
        },
        py::arg("experiment"), py::arg("options") = py::dict(), "runs an experiment and returns the written CSV paths");
}
