#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gravdec/clifford.hpp"
#include "gravdec/runner.hpp"

namespace py = pybind11;
using namespace gravdec;

namespace {

noise::KernelType kernel_type(const std::string& name) {
  if (name == "gaussian") return noise::KernelType::gaussian;
  if (name == "exponential") return noise::KernelType::exponential;
  if (name == "delta") return noise::KernelType::delta;
  throw py::value_error("unknown kernel '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gravitational decoherence simulator";

  py::register_exception<config::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<dynamics::GuardError>(m, "GuardError", PyExc_RuntimeError);

  py::class_<config::ExperimentConfig>(m, "Config")
      .def_static("parse", &config::parse, py::arg("text"))
      .def_static("load", &config::load, py::arg("path"))
      .def("serialize", &config::serialize)
      .def_property_readonly("mode", [](const config::ExperimentConfig& c) { return config::mode_name(c.run.mode); })
      .def_property(
          "seed", [](const config::ExperimentConfig& c) { return c.run.seed; },
          [](config::ExperimentConfig& c, std::uint64_t s) { c.run.seed = s; })
      .def("__eq__", [](const config::ExperimentConfig& a, const config::ExperimentConfig& b) { return a == b; });

  py::class_<runner::Check>(m, "Check")
      .def_readonly("name", &runner::Check::name)
      .def_readonly("value", &runner::Check::value)
      .def_readonly("limit", &runner::Check::limit)
      .def_readonly("passed", &runner::Check::pass)
      .def("__repr__", [](const runner::Check& c) {
        return "Check(" + c.name + "=" + config::format_double(c.value) + (c.pass ? ", pass)" : ", fail)");
      });

  py::class_<runner::Outcome>(m, "Outcome")
      .def_readonly("exit_code", &runner::Outcome::exit_code)
      .def_readonly("out_dir", &runner::Outcome::out_dir)
      .def_readonly("checks", &runner::Outcome::checks)
      .def_readonly("notes", &runner::Outcome::notes)
      .def_readonly("error", &runner::Outcome::error);

  py::class_<runner::Validation>(m, "Validation")
      .def_readonly("errors", &runner::Validation::errors)
      .def_readonly("warnings", &runner::Validation::warnings)
      .def_readonly("notes", &runner::Validation::notes)
      .def_readonly("exit_code", &runner::Validation::exit_code)
      .def_readonly("suggested_dt", &runner::Validation::suggested_dt)
      .def("text", &runner::Validation::text);

  m.def(
      "run",
      [](const config::ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<std::string> out_dir,
         unsigned threads) {
        py::gil_scoped_release release;
        return runner::run(cfg, {seed, out_dir, threads});
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("out_dir") = py::none(), py::arg("threads") = 1,
      "Run an experiment; failures are reported through Outcome.exit_code.");
  m.def("validate", &runner::validate, py::arg("config"));

  m.def("verify_identities", [] {
    const auto r = clifford::verify_identity_suite();
    return py::make_tuple(r.checks, r.failures);
  });

  m.def(
      "lattice_covariance",
      [](const std::string& kernel, double ell, int n, double spacing, int dim) {
        const Grid g{dim, n, spacing};
        g.validate();
        return noise::lattice_covariance({kernel_type(kernel), ell}, g);
      },
      py::arg("kernel"), py::arg("ell") = 1.0, py::arg("n") = 16, py::arg("spacing") = 1.0, py::arg("dim") = 1,
      "Kernel correlation C(x) on the lattice, indexed by site offset.");

  m.def(
      "fit_decay_rate",
      [](std::vector<double> times, std::vector<double> values) {
        diagnostics::CoherenceSeries s;
        s.times = std::move(times);
        s.values = std::move(values);
        const auto f = diagnostics::fit_decay_rate(s);
        py::dict d;
        d["gamma"] = f.gamma;
        d["ci95"] = f.ci95;
        d["r2"] = f.r2;
        d["points"] = f.points;
        d["truncated"] = f.truncated;
        return d;
      },
      py::arg("times"), py::arg("values"));

  m.def(
      "compare_models",
      [](const std::vector<std::vector<double>>& h, double spacing, double hbar, double c, double mass, double e) {
        if (h.size() != static_cast<std::size_t>(noise::kComponents))
          throw py::value_error("expected 10 metric components");
        const Grid g{1, static_cast<int>(h[0].size()), spacing};
        g.validate();
        dynamics::MetricField f;
        for (std::size_t k = 0; k < h.size(); ++k) {
          if (h[k].size() != g.sites()) throw py::value_error("metric components differ in length");
          f.h[k] = h[k];
        }
        return diagnostics::compare_models(g, {hbar, c, mass, e}, dynamics::EMField::off(g), f).max_abs_diff;
      },
      py::arg("h"), py::arg("spacing") = 1.0, py::arg("hbar") = 1.0, py::arg("c") = 1.0, py::arg("m") = 1.0,
      py::arg("e") = 1.0, "Max |H_F - H_B| for a 1D metric sample (10 components, fields off).");

  m.attr("EXIT_OK") = runner::kExitOk;
  m.attr("EXIT_ERROR") = runner::kExitError;
  m.attr("EXIT_SCHEMA") = runner::kExitSchema;
  m.attr("EXIT_GUARD") = runner::kExitGuard;
  m.attr("EXIT_INVARIANT") = runner::kExitInvariant;
}
