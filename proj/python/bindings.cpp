#include "cylgeo/error.hpp"
#include "cylgeo/io.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace cylgeo;

PYBIND11_MODULE(_cylgeo, m) {
  m.doc() = "Discrete energy, reduction and solver for closed geodesics on R x S^N";

  // most recently registered translators are tried first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConstraintViolation>(m, "ConstraintViolation", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Profile>(m, "Profile")
      .def_static("constant", &Profile::constant, py::arg("value"))
      .def_static("gaussian", &Profile::gaussian, py::arg("center") = 0.0, py::arg("width") = 1.0)
      .def_static("odd_decay", &Profile::odd_decay)
      .def_static("bump_pair", &Profile::bump_pair, py::arg("center") = 1.0, py::arg("width") = 1.0)
      .def_static("poly_gaussian", &Profile::poly_gaussian, py::arg("coeffs"),
                  py::arg("center") = 0.0, py::arg("width") = 1.0)
      .def("__call__", &Profile::value, py::arg("s"));

  py::class_<PerturbationForm>(m, "PerturbationForm")
      .def(py::init<int>(), py::arg("n"))
      .def("add_term", &PerturbationForm::add_term, py::arg("profile"), py::arg("block"))
      .def_property_readonly("n", &PerturbationForm::n)
      .def("field", &PerturbationForm::field, py::arg("s"))
      .def_static("isotropic", &builtin::isotropic, py::arg("n"), py::arg("profile"))
      .def_static("diagonal", &builtin::diagonal, py::arg("n"), py::arg("profile"),
                  py::arg("sphere_diag"), py::arg("radial") = 0.0)
      .def_static("odd_decay_anisotropic", &builtin::odd_decay_anisotropic, py::arg("n"))
      .def("to_json", [](const PerturbationForm& f) { return form_to_json(f).dump(); });

  m.def("_form_from_json", [](const std::string& text, int n) {
    return form_from_json(Json::parse(text), n);
  });

  py::class_<CircleParam>(m, "CircleParam")
      .def(py::init([](double r, const Vec& p, const Vec& q) {
             CircleParam c{r, p, q};
             c.validate();
             return c;
           }),
           py::arg("r"), py::arg("p"), py::arg("q"))
      .def_readonly("r", &CircleParam::r)
      .def_readonly("p", &CircleParam::p)
      .def_readonly("q", &CircleParam::q);
  m.def("standard_circle", &standard_circle, py::arg("n"), py::arg("r") = 0.0);

  py::class_<DiscreteLoop>(m, "Loop")
      .def(py::init<const Vec&, const Mat&>(), py::arg("r"), py::arg("x"))
      .def_property_readonly("nodes", &DiscreteLoop::nodes)
      .def_property_readonly("n", &DiscreteLoop::n)
      .def_property_readonly("r", &DiscreteLoop::r_values)
      .def_property_readonly("x", &DiscreteLoop::x_values);
  m.def("great_circle", &great_circle, py::arg("param"), py::arg("nodes"));

  m.def("energy", &energy, py::arg("loop"), py::arg("form"), py::arg("eps"));
  m.def("residual_norm", &residual_norm, py::arg("loop"), py::arg("form"), py::arg("eps"));
  m.def("circle_energy", &circle_energy, py::arg("nodes"));
  using GammaFn = double (*)(const CircleParam&, const PerturbationForm&, int);
  m.def("gamma", static_cast<GammaFn>(&cylgeo::gamma), py::arg("param"), py::arg("form"),
        py::arg("quad_nodes") = 128);

  m.def(
      "compute_w_norm",
      [](const CircleParam& c, const PerturbationForm& f, double eps, int nodes) {
        return compute_w(c, f, eps, nodes).w.l2_norm();
      },
      py::arg("param"), py::arg("form"), py::arg("eps"), py::arg("nodes"));
  m.def(
      "corrected_energy",
      [](const CircleParam& c, const PerturbationForm& f, double eps, int nodes) {
        return phi(c, f, eps, nodes);
      },
      py::arg("param"), py::arg("form"), py::arg("eps"), py::arg("nodes"),
      "Reduced functional: energy of the corrected great circle.");

  m.def(
      "spectrum",
      [](const DiscreteLoop& loop, const PerturbationForm& f, double eps) {
        const auto s = spectrum(loop, f, eps);
        py::dict d;
        d["eigenvalues"] = s.eigenvalues;
        d["kernel_dim"] = s.kernel_dim;
        d["morse_index"] = s.morse_index;
        d["gap_ratio"] = s.gap_ratio;
        d["reliable"] = s.reliable;
        return d;
      },
      py::arg("loop"), py::arg("form"), py::arg("eps"));

  m.def(
      "_multiplicity_experiment",
      [](const PerturbationForm& f, double eps, int nodes, int starts, std::uint64_t seed,
         int threads) {
        MultiplicityConfig cfg;
        cfg.nodes = nodes;
        cfg.search.starts = starts;
        cfg.search.seed = seed;
        cfg.threads = threads;
        ExperimentReport report;
        {
          py::gil_scoped_release release;
          report = multiplicity_experiment(f, eps, cfg);
        }
        return experiment_report_to_json(report).dump();
      });
}
