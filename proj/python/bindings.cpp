#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kpzfit/analysis.hpp"
#include "kpzfit/errors.hpp"
#include "kpzfit/fredholm.hpp"
#include "kpzfit/kernels.hpp"
#include "kpzfit/shifts.hpp"
#include "kpzfit/simulate.hpp"
#include "kpzfit/specfun.hpp"

namespace py = pybind11;
using namespace kpzfit;

namespace {

LimitLaw law_by_name(const std::string& name) {
  if (name == "gue") return LimitLaw::gue();
  if (name == "goe2") return LimitLaw::goe2();
  throw DomainError("law must be gue or goe2");
}

}  // namespace

PYBIND11_MODULE(_kpzfit, m) {
  m.doc() = "Finite-time KPZ fluctuation laws: special functions, kernels, Fredholm CDFs, samplers.";
  m.attr("__version__") = KPZFIT_VERSION;

  static py::exception<AccuracyError> accuracy(m, "AccuracyError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const RangeError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DivergenceError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const AccuracyError& e) {
      accuracy(e.what());
    }
  });

  py::enum_<Model>(m, "Model")
      .value("tasep_step", Model::tasep_step)
      .value("tasep_alt", Model::tasep_alt)
      .value("pasep_step", Model::pasep_step)
      .value("png_droplet", Model::png_droplet)
      .value("png_flat", Model::png_flat);

  py::enum_<KernelFamily>(m, "KernelFamily")
      .value("airy2", KernelFamily::airy2)
      .value("airy1", KernelFamily::airy1)
      .value("flat_png", KernelFamily::flat_png)
      .value("png_droplet", KernelFamily::png_droplet)
      .value("tasep_flat", KernelFamily::tasep_flat)
      .value("tasep_step", KernelFamily::tasep_step)
      .value("asym_flat", KernelFamily::asym_flat)
      .value("asym_step", KernelFamily::asym_step);

  m.def("airy_ai", &airy_ai, py::arg("x"));
  m.def("airy_ai_deriv", &airy_ai_deriv, py::arg("x"), py::arg("order"));
  m.def("bessel_j", &bessel_j, py::arg("order"), py::arg("x"));

  m.def("a_pq", &a_pq, py::arg("p"));
  m.def("p_critical", &p_critical);
  m.def("height_shift", &height_shift, py::arg("p"));
  m.def(
      "scaling_constants",
      [](Model model, std::optional<double> sigma, std::optional<double> p) {
        const ScalingConstants k = scaling_constants(model, sigma, p);
        py::dict d;
        d["c1"] = k.c1;
        d["c2"] = k.c2;
        d["a"] = k.a;
        d["eta"] = k.eta;
        d["sigma"] = std::isnan(k.sigma) ? py::object(py::none()) : py::object(py::float_(k.sigma));
        d["p"] = k.p;
        return d;
      },
      py::arg("model"), py::arg("sigma") = py::none(), py::arg("p") = py::none());

  m.def(
      "kernel",
      [](KernelFamily family, double s1, double s2, double t, double sigma, double a) {
        KernelModel km;
        km.family = family;
        km.t = t;
        km.sigma = sigma;
        km.a = a;
        if (km.is_prelimit()) return k_rescaled(km, s1, s2);
        return k_continuous(km, s1, s2);
      },
      py::arg("family"), py::arg("s1"), py::arg("s2"), py::arg("t") = 0.0, py::arg("sigma") = 0.25,
      py::arg("a") = 0.5);

  m.def(
      "tw_cdf", [](double s, const std::string& law) { return law_cdf(law_by_name(law), s); },
      py::arg("s"), py::arg("law") = "gue");
  m.def(
      "tw_pdf", [](double s, const std::string& law) { return law_pdf(law_by_name(law), s); },
      py::arg("s"), py::arg("law") = "gue");
  m.def(
      "tw_moments",
      [](const std::string& law) {
        const LawMoments mo = law_moments(law_by_name(law));
        py::dict d;
        d["mean"] = mo.mean;
        d["variance"] = mo.variance;
        d["skewness"] = mo.skewness;
        d["kurtosis"] = mo.kurtosis;
        return d;
      },
      py::arg("law") = "gue");

  m.def(
      "simulate",
      [](Model model, double t, long runs, long n, double p, std::uint64_t seed, long window,
         unsigned threads) {
        SimConfig c;
        c.model = model;
        c.t = t;
        c.runs = runs;
        c.n = n;
        c.p = p;
        c.seed = seed;
        c.window = window;
        py::gil_scoped_release release;
        return batch(c, threads).samples;
      },
      py::arg("model"), py::arg("t"), py::arg("runs"), py::arg("n") = 1, py::arg("p") = 1.0,
      py::arg("seed") = 0, py::arg("window") = 0, py::arg("threads") = 0);
}
