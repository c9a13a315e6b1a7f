#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ommap/checks.hpp"
#include "ommap/consistency.hpp"
#include "ommap/drift.hpp"
#include "ommap/errors.hpp"
#include "ommap/om_functional.hpp"
#include "ommap/optimizer.hpp"
#include "ommap/sde.hpp"
#include "ommap/small_ball.hpp"

namespace py = pybind11;
using namespace ommap;

namespace {

GridShape grid_of(double dt, std::size_t n_steps) {
  GridShape g{0.0, dt, n_steps};
  g.validate();
  return g;
}

ObservationSet observations_of(const std::vector<double>& times, const std::vector<double>& values, double gamma) {
  ObservationSet obs{times, values, gamma};
  obs.validate();
  return obs;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Onsager-Machlup MAP estimation for diffusion paths";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
  py::register_exception<InvalidPath>(m, "InvalidPath", base.ptr());
  py::register_exception<IntegrationDiverged>(m, "IntegrationDiverged", base.ptr());
  py::register_exception<NoFit>(m, "NoFit", base.ptr());

  m.def("version", [] { return std::string(OMMAP_PY_VERSION); });

  py::class_<GridPath>(m, "GridPath")
      .def(py::init<double, double, std::vector<double>>(), py::arg("t0"), py::arg("dt"), py::arg("values"))
      .def_property_readonly("t0", &GridPath::t0)
      .def_property_readonly("dt", &GridPath::dt)
      .def_property_readonly("n_steps", &GridPath::n_steps)
      .def_property_readonly("horizon", &GridPath::horizon)
      .def_property_readonly("values",
                             [](const GridPath& p) { return std::vector<double>(p.values().begin(), p.values().end()); })
      .def("times",
           [](const GridPath& p) {
             std::vector<double> t(p.size());
             for (std::size_t i = 0; i < t.size(); ++i) t[i] = p.time(i);
             return t;
           })
      .def("__len__", &GridPath::size)
      .def("__getitem__", [](const GridPath& p, std::size_t i) {
        if (i >= p.size()) throw py::index_error();
        return p[i];
      });

  m.def("h1_seminorm_sq", &h1_seminorm_sq, py::arg("path"));
  m.def("drift_names", &drift_names);

  m.def(
      "psi", [](const std::string& drift, double u, double sigma) { return psi(drift_by_name(drift), u, sigma); },
      py::arg("drift"), py::arg("u"), py::arg("sigma") = 1.0);

  py::class_<AssumptionReport>(m, "AssumptionReport")
      .def_readonly("min_psi", &AssumptionReport::min_psi)
      .def_readonly("max_potential", &AssumptionReport::max_potential)
      .def_readonly("lipschitz", &AssumptionReport::lipschitz)
      .def_readonly("violation", &AssumptionReport::violation);
  m.def(
      "check_assumption",
      [](const std::string& drift, double sigma, double lo, double hi, std::size_t n) {
        return check_assumption(drift_by_name(drift), sigma, lo, hi, n);
      },
      py::arg("drift"), py::arg("sigma") = 1.0, py::arg("u_lo") = -3.0, py::arg("u_hi") = 3.0,
      py::arg("n_probe") = 1000);

  m.def(
      "euler_maruyama",
      [](const std::string& drift, double sigma, double u0, double dt, std::size_t n_steps, std::uint64_t seed) {
        Rng rng(seed);
        return euler_maruyama(drift_by_name(drift), sigma, u0, dt, n_steps, rng);
      },
      py::arg("drift"), py::arg("sigma"), py::arg("u0"), py::arg("dt"), py::arg("n_steps"), py::arg("seed"));

  py::class_<OMProblem>(m, "Problem")
      .def_property_readonly("variant", [](const OMProblem& p) { return to_string(p.variant); })
      .def_property_readonly("sigma", [](const OMProblem& p) { return p.sigma; })
      .def_property_readonly("u_minus", [](const OMProblem& p) { return p.u_minus; })
      .def("shift", &OMProblem::shift)
      .def("phi", [](const OMProblem& p, const GridPath& u) { return phi(p, u); }, py::arg("path"))
      .def("value", [](const OMProblem& p, const GridPath& u) { return om_value(p, u); }, py::arg("path"))
      .def("gradient", [](const OMProblem& p, const GridPath& u) { return om_gradient(p, u); }, py::arg("path"))
      .def("to_json", [](const OMProblem& p) { return problem_to_json(p); });

  m.def(
      "make_unconditioned",
      [](const std::string& drift, double sigma, double u_minus, double dt, std::size_t n_steps) {
        return make_unconditioned(drift_by_name(drift), sigma, u_minus, grid_of(dt, n_steps));
      },
      py::arg("drift"), py::arg("sigma"), py::arg("u_minus"), py::arg("dt"), py::arg("n_steps"));
  m.def(
      "make_bridge",
      [](const std::string& drift, double sigma, double u_minus, double u_plus, double dt, std::size_t n_steps) {
        return make_bridge(drift_by_name(drift), sigma, u_minus, u_plus, grid_of(dt, n_steps));
      },
      py::arg("drift"), py::arg("sigma"), py::arg("u_minus"), py::arg("u_plus"), py::arg("dt"), py::arg("n_steps"));
  m.def(
      "make_smoothing",
      [](const std::string& drift, double sigma, double u_minus, const std::vector<double>& times,
         const std::vector<double>& values, double gamma, double dt, std::size_t n_steps) {
        return make_smoothing(drift_by_name(drift), sigma, u_minus, observations_of(times, values, gamma),
                              grid_of(dt, n_steps));
      },
      py::arg("drift"), py::arg("sigma"), py::arg("u_minus"), py::arg("times"), py::arg("values"), py::arg("gamma"),
      py::arg("dt"), py::arg("n_steps"));

  py::class_<MinimizationResult>(m, "MinimizationResult")
      .def_readonly("minimizer", &MinimizationResult::minimizer)
      .def_readonly("value", &MinimizationResult::value)
      .def_readonly("grad_norm", &MinimizationResult::grad_norm)
      .def_readonly("iterations", &MinimizationResult::iterations)
      .def_readonly("converged", &MinimizationResult::converged)
      .def_readonly("start_label", &MinimizationResult::start_label)
      .def_readonly("value_history", &MinimizationResult::value_history);

  py::class_<MultistartReport>(m, "MultistartReport")
      .def_readonly("minima", &MultistartReport::minima)
      .def_readonly("n_starts", &MultistartReport::n_starts)
      .def_readonly("dedup_threshold", &MultistartReport::dedup_threshold);

  m.def(
      "minimize",
      [](const OMProblem& p, const GridPath& start, double tol) {
        MinimizeOptions opt;
        opt.tol = tol;
        py::gil_scoped_release release;
        return minimize(p, start, opt);
      },
      py::arg("problem"), py::arg("start"), py::arg("tol") = 1e-8);

  m.def(
      "default_starts",
      [](const OMProblem& p, std::size_t k, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<std::pair<std::string, GridPath>> out;
        for (auto& s : default_starts(p, k, rng)) out.emplace_back(std::move(s.label), std::move(s.path));
        return out;
      },
      py::arg("problem"), py::arg("k"), py::arg("seed"));

  m.def(
      "multistart",
      [](const OMProblem& p, std::size_t n_starts, std::uint64_t seed, double tol, double dedup, unsigned threads) {
        Rng rng(derive_seed(seed, "starts"));
        MinimizeOptions opt;
        opt.tol = tol;
        const auto starts = default_starts(p, n_starts, rng);
        py::gil_scoped_release release;
        return multistart(p, starts, opt, dedup, threads);
      },
      py::arg("problem"), py::arg("n_starts") = 8, py::arg("seed") = 1, py::arg("tol") = 1e-8,
      py::arg("dedup") = 1e-3, py::arg("threads") = 1);

  m.def(
      "ball_prob",
      [](const std::vector<double>& prior_eigs, const std::vector<double>& center, double radius,
         std::size_t n_samples, std::uint64_t seed) {
        const FiniteGaussian g(prior_eigs);
        Rng rng(seed);
        const auto e = ball_prob(g, Potential{}, center, radius, n_samples, rng);
        return py::make_tuple(e.probability, e.std_error);
      },
      py::arg("prior_eigs"), py::arg("center"), py::arg("radius"), py::arg("n_samples"), py::arg("seed"));

  py::class_<PowerLawFit>(m, "PowerLawFit")
      .def_readonly("c", &PowerLawFit::c)
      .def_readonly("alpha", &PowerLawFit::alpha)
      .def_readonly("n_used", &PowerLawFit::n_used)
      .def_readonly("n_excluded", &PowerLawFit::n_excluded);
  m.def("fit_power_law", &fit_power_law, py::arg("abscissa"), py::arg("errors"));

  py::class_<CheckResult>(m, "CheckResult")
      .def_readonly("id", &CheckResult::id)
      .def_readonly("name", &CheckResult::name)
      .def_readonly("passed", &CheckResult::passed)
      .def_readonly("detail", &CheckResult::detail)
      .def_readonly("seconds", &CheckResult::seconds)
      .def("__str__", &format_result);
  m.def(
      "run_checks",
      [](const std::vector<int>& ids, bool quick, const std::string& work_dir, unsigned threads) {
        CheckOptions opt;
        opt.quick = quick;
        opt.work_dir = work_dir;
        opt.threads = threads;
        py::gil_scoped_release release;
        return run_checks(opt, ids);
      },
      py::arg("ids"), py::arg("quick") = false, py::arg("work_dir") = "ommap_check", py::arg("threads") = 1);
}
