// Python module symbar._core.

#include "symbar/cli.hpp"
#include "symbar/errors.hpp"
#include "symbar/models.hpp"
#include "symbar/pricing.hpp"
#include "symbar/sde.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace symbar;

namespace {

// Built-in payoffs only: a Python callable would be invoked from worker threads.
struct NamedPayoff {
  std::string name;
  double strike = 0.0;
  PayoffFn fn;
};

NamedPayoff make_payoff(const std::string& name, double strike) {
  if (name == "call") return {name, strike, payoffs::call(strike)};
  if (name == "put") return {name, strike, payoffs::put(strike)};
  if (name == "digital") return {name, strike, payoffs::digital(strike)};
  if (name == "indicator") return {name, strike, payoffs::indicator()};
  if (name == "zero") return {name, strike, payoffs::zero()};
  throw DomainError("unknown payoff '" + name + "'");
}

SimulationPlan make_plan(std::size_t paths, std::size_t steps, double horizon, std::uint64_t seed, unsigned workers,
                         std::size_t refinement) {
  SimulationPlan p;
  p.paths = paths;
  p.steps = steps;
  p.horizon = horizon;
  p.seed = seed;
  p.workers = workers;
  p.brownian_refinement = refinement;
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Barrier pricing by reflection-group symmetrization";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", error);
  py::register_exception<CharacterInconsistency>(m, "CharacterInconsistency", error);
  py::register_exception<ChamberCollision>(m, "ChamberCollision", error);
  py::register_exception<StructureError>(m, "StructureError", error);
  py::register_exception<NonFinitePath>(m, "NonFinitePath", error);
  py::register_exception<SingularBoundary>(m, "SingularBoundary", error);
  py::register_exception<InversionFailure>(m, "InversionFailure", error);

  py::class_<Hyperplane>(m, "Hyperplane")
      .def(py::init<Vector, double>(), py::arg("normal"), py::arg("offset"))
      .def_property_readonly("normal", &Hyperplane::normal)
      .def_property_readonly("offset", &Hyperplane::offset)
      .def("level", &Hyperplane::level)
      .def("signed_distance", &Hyperplane::signed_distance);

  py::class_<HyperplaneFamily>(m, "HyperplaneFamily")
      .def(py::init<std::vector<Hyperplane>, Vector>(), py::arg("planes"), py::arg("witness"))
      .def_property_readonly("dimension", &HyperplaneFamily::dimension)
      .def("__len__", &HyperplaneFamily::size);
  m.def("single_barrier_family", &single_barrier_family, py::arg("dimension"), py::arg("barrier"), py::arg("witness"));
  m.def("double_barrier_family", &double_barrier_family, py::arg("dimension"), py::arg("lower"), py::arg("width"),
        py::arg("witness"));

  py::class_<GroupElement>(m, "GroupElement")
      .def_property_readonly("word", [](const GroupElement& g) { return g.word_string(); })
      .def_readonly("eta", &GroupElement::eta)
      .def_property_readonly("linear", [](const GroupElement& g) { return g.isometry.linear(); })
      .def_property_readonly("translation", [](const GroupElement& g) { return g.isometry.translation(); });

  py::class_<ReflectionGroup>(m, "ReflectionGroup")
      .def_static(
          "generate",
          [](HyperplaneFamily family, std::size_t cap, std::size_t samples) {
            GenerateOptions options;
            options.cap = cap;
            options.disjointness_samples = samples;
            return ReflectionGroup::generate(std::move(family), options);
          },
          py::arg("family"), py::arg("cap") = 64, py::arg("disjointness_samples") = 10000)
      .def("__len__", &ReflectionGroup::size)
      .def_property_readonly("complete", &ReflectionGroup::complete)
      .def_property_readonly("elements", &ReflectionGroup::elements)
      .def_property_readonly("max_cover", [](const ReflectionGroup& g) { return g.disjointness().max_cover; })
      .def("locate_chamber", py::overload_cast<const Vector&>(&ReflectionGroup::locate_chamber, py::const_));

  py::class_<DiffusionModel>(m, "DiffusionModel")
      .def_property_readonly("dimension", &DiffusionModel::dimension)
      .def_property_readonly("label", &DiffusionModel::label)
      .def("drift", py::overload_cast<const Vector&>(&DiffusionModel::drift, py::const_))
      .def("diffusion", py::overload_cast<const Vector&>(&DiffusionModel::diffusion, py::const_));
  m.def("arithmetic_bm", &models::arithmetic_bm, py::arg("sigma"), py::arg("drift") = 0.0);
  m.def("gbm", &models::gbm, py::arg("sigma"), py::arg("r"));
  m.def("cev", &models::cev, py::arg("sigma"), py::arg("beta"), py::arg("r"));
  m.def(
      "heston",
      [](double kappa, double theta, double xi, double rho, double r) {
        return models::heston({r, kappa, theta, xi, rho});
      },
      py::arg("kappa"), py::arg("theta"), py::arg("xi"), py::arg("rho") = 0.0, py::arg("r") = 0.0);

  py::class_<SymmetrizedModel>(m, "SymmetrizedModel")
      .def(py::init<DiffusionModel, ReflectionGroup>(), py::arg("base"), py::arg("group"))
      .def_property_readonly("group", &SymmetrizedModel::group)
      .def("coefficients", [](const SymmetrizedModel& s, const Vector& x) {
        const Coefficients c = symmetrized_coefficients(s, x);
        return py::make_tuple(c.mu, c.sigma, c.covered);
      });
  m.def(
      "symmetrize_sv",
      [](const DiffusionModel& base, double barrier, const Vector& center) {
        StructureProbe probe;
        probe.center = center;
        return symmetrize_sv(base, barrier, probe);
      },
      py::arg("base"), py::arg("barrier"), py::arg("probe_center"));

  py::class_<NamedPayoff>(m, "Payoff")
      .def(py::init(&make_payoff), py::arg("name"), py::arg("strike") = 0.0)
      .def_readonly("name", &NamedPayoff::name)
      .def_readonly("strike", &NamedPayoff::strike)
      .def("__call__",
           [](const NamedPayoff& p, const Vector& x) { return p.fn(std::span<const double>(x.data(), x.size())); });

  py::class_<SimulationPlan>(m, "SimulationPlan")
      .def(py::init(&make_plan), py::arg("paths"), py::arg("steps"), py::arg("horizon") = 1.0, py::arg("seed") = 0,
           py::arg("workers") = 1, py::arg("brownian_refinement") = 1)
      .def_readwrite("paths", &SimulationPlan::paths)
      .def_readwrite("steps", &SimulationPlan::steps)
      .def_readwrite("horizon", &SimulationPlan::horizon)
      .def_readwrite("seed", &SimulationPlan::seed)
      .def_readwrite("workers", &SimulationPlan::workers)
      .def_readwrite("brownian_refinement", &SimulationPlan::brownian_refinement);

  py::class_<Estimate>(m, "Estimate")
      .def_readonly("mean", &Estimate::mean)
      .def_readonly("std_error", &Estimate::std_error)
      .def_readonly("paths", &Estimate::paths)
      .def_readonly("steps", &Estimate::steps)
      .def_readonly("gap_hits", &Estimate::gap_hits)
      .def_readonly("excluded_paths", &Estimate::excluded_paths)
      .def_readonly("support_violations", &Estimate::support_violations)
      .def_readonly("cap_hits", &Estimate::cap_hits)
      .def_readonly("seed", &Estimate::seed)
      .def_property_readonly("trusted", &Estimate::trusted)
      .def("__repr__", [](const Estimate& e) {
        std::ostringstream s;
        s << "Estimate(mean=" << e.mean << ", std_error=" << e.std_error << ", paths=" << e.paths << ")";
        return s.str();
      });

  m.def(
      "price_symmetrized",
      [](const DiffusionModel& base, const ReflectionGroup& group, const Vector& x0, const NamedPayoff& f,
         const SimulationPlan& plan, double cap) {
        py::gil_scoped_release release;
        return price_barrier_symmetrized(base, group, x0, Payoff(f.fn, group.family(), cap), plan);
      },
      py::arg("base"), py::arg("group"), py::arg("x0"), py::arg("payoff"), py::arg("plan"),
      py::arg("cap") = kDefaultPayoffCap);
  m.def(
      "price_symmetrized_model",
      [](const SymmetrizedModel& model, const Vector& x0, const NamedPayoff& f, const SimulationPlan& plan,
         double cap) {
        py::gil_scoped_release release;
        return price_barrier_symmetrized(model, x0, Payoff(f.fn, model.group().family(), cap), plan);
      },
      py::arg("model"), py::arg("x0"), py::arg("payoff"), py::arg("plan"), py::arg("cap") = kDefaultPayoffCap);
  m.def(
      "price_oracle",
      [](const DiffusionModel& base, const HyperplaneFamily& family, const Vector& x0, const NamedPayoff& f,
         const SimulationPlan& plan, const std::string& monitoring) {
        if (monitoring != "bridge" && monitoring != "discrete")
          throw DomainError("monitoring must be 'bridge' or 'discrete'");
        const Monitoring mode = monitoring == "bridge" ? Monitoring::bridge : Monitoring::discrete;
        py::gil_scoped_release release;
        return price_barrier_oracle(base, family, x0, f.fn, plan, mode);
      },
      py::arg("base"), py::arg("family"), py::arg("x0"), py::arg("payoff"), py::arg("plan"),
      py::arg("monitoring") = "bridge");
  m.def(
      "price_double_barrier",
      [](const DiffusionModel& base, double lower, double width, const Vector& x0, const NamedPayoff& f,
         const SimulationPlan& plan, std::size_t truncation, double cap) {
        py::gil_scoped_release release;
        return price_double_barrier(base, lower, width, x0, f.fn, plan, truncation, cap);
      },
      py::arg("base"), py::arg("lower"), py::arg("width"), py::arg("x0"), py::arg("payoff"), py::arg("plan"),
      py::arg("truncation") = 10, py::arg("cap") = kDefaultPayoffCap);

  m.def("black_scholes_call", &black_scholes_call, py::arg("s0"), py::arg("strike"), py::arg("sigma"), py::arg("r"),
        py::arg("t"));
  m.def("closed_form_dao_call", &closed_form_dao_call, py::arg("s0"), py::arg("strike"), py::arg("barrier"),
        py::arg("sigma"), py::arg("r"), py::arg("t"));
  m.def("survival_probability_bm", &survival_probability_bm, py::arg("x0"), py::arg("barrier"), py::arg("sigma"),
        py::arg("t"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line front end; returns (exit_code, stdout, stderr).");
}
