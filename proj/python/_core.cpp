#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "boundary_ctrl/control.hpp"
#include "boundary_ctrl/errors.hpp"
#include "boundary_ctrl/gauge.hpp"
#include "boundary_ctrl/propagator.hpp"
#include "boundary_ctrl/runner.hpp"
#include "boundary_ctrl/spectral.hpp"

namespace py = pybind11;
using namespace bctrl;

namespace {

spectral::FourierBasis basis_of(double l, int n) {
  return spectral::FourierBasis(spectral::IntervalGeometry(l), n);
}

PiecewisePolynomial polynomial_of(const std::vector<std::tuple<double, double, double, double, double>>& pieces) {
  std::vector<PolynomialPiece> out;
  for (const auto& [t0, t1, c0, c1, c2] : pieces) out.push_back({t0, t1, c0, c1, c2});
  return PiecewisePolynomial(std::move(out));
}

propagator::FreezeRule rule_of(const std::string& s) {
  if (s == "left") return propagator::FreezeRule::LeftEndpoint;
  if (s == "midpoint") return propagator::FreezeRule::Midpoint;
  throw InvalidArgument("freeze must be 'left' or 'midpoint'");
}

propagator::CoefficientPath path_of(
    double l, int n, const std::vector<CMatrix>& terms,
    const std::vector<std::vector<std::tuple<double, double, double, double, double>>>& coefficients,
    double start, double stop) {
  const auto basis = basis_of(l, n);
  std::vector<spectral::TruncatedOperator> ops;
  for (const auto& m : terms) ops.emplace_back(basis, m);
  std::vector<PiecewisePolynomial> coeffs;
  for (const auto& c : coefficients) coeffs.push_back(polynomial_of(c));
  return propagator::CoefficientPath(std::move(ops), std::move(coeffs), start, stop);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral simulator and boundary control synthesis on an interval";
  m.attr("__version__") = BOUNDARY_CTRL_VERSION;

  auto base_error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base_error.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base_error.ptr());
  py::register_exception<TruncationError>(m, "TruncationError", base_error.ptr());
  py::register_exception<NonConvergenceError>(m, "NonConvergenceError", base_error.ptr());
  py::register_exception<CertificationFailure>(m, "CertificationFailure", base_error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base_error.ptr());

  m.def("magnetic_laplacian",
        [](double a, double l, int n) { return spectral::build_magnetic_laplacian(a, basis_of(l, n)).matrix(); },
        py::arg("A"), py::arg("l"), py::arg("N"));
  m.def("position_operator",
        [](double l, int n) { return spectral::build_position_operator(basis_of(l, n)).matrix(); },
        py::arg("l"), py::arg("N"));
  m.def("momentum_operator",
        [](double l, int n) { return spectral::build_momentum_operator(basis_of(l, n)).matrix(); },
        py::arg("l"), py::arg("N"));
  m.def(
      "eigendecompose",
      [](const CMatrix& h, double l, int n) {
        const auto s = spectral::eigendecompose(spectral::TruncatedOperator(basis_of(l, n), h));
        return py::make_tuple(RVector(s.eigenvalues), CMatrix(s.eigenvectors), s.dominant_modes);
      },
      py::arg("H"), py::arg("l"), py::arg("N"));
  m.def(
      "gap_sequence",
      [](const RVector& eigenvalues, Index count) {
        spectral::Spectrum s;
        s.eigenvalues = eigenvalues;
        return spectral::gap_sequence(s, count);
      },
      py::arg("eigenvalues"), py::arg("count"));

  m.def("boundary_unitary", [](double a, double l) { return Eigen::Matrix2cd(gauge::boundary_unitary(a, l).matrix); },
        py::arg("A"), py::arg("l"));
  m.def("gauge_matrix", [](double a, double l, int n) { return gauge::gauge_matrix(a, basis_of(l, n)); },
        py::arg("A"), py::arg("l"), py::arg("N"));
  m.def("to_boundary_picture",
        [](const CVector& state, double a, double l, int n) {
          return gauge::to_boundary_picture(state, a, basis_of(l, n));
        },
        py::arg("state"), py::arg("A"), py::arg("l"), py::arg("N"));
  m.def("quasi_periodic_residual",
        [](const CVector& state, double a, double l, int n, int samples) {
          return gauge::quasi_periodic_residual(state, a, basis_of(l, n), samples);
        },
        py::arg("state"), py::arg("A"), py::arg("l"), py::arg("N"), py::arg("samples") = 512);

  m.def("step_exponential", [](const CMatrix& h, double dt) { return propagator::step_exponential(h, dt); },
        py::arg("H"), py::arg("dt"));
  m.def(
      "rs_propagator",
      [](double l, int n, const std::vector<CMatrix>& terms,
         const std::vector<std::vector<std::tuple<double, double, double, double, double>>>& coefficients,
         double start, double stop, std::int64_t k, const std::string& freeze) {
        return propagator::rs_propagator(path_of(l, n, terms, coefficients, start, stop), k, rule_of(freeze)).total;
      },
      py::arg("l"), py::arg("N"), py::arg("terms"), py::arg("coefficients"), py::arg("start"),
      py::arg("stop"), py::arg("k"), py::arg("freeze") = "left",
      "Coefficients are lists of (t0, t1, c0, c1, c2) pieces, one list per term.");
  m.def(
      "refine_to_tolerance",
      [](double l, int n, const std::vector<CMatrix>& terms,
         const std::vector<std::vector<std::tuple<double, double, double, double, double>>>& coefficients,
         double start, double stop, double tol, const std::string& freeze) {
        const auto r = propagator::refine_to_tolerance(path_of(l, n, terms, coefficients, start, stop), tol,
                                                       rule_of(freeze));
        return py::make_tuple(r.propagator.total, r.k, r.gap);
      },
      py::arg("l"), py::arg("N"), py::arg("terms"), py::arg("coefficients"), py::arg("start"),
      py::arg("stop"), py::arg("tol"), py::arg("freeze") = "left");

  m.def(
      "check_controllability",
      [](double l, int n, double a, double mu0, double mu1, std::int64_t q) {
        const auto sys = control::build_control_system(basis_of(l, n), a, mu0, mu1);
        const auto normal = control::check_normal_system(sys.h0, sys.h1);
        const auto r = control::check_chambrion_conditions(sys.spectrum, sys.h1, q);
        py::dict d;
        d["normal"] = normal.normal();
        d["degenerate_spectrum"] = normal.degenerate_spectrum;
        d["gaps_independent"] = r.gaps_independent;
        d["witness_count"] = r.witnesses.size();
        d["couplings_nonzero"] = r.couplings_nonzero;
        d["min_coupling"] = r.min_coupling;
        d["passed"] = normal.normal() && r.passed();
        return d;
      },
      py::arg("l"), py::arg("N"), py::arg("a"), py::arg("mu0"), py::arg("mu1") = 0.0,
      py::arg("Q") = 1000000);
  m.def(
      "envelope",
      [](const std::vector<double>& u, double tau, double c, double a, const std::vector<double>& times) {
        const auto env = control::reconstruct_vector_potential(control::PiecewiseConstantControl(u, tau, c), a);
        std::vector<double> out;
        for (double t : times) out.push_back(env.value(t));
        return py::make_tuple(out, env.sup_deviation());
      },
      py::arg("u"), py::arg("tau"), py::arg("c"), py::arg("a"), py::arg("times"));
  m.def(
      "synthesize",
      [](double l, int n, double a, double mu0, double c, double tau, double budget, double target,
         std::uint64_t seed, int initial, int final_state, int starts) {
        const auto sys = control::build_control_system(basis_of(l, n), a, mu0, 0.0);
        control::SynthesisOptions opts;
        opts.tau = tau;
        opts.seed = seed;
        opts.starts = starts;
        std::optional<control::SynthesisResult> result;
        {
          py::gil_scoped_release release;
          result.emplace(control::synthesize_with_model(
              control::boundary_window_model(sys.basis, a, sys.static_terms(), sys.coupled_terms()),
              sys.spectrum.eigenvectors.col(initial), sys.spectrum.eigenvectors.col(final_state), c, budget,
              target, opts));
        }
        const auto& r = *result;
        py::dict d;
        d["u"] = r.control.values();
        d["fidelity"] = r.fidelity;
        d["converged"] = r.converged;
        d["windows"] = r.windows;
        d["tau"] = r.tau;
        return d;
      },
      py::arg("l"), py::arg("N"), py::arg("a"), py::arg("mu0"), py::arg("c"), py::arg("tau"),
      py::arg("budget"), py::arg("target"), py::arg("seed") = 0, py::arg("initial") = 0,
      py::arg("final") = 1, py::arg("starts") = 8);

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config_text, const std::filesystem::path& out_dir,
         std::optional<std::filesystem::path> envelope, bool json) {
        const auto config = runner::parse_config(config_text, json);
        runner::RunOptions opts;
        opts.out_dir = out_dir;
        opts.envelope = envelope;
        runner::RunResult r;
        {
          py::gil_scoped_release release;
          r = runner::run_command(command, config, opts);
        }
        return py::make_tuple(r.exit_code, r.message, r.files);
      },
      py::arg("command"), py::arg("config_text"), py::arg("out_dir"), py::arg("envelope") = std::nullopt,
      py::arg("json") = false);
}
