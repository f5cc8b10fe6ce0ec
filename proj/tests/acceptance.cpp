// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "boundary_ctrl/control.hpp"
#include "boundary_ctrl/errors.hpp"
#include "boundary_ctrl/gauge.hpp"
#include "boundary_ctrl/propagator.hpp"
#include "boundary_ctrl/random.hpp"
#include "boundary_ctrl/runner.hpp"
#include "boundary_ctrl/spectral.hpp"
#include "oracles.hpp"

using namespace bctrl;
namespace fs = std::filesystem;
using spectral::FourierBasis;
using spectral::IntervalGeometry;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
  std::string digest;  // canonical text of the numbers produced, for the determinism check
};

std::string num(double v) { return runner::format_double(v); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bctrl_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// digests of every artifact except the manifest, whose wall-clock field varies
std::string artifact_digest(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "manifest.json") names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  std::string out;
  for (const auto& n : names) out += n + ":" + runner::sha256_hex(slurp(dir / n)) + "\n";
  return out;
}

propagator::CoefficientPath random_step_path(const FourierBasis& b, Rng& rng, double horizon, int pieces) {
  auto terms = control::boundary_terms(b);
  std::vector<PiecewisePolynomial> coefficients{PiecewisePolynomial::constant(1.0, 0.0, horizon)};
  for (int i = 1; i < 4; ++i) {
    std::vector<double> v(pieces);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    coefficients.push_back(PiecewisePolynomial::steps(v, 0.0, horizon));
  }
  return propagator::CoefficientPath(std::move(terms), std::move(coefficients), 0.0, horizon);
}

// ------------------------------------------------------------------ 1
Outcome spectral_correctness() {
  const double l = 2.0 * kPi;
  const FourierBasis b(IntervalGeometry(l), 32);
  double worst_closed = 0.0, worst_fd_ratio = 0.0;
  bool ok = true;
  for (double a : {0.0, 0.3, 0.5, 1.0 / (2.0 * std::sqrt(2.0))}) {
    const auto spec = spectral::eigendecompose(spectral::build_magnetic_laplacian(a, b));
    std::vector<double> closed;
    for (int n = -32; n <= 32; ++n) closed.push_back(std::pow(2.0 * kPi * n / l - a, 2));
    std::sort(closed.begin(), closed.end());
    for (std::size_t k = 0; k < closed.size(); ++k) {
      const double rel = std::abs(spec.eigenvalues(static_cast<Index>(k)) - closed[k]) / std::max(1.0, closed[k]);
      worst_closed = std::max(worst_closed, rel);
    }
    oracle::PeriodicDifference fd(l, a, 4096);
    const auto low = fd.lowest(10, -1.0, 16, 60);
    const double h = fd.spacing();
    for (int k = 0; k < 10; ++k) {
      const double lam = spec.eigenvalues(k);
      // leading error of the second difference: lambda^2 h^2 / 12
      const double estimate = lam * lam * h * h / 12.0 * 1.01 + 1e-9;
      const double dev = std::abs(low[k] - lam);
      worst_fd_ratio = std::max(worst_fd_ratio, dev / estimate);
      if (dev > estimate) ok = false;
    }
  }
  ok = ok && worst_closed <= 1e-10;
  return {ok, "closed-form rel dev " + num(worst_closed) + ", FD dev / O(h^2) estimate " + num(worst_fd_ratio), ""};
}

// ------------------------------------------------------------------ 2
Outcome gauge_covariance() {
  const double l = 2.0 * kPi;
  const FourierBasis b(IntervalGeometry(l), 64);
  const auto free_lap = spectral::build_free_laplacian(b);
  auto central_deviation = [&](double a) {
    const CMatrix g = gauge::gauge_matrix(a, b);
    const CMatrix conj = g.adjoint() * free_lap.matrix() * g;
    const auto lhs = spectral::eigendecompose(spectral::TruncatedOperator(b, 0.5 * (conj + CMatrix(conj.adjoint()))));
    const auto rhs = spectral::eigendecompose(spectral::build_magnetic_laplacian(a, b));
    double dev = 0.0;
    for (Index k = 0; k < 21; ++k) dev = std::max(dev, std::abs(lhs.eigenvalues(k) - rhs.eigenvalues(k)));
    return dev;
  };
  const double integer_dev = std::max(central_deviation(1.0), central_deviation(2.0));
  const double half_dev = central_deviation(0.5);
  const bool ok = integer_dev <= 1e-6 && half_dev <= 1e-4;
  return {ok, "integer flux dev " + num(integer_dev) + " (<= 1e-6), half flux dev " + num(half_dev) + " (<= 1e-4)", ""};
}

// ------------------------------------------------------------------ 3
Outcome propagator_laws() {
  const FourierBasis b(IntervalGeometry(2.0 * kPi), 8);
  Rng rng(3);
  double worst_unitary = 0.0, worst_compose = 0.0, worst_identity = 0.0;
  std::string digest;
  for (int trial = 0; trial < 50; ++trial) {
    const auto path = random_step_path(b, rng, 1.0, 8);
    const auto full = propagator::rs_propagator(path, 64);
    const auto first = propagator::rs_propagator(path.restricted(0.0, 0.5), 32);
    const auto second = propagator::rs_propagator(path.restricted(0.5, 1.0), 32);
    const auto empty = propagator::rs_propagator(path.restricted(0.25, 0.25), 16);
    const double u = propagator::unitarity_defect(full.total);
    const double c = (propagator::compose(second, first).total - full.total).norm();
    const double i = (empty.total - CMatrix::Identity(b.dimension(), b.dimension())).norm();
    worst_unitary = std::max(worst_unitary, u);
    worst_compose = std::max(worst_compose, c);
    worst_identity = std::max(worst_identity, i);
    digest += num(u) + "," + num(c) + "," + num(full.total(3, 5).real()) + "\n";
  }
  const bool ok = worst_unitary <= 1e-9 && worst_compose <= 1e-12 && worst_identity == 0.0;
  return {ok,
          "max unitarity " + num(worst_unitary) + ", max composition " + num(worst_compose) +
              ", identity " + num(worst_identity),
          digest};
}

// ------------------------------------------------------------------ 4
Outcome propagator_convergence() {
  const FourierBasis b(IntervalGeometry(2.0 * kPi), 8);
  const propagator::CoefficientPath path(
      {spectral::build_magnetic_laplacian(0.0, b), spectral::build_position_operator(b)},
      {PiecewisePolynomial::constant(1.0, 0.0, 1.0),
       PiecewisePolynomial::interpolate([](double t) { return std::sin(t); }, 0.0, 1.0, 1024)},
      0.0, 1.0);
  const CMatrix ref = propagator::rs_propagator(path, 1 << 14).total;
  std::vector<double> err;
  for (int k = 8; k <= 512; k *= 2) err.push_back(oracle::spectral_norm(propagator::rs_propagator(path, k).total - ref));
  double worst = 0.0;
  std::string digest;
  for (std::size_t i = 1; i < err.size(); ++i) worst = std::max(worst, err[i] / err[i - 1]);
  for (double e : err) digest += num(e) + "\n";
  return {worst <= 0.7, "max doubling ratio " + num(worst) + " (errors " + num(err.front()) + " .. " + num(err.back()) + ")",
          digest};
}

// ------------------------------------------------------------------ 5
Outcome bound_certification() {
  const auto dir = fresh_dir("certify");
  runner::ExperimentConfig c;
  c.trials = 100;
  c.certify_N = 8;
  const auto r = runner::run_command("certify", c, {dir, std::nullopt, std::nullopt});
  const auto j = nlohmann::json::parse(slurp(dir / "certify.json"));
  const bool ok = r.exit_code == 0 && j["all_pass"].get<bool>() && j["trials"].get<int>() == 100;
  return {ok, "exit " + std::to_string(r.exit_code) + ", worst margin " + num(j["worst_margin"].get<double>()),
          artifact_digest(dir)};
}

// ------------------------------------------------------------------ 6
Outcome chambrion_screening() {
  const FourierBasis b(IntervalGeometry(2.0 * kPi), 16);
  const auto free_sys = control::build_control_system(b, 0.0, 0.0, 0.0);
  const auto free_report = control::check_chambrion_conditions(free_sys.spectrum, free_sys.h1, 1000000);
  const bool free_fails = !free_report.passed() && !free_report.witnesses.empty() &&
                          free_report.witnesses.front().kind == "zero-gap";
  const auto pert = control::build_control_system(b, 0.0, 1.0, 0.0);
  const auto report = control::check_chambrion_conditions(pert.spectrum, pert.h1, 1000000);
  const bool ok = free_fails && report.passed() && report.min_coupling > 1e-12;
  std::string digest = std::to_string(free_report.witnesses.size()) + "," + num(report.min_coupling) + "," +
                       std::to_string(report.unresolved_pairs) + "\n";
  return {ok,
          std::string("free ") + (free_fails ? "fails with zero-gap witness" : "did not fail") + ", perturbed " +
              (report.passed() ? "passes" : "fails") + " (" + std::to_string(report.gaps_screened) +
              " gaps, " + std::to_string(report.unresolved_pairs) + " pairs below resolution), min coupling " +
              num(report.min_coupling),
          digest};
}

// ------------------------------------------------------------------ 7
Outcome envelope_bound(const std::vector<double>& synthesized, double tau, double c) {
  bool ok = true;
  double worst_ratio = 0.0;
  std::string digest;
  if (!synthesized.empty()) {
    const auto env = control::reconstruct_vector_potential(control::PiecewiseConstantControl(synthesized, tau, c), 0.0);
    const double d = env.sup_deviation();
    worst_ratio = std::max(worst_ratio, d / (c * tau));
    ok = ok && d <= c * tau;
    digest += num(d) + "\n";
  }
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> u(16);
    for (auto& v : u) v = rng.uniform(1e-9 * c, c * (1.0 - 1e-9));
    const auto env = control::reconstruct_vector_potential(control::PiecewiseConstantControl(u, tau, c), rng.uniform(-1.0, 1.0));
    const double d = env.sup_deviation(1000);
    worst_ratio = std::max(worst_ratio, d / (c * tau));
    ok = ok && d <= c * tau;
    digest += num(d) + "\n";
  }
  const auto fixture = control::reconstruct_vector_potential(
      control::PiecewiseConstantControl::unchecked(std::vector<double>(8, c), tau, c), 0.3);
  const double eq = fixture.sup_deviation();
  ok = ok && std::abs(eq - c * tau) <= 1e-12 * c * tau;
  digest += num(eq) + "\n";
  return {ok, "max sup|A-a| / (c tau) " + num(worst_ratio) + ", u = c fixture gives " + num(eq / (c * tau)), digest};
}

// ------------------------------------------------------------------ 8
struct Steering {
  Outcome outcome;
  std::vector<double> control;
};

Steering end_to_end() {
  const auto dir = fresh_dir("synthesize");
  runner::ExperimentConfig c;
  c.N = 8;
  c.mu0 = 1.0;
  c.c = 5.0;
  c.seed = 0;
  const auto r = runner::run_command("synthesize", c, {dir, std::nullopt, std::nullopt});
  Steering s;
  if (!fs::exists(dir / "evolve.json")) {
    s.outcome = {false, "synthesize exited " + std::to_string(r.exit_code) + ": " + r.message, ""};
    return s;
  }
  const auto j = nlohmann::json::parse(slurp(dir / "evolve.json"));
  const double fid = j["final_fidelity"].get<double>();
  const double drift = j["max_norm_drift"].get<double>();
  const double res = j["max_boundary_residual"].get<double>();
  s.control = runner::read_envelope(dir / "control.csv");
  const bool ok = r.exit_code == 0 && fid >= 0.9 && drift <= 1e-9 && res <= 1e-6;
  s.outcome = {ok,
               "fidelity " + num(fid) + ", norm drift " + num(drift) + ", boundary residual " + num(res) + ", " +
                   std::to_string(s.control.size()) + " windows",
               artifact_digest(dir)};
  return s;
}

// ------------------------------------------------------------------ 9
Outcome smoothing() {
  const FourierBasis b(IntervalGeometry(2.0 * kPi), 4);
  const double tau = 0.25, c = 1.0, a = 0.1;
  const auto env = control::reconstruct_vector_potential(
      control::PiecewiseConstantControl({0.8, 0.3, 0.6, 0.5}, tau, c), a);
  const double delta1 = 0.15, delta2 = 2.0;
  const auto sm = control::smooth_control(env, delta1, delta2, 2000);
  const auto p1 = control::assemble_boundary_run(env, b);
  const auto p2 = control::assemble_smooth_boundary_run(sm.smooth, b);
  Rng rng(11);
  const CVector psi = rng.normalized_state(b.dimension());
  propagator::CertifyOptions opt;
  opt.rule = propagator::FreezeRule::Midpoint;
  opt.tolerance = 1e-9;
  const auto report = propagator::measure_distance_bound(p1, p2, psi, opt);
  // bound at the achieved deviations: |2A - 2A~| <= 2 d1, |A^2 - A~^2| <= d1 (2 sup|A| + d1), |A' - A~'| <= d2
  const auto terms = control::boundary_terms(b);
  const double sup_a = std::abs(a) + c * tau;
  const double d1 = sm.achieved_delta1, d2 = sm.achieved_delta2;
  const double horizon = env.horizon();
  const double at_deviations = horizon * (2.0 * d1 * (terms[1].matrix() * psi).norm() +
                                          d1 * (2.0 * sup_a + d1) * (terms[2].matrix() * psi).norm() +
                                          d2 * (terms[3].matrix() * psi).norm());
  const bool ok = d1 <= delta1 && d2 <= delta2 && report.measured <= at_deviations + 1e-8 &&
                  report.measured <= report.bound + 1e-8;
  return {ok,
          "width " + num(sm.smooth.width()) + ", deviations (" + num(d1) + ", " + num(d2) + "), measured " +
              num(report.measured) + " <= bound " + num(at_deviations),
          ""};
}

template <class F>
auto timed(F&& f, double& seconds) {
  const auto t0 = std::chrono::steady_clock::now();
  auto r = f();
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

int report(int id, const std::string& title, const Outcome& o, double seconds, double limit) {
  const bool within = limit <= 0.0 || seconds < limit;
  const bool pass = o.ok && within;
  char time[64];
  std::snprintf(time, sizeof time, "%.2f s", seconds);
  std::printf("%s criterion %d (%s): %s; %s%s\n", pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), time,
              within ? "" : " exceeds the runtime limit");
  std::fflush(stdout);
  return pass ? 0 : 1;
}

}  // namespace

int main() {
  int failures = 0;
  double s = 0.0;

  auto o1 = timed(spectral_correctness, s);
  failures += report(1, "spectral correctness", o1, s, 5.0);
  auto o2 = timed(gauge_covariance, s);
  failures += report(2, "gauge covariance", o2, s, 10.0);

  // criteria 3-8 run twice; the second pass feeds the determinism check
  std::vector<std::string> digests[2];
  for (int pass = 0; pass < 2; ++pass) {
    const bool print = pass == 0;
    auto o3 = timed(propagator_laws, s);
    if (print) failures += report(3, "propagator laws", o3, s, 30.0);
    auto o4 = timed(propagator_convergence, s);
    if (print) failures += report(4, "convergence of U_k", o4, s, 60.0);
    auto o5 = timed(bound_certification, s);
    if (print) failures += report(5, "distance bound certification", o5, s, 120.0);
    auto o6 = timed(chambrion_screening, s);
    if (print) failures += report(6, "controllability screening", o6, s, 10.0);
    double s8 = 0.0;
    auto o8 = timed(end_to_end, s8);
    auto o7 = timed([&] { return envelope_bound(o8.control, 0.25, 5.0); }, s);
    if (print) {
      failures += report(7, "envelope bound", o7, s, 5.0);
      failures += report(8, "end-to-end steering", o8.outcome, s8, 300.0);
    }
    digests[pass] = {o3.digest, o4.digest, o5.digest, o6.digest, o7.digest, o8.outcome.digest};
  }

  auto o9 = timed(smoothing, s);
  failures += report(9, "smoothing", o9, s, 60.0);

  Outcome o10;
  std::string first, second;
  for (const auto& d : digests[0]) first += runner::sha256_hex(d);
  for (const auto& d : digests[1]) second += runner::sha256_hex(d);
  o10.ok = first == second;
  o10.detail = "digest " + runner::sha256_hex(first).substr(0, 16) + (o10.ok ? " repeated" : " differs from " + runner::sha256_hex(second).substr(0, 16));
  failures += report(10, "determinism", o10, 0.0, 0.0);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
