#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "boundary_ctrl/control.hpp"
#include "boundary_ctrl/errors.hpp"
#include "boundary_ctrl/parallel.hpp"
#include "boundary_ctrl/random.hpp"
#include "oracles.hpp"

using namespace bctrl;
using namespace bctrl::control;
using spectral::FourierBasis;
using spectral::IntervalGeometry;

namespace {
FourierBasis basis(int n) { return FourierBasis(IntervalGeometry(2.0 * kPi), n); }
}  // namespace

TEST_CASE("sequences") {
  CHECK(primes(6) == std::vector<std::uint64_t>{2, 3, 5, 7, 11, 13});
  const auto nu = nu_sequence(3);
  CHECK(nu[0] == doctest::Approx(0.5 / std::sqrt(2.0)));
  CHECK(nu[2] == doctest::Approx(0.125 / std::sqrt(5.0)));
  const auto al = alpha_sequence(2);
  CHECK(al[0] == 0.25);
  CHECK(al[1] == 0.125);
}

TEST_CASE("controls enforce the open interval") {
  CHECK_THROWS_AS(PiecewiseConstantControl({0.0}, 0.25, 5.0), InvalidArgument);
  CHECK_THROWS_AS(PiecewiseConstantControl({5.0}, 0.25, 5.0), InvalidArgument);
  CHECK_THROWS_AS(PiecewiseConstantControl({1.0}, 0.0, 5.0), InvalidArgument);
  CHECK_NOTHROW(PiecewiseConstantControl::unchecked({5.0}, 0.25, 5.0));
  const PiecewiseConstantControl u({1.0, 2.0, 3.0}, 0.5, 5.0);
  CHECK(u.horizon() == 1.5);
}

TEST_CASE("sawtooth envelope resets at window starts") {
  const double a = 0.2;
  const auto env = reconstruct_vector_potential(PiecewiseConstantControl({1.0, 4.0}, 0.25, 5.0), a);
  CHECK(env.value(0.0) == doctest::Approx(a));
  CHECK(env.value(0.125) == doctest::Approx(a + 0.125));
  CHECK(env.value(0.25) == doctest::Approx(a));
  CHECK(env.value(0.375) == doctest::Approx(a + 0.5));
  CHECK(env.derivative(0.3) == doctest::Approx(4.0));
  REQUIRE(env.jumps().size() == 1);
  CHECK(env.jumps()[0] == doctest::Approx(-0.25));
  CHECK(env.sup_deviation() == doctest::Approx(1.0));

  const auto fixture = reconstruct_vector_potential(PiecewiseConstantControl::unchecked({5.0, 5.0}, 0.25, 5.0), 0.0);
  CHECK(fixture.sup_deviation() == doctest::Approx(1.25).epsilon(1e-15));

  const auto flat = constant_envelope(0.3, 2.0);
  CHECK(flat.value(1.7) == 0.3);
  CHECK(flat.sup_deviation() == 0.0);
}

TEST_CASE("envelope deviation never exceeds c tau for random controls") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> u(12);
    for (auto& v : u) v = rng.uniform(1e-6, 3.0 - 1e-6);
    const auto env = reconstruct_vector_potential(PiecewiseConstantControl(u, 0.1, 3.0), -0.4);
    CHECK(env.sup_deviation(500) <= 3.0 * 0.1);
  }
}

TEST_CASE("continued-fraction screening") {
  auto w = screen_ratio(3.0, 1.0, 1);
  CHECK(w.q == 1);
  CHECK(w.p == 3);
  w = screen_ratio(7.0, 3.0, 2);
  CHECK(w.q == 0);
  w = screen_ratio(7.0, 3.0, 3);
  CHECK(w.q == 3);
  CHECK(w.p == 7);
  CHECK(screen_ratio(std::sqrt(2.0), 1.0, 1000000).q == 0);
  CHECK(screen_ratio(kPi, 1.0, 1000000).q == 0);
  // 355/113 is a convergent of pi but not an exact relation
  CHECK(screen_ratio(355.0, 113.0, 200).q == 113);
}

TEST_CASE("free Laplacian fails the screen with a degeneracy witness") {
  const auto b = basis(4);
  const auto sys = build_control_system(b, 0.0, 0.0, 0.0);
  const auto r = check_chambrion_conditions(sys.spectrum, sys.h1, 1000000);
  CHECK(check_normal_system(sys.h0, sys.h1).degenerate_spectrum);
  CHECK_FALSE(r.gaps_independent);
  REQUIRE_FALSE(r.witnesses.empty());
  CHECK(r.witnesses.front().kind == "zero-gap");
  CHECK_FALSE(r.passed());
}

TEST_CASE("perturbed system passes with nonzero couplings") {
  const auto b = basis(8);
  const auto sys = build_control_system(b, 0.0, 1.0, 0.0);
  const auto r = check_chambrion_conditions(sys.spectrum, sys.h1, 1000000);
  CHECK(r.passed());
  CHECK(r.gaps_screened == 16);
  CHECK(r.min_coupling > kCouplingFloor);
  // H0p is diagonal in the eigenbasis of the Laplacian with the nu weights
  const auto nu = nu_sequence(static_cast<std::size_t>(b.dimension()));
  const auto lap = spectral::eigendecompose(sys.laplacian);
  for (Index j = 0; j < 4; ++j) {
    const CVector phi = lap.eigenvectors.col(j);
    CHECK((phi.adjoint() * sys.h0p.matrix() * phi)(0, 0).real() == doctest::Approx(nu[j]));
  }
}

TEST_CASE("coupling perturbation fills the zero set symmetrically") {
  const auto b = basis(3);
  const auto lap = spectral::eigendecompose(spectral::build_free_laplacian(b));
  const auto p = build_perturbations(lap, b, {0, 2}, 0.0, 2.0);
  CHECK(p.h1p.is_hermitian());
  const CVector p0 = lap.eigenvectors.col(0), p1 = lap.eigenvectors.col(1);
  CHECK(std::abs((p1.adjoint() * p.h1p.matrix() * p0)(0, 0) - 2.0 * 0.25) < 1e-14);
  CHECK(p.h0p.matrix().isZero());
}

TEST_CASE("normal-system check flags a non-Hermitian coupling") {
  const auto b = basis(2);
  CMatrix m = spectral::build_position_operator(b).matrix();
  m(0, 1) += 1e-3;
  const auto r = check_normal_system(spectral::build_free_laplacian(b), spectral::TruncatedOperator(b, m));
  CHECK_FALSE(r.a1_hermitian);
  CHECK(r.a1_max_asymmetry == doctest::Approx(1e-3));
}

TEST_CASE("boundary path carries the expected coefficients") {
  const auto b = basis(3);
  const auto env = reconstruct_vector_potential(PiecewiseConstantControl({2.0, 1.0}, 0.5, 5.0), 0.3);
  const auto path = assemble_boundary_run(env, b);
  REQUIRE(path.terms().size() == 4);
  const auto v = path.coefficient_values(0.75);
  const double a = 0.3 + 0.25;
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(v[1] == doctest::Approx(-2.0 * a));
  CHECK(v[2] == doctest::Approx(a * a));
  CHECK(v[3] == doctest::Approx(-1.0));
  // with A' = 0 the generator is the magnetic Laplacian of the current A
  const auto flat = assemble_boundary_run(constant_envelope(0.3, 1.0), b);
  CHECK((flat.generator(0.5) - spectral::build_magnetic_laplacian(0.3, b).matrix()).norm() < 1e-13);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 3) throw InvalidArgument("boom");
                  }),
                  InvalidArgument);
  CHECK(worker_count() >= 1);
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
  const CVector s = Rng(1).normalized_state(7);
  CHECK(s.norm() == doctest::Approx(1.0));
}
