#include <doctest.h>

#include <cmath>

#include "boundary_ctrl/errors.hpp"
#include "boundary_ctrl/gauge.hpp"
#include "boundary_ctrl/random.hpp"
#include "oracles.hpp"

using namespace bctrl;
using namespace bctrl::gauge;
using spectral::FourierBasis;
using spectral::IntervalGeometry;

TEST_CASE("boundary unitary is unitary and periodic at a flux quantum") {
  const double l = 2.0 * kPi;
  for (double a : {0.0, 0.3, 0.5, 1.7}) CHECK(boundary_unitary(a, l).unitarity_defect() < 1e-15);
  const auto u = boundary_unitary(1.0, l);
  CHECK((u.matrix - periodic_unitary()).norm() < 1e-14);
  // conjugation identity Tbar^{-1} U_p Tbar
  const double a = 0.41;
  const Eigen::Matrix2cd t = boundary_gauge(a, l);
  CHECK((t.inverse() * periodic_unitary() * t - boundary_unitary(a, l).matrix).norm() < 1e-15);
  CHECK_THROWS_AS(boundary_unitary(NAN, l), InvalidArgument);
}

TEST_CASE("gauge matrix entries match quadrature of e^{iAx}") {
  const double l = 2.0 * kPi;
  const FourierBasis b(IntervalGeometry(l), 6);
  const double a = 0.3;
  const auto g = gauge_matrix_full(a, b);
  for (int m : {-2, 0, 3}) {
    for (int n : {-1, 0, 2}) {
      auto integrand = [&](double x) {
        return std::conj(b.evaluate(m, x)) * std::exp(Complex{0.0, a * x}) * b.evaluate(n, x);
      };
      const double re = oracle::simpson([&](double x) { return integrand(x).real(); }, 0.0, l, 4000);
      const double im = oracle::simpson([&](double x) { return integrand(x).imag(); }, 0.0, l, 4000);
      CHECK(std::abs(g.raw(b.index_of(m), b.index_of(n)) - Complex{re, im}) < 1e-9);
    }
  }
  CHECK((g.unitary.adjoint() * g.unitary).isIdentity(1e-12));
  CHECK(g.leakage > 0.0);
  CHECK(g.leakage < kMaxGaugeLeakage);
}

TEST_CASE("integer flux is an exact mode shift") {
  const double l = 2.0 * kPi;
  const FourierBasis b(IntervalGeometry(l), 10);
  const CMatrix g = gauge_matrix(2.0, b);
  CHECK(g.cwiseAbs().maxCoeff() == 1.0);
  CHECK((g * b.unit(-1) - b.unit(1)).norm() == 0.0);
  CHECK(gauge_matrix(0.0, b).isIdentity(0.0));
}

TEST_CASE("coarse truncation refuses a leaky gauge map") {
  const FourierBasis b(IntervalGeometry(2.0 * kPi), 2);
  try {
    gauge_matrix(1.7, b);
    FAIL("expected TruncationError");
  } catch (const TruncationError& e) {
    CHECK(e.deviation() > kMaxGaugeLeakage);
  }
}

TEST_CASE("picture changes are inverse and need normalized states") {
  const FourierBasis b(IntervalGeometry(2.0 * kPi), 6);
  Rng rng(5);
  const CVector psi = rng.normalized_state(b.dimension());
  const CVector back = to_magnetic_picture(to_boundary_picture(psi, 0.3, b), 0.3, b);
  CHECK((back - psi).norm() < 1e-12);
  CHECK_THROWS_AS(to_boundary_picture(2.0 * psi, 0.3, b), PreconditionError);
  CHECK_THROWS_AS(to_boundary_picture(CVector::Ones(3), 0.3, b), InvalidArgument);
}

TEST_CASE("gauged residual vanishes for band-limited magnetic states") {
  const FourierBasis b(IntervalGeometry(2.0 * kPi), 4);
  Rng rng(9);
  const CVector phi = rng.normalized_state(b.dimension());
  for (double a : {0.0, 0.3, 1.0 / (2.0 * std::sqrt(2.0))}) {
    CHECK(gauged_boundary_residual(phi, a, b, 257) < 1e-13);
    const BoundaryResidualEvaluator eval(b, 257);
    CHECK(eval(phi, a) == doctest::Approx(gauged_boundary_residual(phi, a, b, 257)).epsilon(1e-9).scale(1e-12));
  }
  // a periodic state violates the quasi-periodic condition unless Al is a multiple of 2 pi
  CHECK(quasi_periodic_residual(b.unit(0), 0.5, b, 65) == doctest::Approx(2.0 * std::sin(0.5 * kPi)).epsilon(1e-12));
  CHECK(quasi_periodic_residual(b.unit(0), 1.0, b, 65) < 1e-14);
  CHECK_THROWS_AS(quasi_periodic_residual(CVector::Zero(b.dimension()), 0.5, b, 65), InvalidArgument);
  CHECK_THROWS_AS(gauged_boundary_residual(phi, 0.5, b, 1), InvalidArgument);
}
