#include <doctest.h>

#include <cmath>

#include "boundary_ctrl/errors.hpp"
#include "boundary_ctrl/spectral.hpp"
#include "oracles.hpp"

using namespace bctrl;
using namespace bctrl::spectral;

namespace {
FourierBasis make_basis(int n, double l = 2.0 * kPi) { return FourierBasis(IntervalGeometry(l), n); }
}  // namespace

TEST_CASE("geometry and basis reject bad input") {
  CHECK_THROWS_AS(IntervalGeometry(0.0), InvalidArgument);
  CHECK_THROWS_AS(IntervalGeometry(-1.0), InvalidArgument);
  CHECK_THROWS_AS(IntervalGeometry(std::nan("")), InvalidArgument);
  CHECK_THROWS_AS(make_basis(0), InvalidArgument);
  const auto b = make_basis(3);
  CHECK(b.dimension() == 7);
  CHECK(b.mode(0) == -3);
  CHECK(b.index_of(3) == 6);
  CHECK_THROWS_AS(b.index_of(4), InvalidArgument);
}

TEST_CASE("basis functions are orthonormal under Simpson quadrature") {
  const auto b = make_basis(3, 1.7);
  for (int m = -3; m <= 3; ++m) {
    for (int n = -3; n <= 3; ++n) {
      const double re = oracle::simpson(
          [&](double x) { return (std::conj(b.evaluate(m, x)) * b.evaluate(n, x)).real(); }, 0.0, 1.7, 2000);
      const double im = oracle::simpson(
          [&](double x) { return (std::conj(b.evaluate(m, x)) * b.evaluate(n, x)).imag(); }, 0.0, 1.7, 2000);
      CHECK(re == doctest::Approx(m == n ? 1.0 : 0.0).epsilon(1e-10).scale(1.0));
      CHECK(std::abs(im) < 1e-10);
    }
  }
}

TEST_CASE("reconstruction treats x = l as the periodic image of 0") {
  const auto b = make_basis(2);
  CVector c = CVector::Zero(b.dimension());
  c(b.index_of(1)) = 1.0;
  CHECK(std::abs(b.reconstruct(c, b.length()) - b.reconstruct(c, 0.0)) == 0.0);
  CHECK_THROWS_AS(b.reconstruct(CVector::Zero(3), 0.0), InvalidArgument);
}

TEST_CASE("magnetic Laplacian is diagonal with the closed-form entries") {
  const auto b = make_basis(4, 3.0);
  const double a = 0.37;
  const auto lap = build_magnetic_laplacian(a, b);
  CHECK(lap.is_diagonal());
  for (int n = -4; n <= 4; ++n) {
    const double k = 2.0 * kPi * n / 3.0 - a;
    CHECK(lap.matrix()(b.index_of(n), b.index_of(n)).real() == doctest::Approx(k * k).epsilon(1e-14));
  }
  CHECK_THROWS_AS(build_magnetic_laplacian(INFINITY, b), InvalidArgument);
}

TEST_CASE("position operator matches quadrature of x e_m* e_n") {
  const double l = 2.5;
  const auto b = make_basis(2, l);
  const auto x = build_position_operator(b);
  CHECK(x.is_hermitian(1e-14));
  for (int m = -2; m <= 2; ++m) {
    for (int n = -2; n <= 2; ++n) {
      const double re = oracle::simpson(
          [&](double s) { return (s * std::conj(b.evaluate(m, s)) * b.evaluate(n, s)).real(); }, 0.0, l, 4000);
      const double im = oracle::simpson(
          [&](double s) { return (s * std::conj(b.evaluate(m, s)) * b.evaluate(n, s)).imag(); }, 0.0, l, 4000);
      const Complex entry = x.matrix()(b.index_of(m), b.index_of(n));
      CHECK(std::abs(entry - Complex{re, im}) < 1e-9);
    }
  }
}

TEST_CASE("momentum and identity") {
  const auto b = make_basis(3);
  const auto p = build_momentum_operator(b);
  CHECK(p.matrix()(b.index_of(2), b.index_of(2)).real() == doctest::Approx(2.0));
  CHECK(build_identity(b).matrix().isIdentity());
  const auto sum = build_free_laplacian(b) + p.scaled(-2.0);
  CHECK(sum.matrix()(b.index_of(1), b.index_of(1)).real() == doctest::Approx(-1.0));
  CHECK_THROWS_AS(build_identity(b) + build_identity(make_basis(2)), InvalidArgument);
}

TEST_CASE("eigendecompose rejects non-Hermitian input") {
  const auto b = make_basis(2);
  CMatrix m = CMatrix::Zero(5, 5);
  m(0, 1) = 1e-6;
  try {
    eigendecompose(TruncatedOperator(b, m));
    FAIL("expected PreconditionError");
  } catch (const PreconditionError& e) {
    CHECK(e.deviation() == doctest::Approx(1e-6));
  }
}

TEST_CASE("free Laplacian spectrum is ordered deterministically") {
  const auto b = make_basis(3);
  const auto s = eigendecompose(build_free_laplacian(b));
  CHECK(s.eigenvalues(0) == 0.0);
  CHECK(s.dominant_modes == std::vector<int>{0, -1, 1, -2, 2, -3, 3});
  CHECK((s.eigenvectors.adjoint() * s.eigenvectors).isIdentity(1e-14));
  const auto g = gap_sequence(s, 3);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == 0.0);
  CHECK_THROWS_AS(gap_sequence(s, 7), InvalidArgument);
}

TEST_CASE("dense degenerate operator gets canonical eigenvectors") {
  // free Laplacian (spectrum 0, 1, 1, 4, 4) with modes 0 and -2 rotated into
  // each other, so the matrix is dense but the 1-cluster is still span(e_-1, e_1)
  const auto b = make_basis(2);
  const auto lap = build_free_laplacian(b);
  CMatrix w = CMatrix::Identity(5, 5);
  const double c = std::cos(0.3), s = std::sin(0.3);
  w(0, 0) = c; w(0, 2) = -s; w(2, 0) = s; w(2, 2) = c;
  const CMatrix h = w * lap.matrix() * w.adjoint();
  const auto spec = eigendecompose(TruncatedOperator(b, h));
  CHECK(std::abs(spec.eigenvalues(0)) < 1e-12);
  for (Index k = 0; k < 5; ++k) {
    const CVector v = spec.eigenvectors.col(k);
    Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    CHECK(std::abs(v(arg).imag()) < 1e-12);
    CHECK(v(arg).real() > 0.0);
    CHECK((h * v - spec.eigenvalues(k) * v).norm() < 1e-10);
  }
  CHECK(spec.dominant_modes[1] == -1);
  CHECK(spec.dominant_modes[2] == 1);
  CHECK((spec.eigenvectors.col(1) - b.unit(-1)).norm() < 1e-12);
  CHECK((spec.eigenvectors.col(2) - b.unit(1)).norm() < 1e-12);
  CHECK(spec.dominant_modes[3] < spec.dominant_modes[4]);
}

TEST_CASE("dense non-degenerate operator agrees with the solver it wraps") {
  const auto b = make_basis(3);
  const auto h = build_free_laplacian(b) + build_position_operator(b).scaled(0.7);
  const auto spec = eigendecompose(h);
  for (Index k = 1; k < spec.dimension(); ++k) CHECK(spec.eigenvalues(k) >= spec.eigenvalues(k - 1));
  const CMatrix back = spec.eigenvectors * spec.eigenvalues.asDiagonal() * spec.eigenvectors.adjoint();
  CHECK((back - h.matrix()).norm() < 1e-11);
}

TEST_CASE("finite-difference oracle reproduces the low magnetic spectrum") {
  const double l = 2.0 * kPi;
  const double a = 0.3;
  oracle::PeriodicDifference fd(l, a, 512);
  const auto low = fd.lowest(6, -1.0, 10, 60);
  const auto spec = eigendecompose(build_magnetic_laplacian(a, make_basis(8)));
  const double h = fd.spacing();
  for (int k = 0; k < 6; ++k) {
    const double lam = spec.eigenvalues(k);
    CHECK(std::abs(low[k] - lam) <= lam * lam * h * h / 6.0 + 1e-9);
  }
}
