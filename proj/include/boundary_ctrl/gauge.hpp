#pragma once

// Gauge map T = exp(i A x) between the magnetic picture (periodic boundary
// conditions, magnetic Laplacian) and the boundary picture (quasi-periodic
// boundary conditions, free Laplacian).

#include <Eigen/Dense>

#include "boundary_ctrl/spectral.hpp"
#include "boundary_ctrl/types.hpp"

namespace bctrl::gauge {

struct GaugeFunction {
  double potential = 0.0;
  // integration constant of chi(x) = A x + b; kept at zero
  double offset = 0.0;

  double chi(double x) const noexcept { return potential * x + offset; }
};

struct BoundaryUnitary {
  Eigen::Matrix2cd matrix;

  double unitarity_defect() const;
};

/// Boundary unitary of the quasi-periodic family, written as
/// Tbar^{-1} U_periodic Tbar with Tbar = diag(1, e^{iAl}).
BoundaryUnitary boundary_unitary(double potential, double length);

/// diag(1, e^{iAl})
Eigen::Matrix2cd boundary_gauge(double potential, double length);
Eigen::Matrix2cd periodic_unitary();

struct GaugeMatrix {
  CMatrix unitary;  // polar factor of `raw`
  CMatrix raw;      // Galerkin matrix <e_m, e^{iAx} e_n> before projection
  /// 1 - ||raw||_F^2 / dim: average fraction of a mode's weight that leaves
  /// the truncation window.
  double leakage = 0.0;
  /// max_i |1 - sigma_i(raw)|
  double singular_deviation = 0.0;
};

/// Leakage above which `gauge_matrix` refuses to project.
inline constexpr double kMaxGaugeLeakage = 0.1;

/// Matrix of multiplication by e^{iAx}, projected to the nearest unitary.
/// Throws TruncationError when the leakage exceeds kMaxGaugeLeakage.
GaugeMatrix gauge_matrix_full(double potential, const spectral::FourierBasis& basis);
CMatrix gauge_matrix(double potential, const spectral::FourierBasis& basis);

/// Psi = T^dagger Phi. Requires a normalized state.
CVector to_boundary_picture(const CVector& state, double potential,
                            const spectral::FourierBasis& basis);
/// Phi = T Psi.
CVector to_magnetic_picture(const CVector& state, double potential,
                            const spectral::FourierBasis& basis);

/// |Psi(0) - e^{iAl} Psi(l)| / max_j |Psi(x_j)| for a state given by its
/// Fourier coefficients, with x_j on M equispaced points including both ends.
double quasi_periodic_residual(const CVector& state, double potential,
                               const spectral::FourierBasis& basis, int samples);

/// Same diagnostic for the boundary-picture wavefunction
/// Psi(x) = e^{-iAx} Phi(x), evaluated pointwise from the magnetic-picture
/// coefficients of Phi.
double gauged_boundary_residual(const CVector& magnetic_state, double potential,
                                const spectral::FourierBasis& basis, int samples);

/// gauged_boundary_residual with the sampled mode values computed once.
class BoundaryResidualEvaluator {
 public:
  BoundaryResidualEvaluator(const spectral::FourierBasis& basis, int samples);

  double operator()(const CVector& magnetic_state, double potential) const;

 private:
  double length_;
  CMatrix samples_;    // e_n(x_j), rows j
  RVector positions_;  // x_j
};

}  // namespace bctrl::gauge
