#pragma once

// Truncated plane-wave representation of operators on the interval [0, l]
// with periodic boundary conditions. Units: hbar = 2m = 1.

#include <vector>

#include "boundary_ctrl/types.hpp"

namespace bctrl::spectral {

class IntervalGeometry {
 public:
  explicit IntervalGeometry(double length);

  double length() const noexcept { return length_; }

  bool operator==(const IntervalGeometry&) const = default;

 private:
  double length_;
};

/// Orthonormal modes e_n(x) = exp(i 2 pi n x / l) / sqrt(l) for n = -N..N.
/// Coefficient vectors are indexed so that index 0 holds mode -N.
class FourierBasis {
 public:
  FourierBasis(IntervalGeometry geometry, int half_width);

  const IntervalGeometry& geometry() const noexcept { return geometry_; }
  double length() const noexcept { return geometry_.length(); }
  int half_width() const noexcept { return half_width_; }
  Index dimension() const noexcept { return 2 * Index{half_width_} + 1; }

  int mode(Index index) const noexcept { return static_cast<int>(index) - half_width_; }
  Index index_of(int mode) const;
  std::vector<int> modes() const;

  /// 2 pi n / l
  double wavenumber(int mode) const noexcept;

  Complex evaluate(int mode, double x) const;

  /// Band-limited reconstruction sum_n c_n e_n(x). The endpoint x = l is
  /// evaluated as the periodic image of x = 0.
  Complex reconstruct(const CVector& coefficients, double x) const;

  CVector unit(int mode) const;

  bool operator==(const FourierBasis&) const = default;

 private:
  IntervalGeometry geometry_;
  int half_width_;
};

/// Complex matrix of an operator in a FourierBasis. Hermiticity is not
/// enforced on construction so that negative fixtures can be represented;
/// operations that need it check `hermiticity_defect()`.
class TruncatedOperator {
 public:
  TruncatedOperator(FourierBasis basis, CMatrix matrix);

  const FourierBasis& basis() const noexcept { return basis_; }
  const CMatrix& matrix() const noexcept { return matrix_; }
  Index dimension() const noexcept { return matrix_.rows(); }

  /// max_ij |H_ij - conj(H_ji)|
  double hermiticity_defect() const;
  bool is_hermitian(double tolerance = 1e-12) const { return hermiticity_defect() <= tolerance; }
  bool is_diagonal() const;

  TruncatedOperator operator+(const TruncatedOperator& other) const;
  TruncatedOperator scaled(double factor) const;

 private:
  FourierBasis basis_;
  CMatrix matrix_;
};

struct Spectrum {
  RVector eigenvalues;             // ascending
  CMatrix eigenvectors;            // columns, unitary
  std::vector<int> dominant_modes; // Fourier mode carrying the largest weight in each column

  Index dimension() const noexcept { return eigenvalues.size(); }
  /// lambda_{k+1} - lambda_k for every consecutive pair.
  RVector gaps() const;
};

/// -(d/dx - iA)^2 for constant A: diagonal with entries (2 pi n / l - A)^2.
TruncatedOperator build_magnetic_laplacian(double potential, const FourierBasis& basis);
TruncatedOperator build_free_laplacian(const FourierBasis& basis);
/// Multiplication by x on [0, l].
TruncatedOperator build_position_operator(const FourierBasis& basis);
/// Diagonal with entries 2 pi n / l (the operator -i d/dx).
TruncatedOperator build_momentum_operator(const FourierBasis& basis);
TruncatedOperator build_identity(const FourierBasis& basis);

/// Hermitian eigendecomposition with deterministic ordering. Degenerate
/// eigenspaces are rotated onto the Fourier modes they overlap most and
/// ordered by ascending dominant mode; each column is phased so that its
/// dominant component is real and positive.
///
/// Throws PreconditionError when the Hermiticity defect exceeds 1e-9.
Spectrum eigendecompose(const TruncatedOperator& op);

/// First `count` consecutive eigenvalue differences.
std::vector<double> gap_sequence(const Spectrum& spectrum, Index count);

}  // namespace bctrl::spectral
