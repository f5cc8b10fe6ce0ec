#pragma once

#include <functional>
#include <vector>

namespace bctrl {

/// c0 + c1 (t - t0) + c2 (t - t0)^2 on [t0, t1].
struct PolynomialPiece {
  double t0 = 0.0;
  double t1 = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double value(double t) const noexcept {
    const double h = t - t0;
    return c0 + h * (c1 + h * c2);
  }
  double derivative(double t) const noexcept { return c1 + 2.0 * c2 * (t - t0); }
};

/// Contiguous run of polynomial pieces, right-continuous at breakpoints.
class PiecewisePolynomial {
 public:
  PiecewisePolynomial() = default;
  explicit PiecewisePolynomial(std::vector<PolynomialPiece> pieces);

  static PiecewisePolynomial constant(double value, double t0, double t1);
  static PiecewisePolynomial affine(double value_at_t0, double slope, double t0, double t1);
  /// Piecewise-constant steps: values[j] on [t0 + j h, t0 + (j+1) h).
  static PiecewisePolynomial steps(const std::vector<double>& values, double t0, double t1);
  /// Quadratic interpolation of f at the ends and midpoint of each of
  /// `pieces` equal subintervals.
  static PiecewisePolynomial interpolate(const std::function<double(double)>& f, double t0,
                                         double t1, int pieces);

  const std::vector<PolynomialPiece>& pieces() const noexcept { return pieces_; }
  double begin() const { return pieces_.front().t0; }
  double end() const { return pieces_.back().t1; }
  bool empty() const noexcept { return pieces_.empty(); }

  double value(double t) const { return locate(t).value(t); }
  double derivative(double t) const { return locate(t).derivative(t); }
  bool is_constant() const;

  std::vector<double> breakpoints() const;

  PiecewisePolynomial operator+(const PiecewisePolynomial& other) const;
  PiecewisePolynomial operator-(const PiecewisePolynomial& other) const;
  PiecewisePolynomial scaled(double factor) const;
  /// Pointwise product; the result must remain of degree <= 2.
  PiecewisePolynomial operator*(const PiecewisePolynomial& other) const;
  PiecewisePolynomial derivative_polynomial() const;

  /// sup over [a, b] of |p(t)|, from the exact extrema of every piece plus
  /// `samples_per_piece` equispaced samples.
  double sup_norm(double a, double b, int samples_per_piece = 10000) const;

 private:
  const PolynomialPiece& locate(double t) const;

  std::vector<PolynomialPiece> pieces_;
};

}  // namespace bctrl
