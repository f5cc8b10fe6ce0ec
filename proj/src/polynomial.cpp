#include "boundary_ctrl/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "boundary_ctrl/errors.hpp"

namespace bctrl {

namespace {

double snap_tolerance(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

// Re-express a piece in the local coordinate of a new origin.
PolynomialPiece restrict_to(const PolynomialPiece& p, double t0, double t1) {
  const double h = t0 - p.t0;
  PolynomialPiece out;
  out.t0 = t0;
  out.t1 = t1;
  out.c0 = p.c0 + h * (p.c1 + h * p.c2);
  out.c1 = p.c1 + 2.0 * h * p.c2;
  out.c2 = p.c2;
  return out;
}

template <class Combine>
PiecewisePolynomial merge(const PiecewisePolynomial& a, const PiecewisePolynomial& b,
                          Combine combine) {
  if (a.empty() || b.empty()) throw InvalidArgument("cannot combine an empty polynomial");
  const double lo = std::max(a.begin(), b.begin());
  const double hi = std::min(a.end(), b.end());
  if (!(lo < hi)) throw InvalidArgument("polynomials have disjoint supports");
  std::vector<double> cuts = a.breakpoints();
  const auto bb = b.breakpoints();
  cuts.insert(cuts.end(), bb.begin(), bb.end());
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> grid;
  for (double x : cuts) {
    if (x < lo || x > hi) continue;
    if (grid.empty() || x - grid.back() > snap_tolerance(x)) grid.push_back(x);
  }
  if (grid.front() > lo) grid.insert(grid.begin(), lo);
  if (grid.back() < hi) grid.push_back(hi);
  std::vector<PolynomialPiece> out;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double mid = 0.5 * (grid[i] + grid[i + 1]);
    // locate by midpoint so that snapped breakpoints never select a neighbour
    PolynomialPiece ra, rb;
    for (const auto& p : a.pieces())
      if (mid >= p.t0 && mid <= p.t1) { ra = restrict_to(p, grid[i], grid[i + 1]); break; }
    for (const auto& p : b.pieces())
      if (mid >= p.t0 && mid <= p.t1) { rb = restrict_to(p, grid[i], grid[i + 1]); break; }
    out.push_back(combine(ra, rb));
  }
  return PiecewisePolynomial(std::move(out));
}

}  // namespace

PiecewisePolynomial::PiecewisePolynomial(std::vector<PolynomialPiece> pieces)
    : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw InvalidArgument("piecewise polynomial needs at least one piece");
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    if (!std::isfinite(p.t0) || !std::isfinite(p.t1) || !std::isfinite(p.c0) ||
        !std::isfinite(p.c1) || !std::isfinite(p.c2)) {
      throw InvalidArgument("polynomial piece has non-finite data");
    }
    if (!(p.t1 > p.t0)) throw InvalidArgument("polynomial piece has empty interval");
    if (i > 0 && std::abs(p.t0 - pieces_[i - 1].t1) > snap_tolerance(p.t0)) {
      std::ostringstream msg;
      msg << "polynomial pieces are not contiguous at t = " << p.t0;
      throw InvalidArgument(msg.str());
    }
  }
}

PiecewisePolynomial PiecewisePolynomial::constant(double value, double t0, double t1) {
  return PiecewisePolynomial({PolynomialPiece{t0, t1, value, 0.0, 0.0}});
}

PiecewisePolynomial PiecewisePolynomial::affine(double value_at_t0, double slope, double t0,
                                                double t1) {
  return PiecewisePolynomial({PolynomialPiece{t0, t1, value_at_t0, slope, 0.0}});
}

PiecewisePolynomial PiecewisePolynomial::steps(const std::vector<double>& values, double t0,
                                               double t1) {
  if (values.empty()) throw InvalidArgument("steps need at least one value");
  std::vector<PolynomialPiece> pieces;
  const double n = static_cast<double>(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double a = t0 + (t1 - t0) * (static_cast<double>(j) / n);
    const double b = j + 1 == values.size() ? t1 : t0 + (t1 - t0) * (static_cast<double>(j + 1) / n);
    pieces.push_back({a, b, values[j], 0.0, 0.0});
  }
  return PiecewisePolynomial(std::move(pieces));
}

PiecewisePolynomial PiecewisePolynomial::interpolate(const std::function<double(double)>& f,
                                                     double t0, double t1, int pieces) {
  if (pieces < 1) throw InvalidArgument("interpolation needs at least one piece");
  std::vector<PolynomialPiece> out;
  for (int j = 0; j < pieces; ++j) {
    const double a = t0 + (t1 - t0) * j / pieces;
    const double b = j + 1 == pieces ? t1 : t0 + (t1 - t0) * (j + 1) / pieces;
    const double h = b - a;
    const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    // Newton form through (a, fa), (a + h/2, fm), (b, fb)
    const double c2 = 2.0 * (fa - 2.0 * fm + fb) / (h * h);
    const double c1 = (fb - fa) / h - c2 * h;
    out.push_back({a, b, fa, c1, c2});
  }
  return PiecewisePolynomial(std::move(out));
}

bool PiecewisePolynomial::is_constant() const {
  for (const auto& p : pieces_)
    if (p.c1 != 0.0 || p.c2 != 0.0 || p.c0 != pieces_.front().c0) return false;
  return true;
}

std::vector<double> PiecewisePolynomial::breakpoints() const {
  std::vector<double> out;
  for (const auto& p : pieces_) out.push_back(p.t0);
  out.push_back(pieces_.back().t1);
  return out;
}

const PolynomialPiece& PiecewisePolynomial::locate(double t) const {
  if (pieces_.empty()) throw InvalidArgument("evaluating an empty polynomial");
  if (t < begin() - snap_tolerance(t) || t > end() + snap_tolerance(t)) {
    std::ostringstream msg;
    msg << "t = " << t << " outside polynomial support [" << begin() << ", " << end() << "]";
    throw InvalidArgument(msg.str());
  }
  // last piece whose start is <= t (up to snapping): right-continuous
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double x, const PolynomialPiece& p) {
                               return x < p.t0 - snap_tolerance(p.t0);
                             });
  if (it == pieces_.begin()) return pieces_.front();
  return *(it - 1);
}

PiecewisePolynomial PiecewisePolynomial::operator+(const PiecewisePolynomial& other) const {
  return merge(*this, other, [](const PolynomialPiece& a, const PolynomialPiece& b) {
    return PolynomialPiece{a.t0, a.t1, a.c0 + b.c0, a.c1 + b.c1, a.c2 + b.c2};
  });
}

PiecewisePolynomial PiecewisePolynomial::operator-(const PiecewisePolynomial& other) const {
  return merge(*this, other, [](const PolynomialPiece& a, const PolynomialPiece& b) {
    return PolynomialPiece{a.t0, a.t1, a.c0 - b.c0, a.c1 - b.c1, a.c2 - b.c2};
  });
}

PiecewisePolynomial PiecewisePolynomial::operator*(const PiecewisePolynomial& other) const {
  return merge(*this, other, [](const PolynomialPiece& a, const PolynomialPiece& b) {
    const double c3 = a.c1 * b.c2 + a.c2 * b.c1;
    const double c4 = a.c2 * b.c2;
    if (c3 != 0.0 || c4 != 0.0) throw InvalidArgument("product exceeds degree 2");
    return PolynomialPiece{a.t0, a.t1, a.c0 * b.c0, a.c0 * b.c1 + a.c1 * b.c0,
                           a.c0 * b.c2 + a.c1 * b.c1 + a.c2 * b.c0};
  });
}

PiecewisePolynomial PiecewisePolynomial::scaled(double factor) const {
  auto pieces = pieces_;
  for (auto& p : pieces) {
    p.c0 *= factor;
    p.c1 *= factor;
    p.c2 *= factor;
  }
  return PiecewisePolynomial(std::move(pieces));
}

PiecewisePolynomial PiecewisePolynomial::derivative_polynomial() const {
  auto pieces = pieces_;
  for (auto& p : pieces) {
    p.c0 = p.c1;
    p.c1 = 2.0 * p.c2;
    p.c2 = 0.0;
  }
  return PiecewisePolynomial(std::move(pieces));
}

double PiecewisePolynomial::sup_norm(double a, double b, int samples_per_piece) const {
  if (!(b >= a)) throw InvalidArgument("sup_norm needs a <= b");
  double sup = 0.0;
  for (const auto& p : pieces_) {
    const double lo = std::max(a, p.t0);
    const double hi = std::min(b, p.t1);
    if (lo > hi) continue;
    sup = std::max({sup, std::abs(p.value(lo)), std::abs(p.value(hi))});
    if (p.c2 != 0.0) {
      const double vertex = p.t0 - p.c1 / (2.0 * p.c2);
      if (vertex > lo && vertex < hi) sup = std::max(sup, std::abs(p.value(vertex)));
    }
    for (int j = 1; j < samples_per_piece; ++j) {
      const double t = lo + (hi - lo) * j / samples_per_piece;
      sup = std::max(sup, std::abs(p.value(t)));
    }
  }
  return sup;
}

}  // namespace bctrl
