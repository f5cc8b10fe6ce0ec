#include "boundary_ctrl/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "boundary_ctrl/errors.hpp"

namespace bctrl::gauge {

namespace {

void require_normalized(const CVector& state) {
  const double n = state.norm();
  if (std::abs(n - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << "state must be normalized, norm = " << n;
    throw PreconditionError(msg.str(), std::abs(n - 1.0));
  }
}

Complex evaluate_raw(const spectral::FourierBasis& basis, const CVector& c, double x) {
  Complex sum{0.0, 0.0};
  for (Index i = 0; i < basis.dimension(); ++i) sum += c(i) * basis.evaluate(basis.mode(i), x);
  return sum;
}

double sampled_sup(const spectral::FourierBasis& basis, int samples,
                   const auto& wavefunction) {
  double sup = 0.0;
  const double l = basis.length();
  for (int j = 0; j < samples; ++j) {
    const double x = l * j / (samples - 1);
    sup = std::max(sup, std::abs(wavefunction(x)));
  }
  return sup;
}

}  // namespace

double BoundaryUnitary::unitarity_defect() const {
  return (matrix.adjoint() * matrix - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
}

Eigen::Matrix2cd periodic_unitary() {
  Eigen::Matrix2cd u;
  u << 0.0, 1.0, 1.0, 0.0;
  return u;
}

Eigen::Matrix2cd boundary_gauge(double potential, double length) {
  Eigen::Matrix2cd t = Eigen::Matrix2cd::Zero();
  t(0, 0) = 1.0;
  t(1, 1) = std::exp(kI * (potential * length));
  return t;
}

BoundaryUnitary boundary_unitary(double potential, double length) {
  if (!std::isfinite(potential) || !std::isfinite(length)) {
    throw InvalidArgument("boundary_unitary needs finite inputs");
  }
  const Complex phase = std::exp(kI * (potential * length));
  BoundaryUnitary out;
  out.matrix << 0.0, phase, std::conj(phase), 0.0;
  return out;
}

GaugeMatrix gauge_matrix_full(double potential, const spectral::FourierBasis& basis) {
  if (!std::isfinite(potential)) throw InvalidArgument("gauge potential must be finite");
  const Index dim = basis.dimension();
  GaugeMatrix out;
  if (potential == 0.0) {
    out.unitary = CMatrix::Identity(dim, dim);
    out.raw = out.unitary;
    return out;
  }
  const double l = basis.length();
  const double flux = potential * l;
  const double quanta = std::round(flux / (2.0 * kPi));
  const bool integer_flux = std::abs(flux - 2.0 * kPi * quanta) <= 1e-12 * std::max(1.0, std::abs(flux));
  // e^{i theta} is the same for every entry since theta differs by 2 pi multiples
  const Complex numerator = std::exp(kI * flux) - 1.0;
  out.raw.resize(dim, dim);
  for (Index n = 0; n < dim; ++n) {
    for (Index m = 0; m < dim; ++m) {
      const int shift = basis.mode(n) - basis.mode(m);
      if (integer_flux) {
        out.raw(m, n) = shift + static_cast<long>(quanta) == 0 ? 1.0 : 0.0;
        continue;
      }
      const double theta = flux + 2.0 * kPi * shift;
      out.raw(m, n) = std::abs(theta) < 1e-8 ? Complex{1.0, 0.5 * theta} : numerator / (kI * theta);
    }
  }
  out.leakage = std::max(0.0, 1.0 - out.raw.squaredNorm() / static_cast<double>(dim));
  if (out.leakage > kMaxGaugeLeakage) {
    std::ostringstream msg;
    msg << "gauge map leaks " << out.leakage << " of the truncated weight at A = " << potential
        << "; increase the truncation half-width beyond " << basis.half_width();
    throw TruncationError(msg.str(), out.leakage);
  }
  Eigen::JacobiSVD<CMatrix> svd(out.raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.unitary = svd.matrixU() * svd.matrixV().adjoint();
  out.singular_deviation = (svd.singularValues().array() - 1.0).abs().maxCoeff();
  return out;
}

CMatrix gauge_matrix(double potential, const spectral::FourierBasis& basis) {
  return gauge_matrix_full(potential, basis).unitary;
}

CVector to_boundary_picture(const CVector& state, double potential,
                            const spectral::FourierBasis& basis) {
  if (state.size() != basis.dimension()) throw InvalidArgument("state has wrong dimension");
  require_normalized(state);
  return gauge_matrix(potential, basis).adjoint() * state;
}

CVector to_magnetic_picture(const CVector& state, double potential,
                            const spectral::FourierBasis& basis) {
  if (state.size() != basis.dimension()) throw InvalidArgument("state has wrong dimension");
  require_normalized(state);
  return gauge_matrix(potential, basis) * state;
}

double quasi_periodic_residual(const CVector& state, double potential,
                               const spectral::FourierBasis& basis, int samples) {
  if (samples < 2) throw InvalidArgument("quasi_periodic_residual needs at least 2 samples");
  if (state.size() != basis.dimension()) throw InvalidArgument("state has wrong dimension");
  if (state.norm() == 0.0) throw InvalidArgument("quasi_periodic_residual of the zero state");
  const double l = basis.length();
  const double sup = sampled_sup(basis, samples, [&](double x) { return basis.reconstruct(state, x); });
  const Complex left = basis.reconstruct(state, 0.0);
  const Complex right = basis.reconstruct(state, l);
  return std::abs(left - std::exp(kI * (potential * l)) * right) / sup;
}

double gauged_boundary_residual(const CVector& magnetic_state, double potential,
                                const spectral::FourierBasis& basis, int samples) {
  if (samples < 2) throw InvalidArgument("gauged_boundary_residual needs at least 2 samples");
  if (magnetic_state.size() != basis.dimension()) throw InvalidArgument("state has wrong dimension");
  if (magnetic_state.norm() == 0.0) throw InvalidArgument("gauged_boundary_residual of the zero state");
  const double l = basis.length();
  auto psi = [&](double x) {
    return std::exp(-kI * (potential * x)) * evaluate_raw(basis, magnetic_state, x);
  };
  const double sup = sampled_sup(basis, samples, psi);
  return std::abs(psi(0.0) - std::exp(kI * (potential * l)) * psi(l)) / sup;
}

BoundaryResidualEvaluator::BoundaryResidualEvaluator(const spectral::FourierBasis& basis, int samples)
    : length_(basis.length()) {
  if (samples < 2) throw InvalidArgument("residual evaluator needs at least 2 samples");
  samples_.resize(samples, basis.dimension());
  positions_.resize(samples);
  for (int j = 0; j < samples; ++j) {
    positions_(j) = length_ * j / (samples - 1);
    for (Index i = 0; i < basis.dimension(); ++i) samples_(j, i) = basis.evaluate(basis.mode(i), positions_(j));
  }
}

double BoundaryResidualEvaluator::operator()(const CVector& magnetic_state, double potential) const {
  if (magnetic_state.size() != samples_.cols()) throw InvalidArgument("state has wrong dimension");
  const CVector phi = samples_ * magnetic_state;
  double sup = 0.0;
  CVector psi(phi.size());
  for (Index j = 0; j < phi.size(); ++j) {
    psi(j) = std::exp(-kI * (potential * positions_(j))) * phi(j);
    sup = std::max(sup, std::abs(psi(j)));
  }
  if (sup == 0.0) throw InvalidArgument("boundary residual of the zero state");
  // first and last samples sit at x = 0 and x = l
  return std::abs(psi(0) - std::exp(kI * (potential * length_)) * psi(phi.size() - 1)) / sup;
}

}  // namespace bctrl::gauge
