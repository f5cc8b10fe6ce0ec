#include "boundary_ctrl/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "boundary_ctrl/errors.hpp"

namespace bctrl::control {

namespace {

using spectral::FourierBasis;
using spectral::TruncatedOperator;

constexpr double kDegenerateGap = 1e-10;

PiecewisePolynomial build_potential(double base, const PiecewiseConstantControl& control) {
  if (control.windows() == 0) return PiecewisePolynomial::constant(base, 0.0, 1.0);
  std::vector<PolynomialPiece> pieces;
  const double tau = control.tau();
  for (std::size_t j = 0; j < control.windows(); ++j) {
    const double a = tau * static_cast<double>(j);
    const double b = tau * static_cast<double>(j + 1);
    pieces.push_back({a, b, base, control.values()[j], 0.0});
  }
  return PiecewisePolynomial(std::move(pieces));
}

}  // namespace

PiecewiseConstantControl::PiecewiseConstantControl(std::vector<double> values, double tau, double c)
    : values_(std::move(values)), tau_(tau), c_(c) {
  if (!std::isfinite(tau_) || tau_ <= 0.0) throw InvalidArgument("window length tau must be positive");
  if (!std::isfinite(c_) || c_ <= 0.0) throw InvalidArgument("control bound c must be positive");
  for (std::size_t j = 0; j < values_.size(); ++j) {
    const double u = values_[j];
    if (!std::isfinite(u) || u <= 0.0 || u >= c_) {
      std::ostringstream msg;
      msg << "control value u_" << j << " = " << u << " outside the open interval (0, " << c_ << ")";
      throw InvalidArgument(msg.str());
    }
  }
}

PiecewiseConstantControl PiecewiseConstantControl::unchecked(std::vector<double> values, double tau,
                                                             double c) {
  PiecewiseConstantControl out;
  out.values_ = std::move(values);
  out.tau_ = tau;
  out.c_ = c;
  return out;
}

ControlEnvelope::ControlEnvelope(double base, PiecewiseConstantControl control)
    : base_(base), control_(std::move(control)), potential_(build_potential(base_, control_)) {
  if (!std::isfinite(base_)) throw InvalidArgument("base potential must be finite");
}

std::vector<double> ControlEnvelope::jumps() const {
  std::vector<double> out;
  const auto& u = control_.values();
  // A rises by u_j tau over window j and resets to a at the next start
  for (std::size_t j = 0; j + 1 < u.size(); ++j) out.push_back(-u[j] * control_.tau());
  return out;
}

double ControlEnvelope::sup_deviation(int samples_per_window) const {
  double sup = 0.0;
  if (control_.windows() == 0) return 0.0;
  for (const auto& p : potential_.pieces()) {
    for (int s = 0; s <= samples_per_window; ++s) {
      const double t = p.t0 + (p.t1 - p.t0) * s / samples_per_window;
      sup = std::max(sup, std::abs(p.value(t) - base_));
    }
  }
  return sup;
}

ControlEnvelope reconstruct_vector_potential(const PiecewiseConstantControl& control, double base) {
  return ControlEnvelope(base, control);
}

ControlEnvelope constant_envelope(double base, double horizon) {
  if (horizon > 0.0) {
    return ControlEnvelope(base, PiecewiseConstantControl::unchecked({0.0}, horizon, 1.0));
  }
  return ControlEnvelope(base, PiecewiseConstantControl::unchecked({}, 1.0, 1.0));
}

// ---------------------------------------------------------- perturbations

std::vector<std::uint64_t> primes(std::size_t count) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t n = 2; out.size() < count; ++n) {
    bool prime = true;
    for (std::uint64_t p : out) {
      if (p * p > n) break;
      if (n % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) out.push_back(n);
  }
  return out;
}

std::vector<double> nu_sequence(std::size_t count) {
  const auto p = primes(count);
  std::vector<double> out(count);
  for (std::size_t k = 1; k <= count; ++k) {
    out[k - 1] = std::ldexp(1.0, -static_cast<int>(k)) / std::sqrt(static_cast<double>(p[k - 1]));
  }
  return out;
}

std::vector<double> alpha_sequence(std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t n = 0; n < count; ++n) out[n] = std::ldexp(1.0, -static_cast<int>(n + 2));
  return out;
}

PerturbationSpec default_perturbation_spec(Index dimension, double mu0, double mu1) {
  PerturbationSpec spec;
  spec.nu = nu_sequence(static_cast<std::size_t>(dimension));
  spec.alpha = alpha_sequence(static_cast<std::size_t>(std::max<Index>(dimension - 1, 0)));
  spec.mu0 = mu0;
  spec.mu1 = mu1;
  return spec;
}

Perturbations build_perturbations(const spectral::Spectrum& spectrum, const FourierBasis& basis,
                                  const std::vector<Index>& coupling_zero_set, double mu0,
                                  double mu1) {
  const Index dim = spectrum.dimension();
  if (dim != basis.dimension()) throw InvalidArgument("spectrum does not match basis");
  const PerturbationSpec spec = default_perturbation_spec(dim, mu0, mu1);
  const CMatrix& phi = spectrum.eigenvectors;
  CMatrix h0p = CMatrix::Zero(dim, dim);
  if (mu0 != 0.0) {
    for (Index j = 0; j < dim; ++j) h0p += (mu0 * spec.nu[j]) * phi.col(j) * phi.col(j).adjoint();
  }
  CMatrix h1p = CMatrix::Zero(dim, dim);
  if (mu1 != 0.0) {
    for (Index n : coupling_zero_set) {
      if (n < 0 || n + 1 >= dim) throw InvalidArgument("coupling index outside the spectrum");
      const CMatrix hop = phi.col(n + 1) * phi.col(n).adjoint();
      h1p += (mu1 * spec.alpha[n]) * (hop + hop.adjoint());
    }
  }
  // remove rounding asymmetry from the outer products
  h0p = 0.5 * (h0p + h0p.adjoint()).eval();
  h1p = 0.5 * (h1p + h1p.adjoint()).eval();
  return {TruncatedOperator(basis, std::move(h0p)), TruncatedOperator(basis, std::move(h1p))};
}

// ----------------------------------------------------------------- checks

ControllabilityReport check_normal_system(const TruncatedOperator& h0, const TruncatedOperator& h1) {
  if (h0.dimension() != h1.dimension()) throw InvalidArgument("H0 and H1 have different dimensions");
  ControllabilityReport r;
  r.a1_max_asymmetry = std::max(h0.hermiticity_defect(), h1.hermiticity_defect());
  r.a1_hermitian = r.a1_max_asymmetry <= 1e-12;
  try {
    const spectral::Spectrum s = spectral::eigendecompose(h0);
    const Index dim = s.dimension();
    r.a2_unitarity_defect =
        (s.eigenvectors.adjoint() * s.eigenvectors - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
    r.a2_eigenbasis = r.a2_unitarity_defect <= 1e-10;
    const RVector g = s.gaps();
    for (Index k = 0; k < g.size(); ++k) {
      if (g(k) <= kDegenerateGap * std::max(1.0, std::abs(s.eigenvalues(k + 1)))) {
        r.degenerate_spectrum = true;
        break;
      }
    }
  } catch (const PreconditionError& e) {
    r.a2_eigenbasis = false;
    r.a2_unitarity_defect = std::numeric_limits<double>::infinity();
    r.notes.push_back(std::string("A2: ") + e.what());
  }
  r.a3_domain = true;
  r.a3_note = "finite truncation: every eigenvector of H0 lies in the domain of H1";
  return r;
}

Index screening_scope(const FourierBasis& basis, Index dimension) {
  return std::min<Index>({2 * Index{basis.half_width()}, 20, dimension - 1});
}

GapWitness screen_ratio(double larger, double smaller, std::int64_t denominator_bound) {
  GapWitness w;
  w.kind = "rational-ratio";
  // extended precision keeps q r - p meaningful when q r is large
  const long double r = static_cast<long double>(larger) / static_cast<long double>(smaller);
  const long double tol = static_cast<long double>(kRationalTolerance) * std::max<long double>(1.0L, r);
  long double x = r;
  // convergent denominators q_n = a_n q_{n-1} + q_{n-2}
  std::int64_t q_prev = 0, q = 1;
  for (int iter = 0; iter < 64; ++iter) {
    const long double a = std::floor(x);
    if (iter > 0) {
      const long double next = a * static_cast<long double>(q) + static_cast<long double>(q_prev);
      if (next > static_cast<long double>(denominator_bound)) break;
      q_prev = q;
      q = static_cast<std::int64_t>(next);
    }
    if (q > denominator_bound) break;
    const long double scaled = static_cast<long double>(q) * r;
    const long double p = std::round(scaled);
    const long double residual = std::abs(scaled - p);
    if (residual <= tol) {
      w.p = static_cast<std::int64_t>(p);
      w.q = q;
      w.residual = static_cast<double>(residual);
      return w;
    }
    const long double frac = x - a;
    if (frac <= 0.0L) break;
    x = 1.0L / frac;
    if (!std::isfinite(static_cast<double>(x))) break;
  }
  w.q = 0;
  return w;
}

ControllabilityReport check_chambrion_conditions(const spectral::Spectrum& spectrum,
                                                 const TruncatedOperator& h1,
                                                 std::int64_t denominator_bound) {
  if (denominator_bound < 1) throw InvalidArgument("denominator bound must be >= 1");
  if (h1.dimension() != spectrum.dimension()) throw InvalidArgument("H1 does not match the spectrum");
  ControllabilityReport r;
  r.denominator_bound = denominator_bound;
  if (denominator_bound < 2) {
    r.notes.push_back("denominator bound below 2: only integer gap ratios are screened");
  }
  const Index scope = screening_scope(h1.basis(), spectrum.dimension());
  r.gaps_screened = scope;
  r.gaps_checked = true;
  const auto gaps = spectral::gap_sequence(spectrum, scope);
  std::vector<bool> zero(gaps.size(), false);
  for (Index i = 0; i < scope; ++i) {
    const double lam = std::max(1.0, std::abs(spectrum.eigenvalues(i + 1)));
    if (gaps[i] <= kDegenerateGap * lam) {
      zero[i] = true;
      r.witnesses.push_back({"zero-gap", i, i, 0, 1, gaps[i]});
    }
  }
  // Each computed eigenvalue carries rounding of order eps ||H||; pairs whose
  // ratio is blurred beyond the screening tolerance cannot be judged.
  const double lam_max = spectrum.eigenvalues.cwiseAbs().maxCoeff();
  const double noise = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, lam_max);
  for (Index i = 0; i < scope; ++i) {
    if (zero[i]) continue;
    for (Index j = i + 1; j < scope; ++j) {
      if (zero[j]) continue;
      const bool i_larger = gaps[i] >= gaps[j];
      const double big = i_larger ? gaps[i] : gaps[j];
      const double small = i_larger ? gaps[j] : gaps[i];
      const double ratio = big / small;
      if (ratio * 2.0 * noise * (1.0 / big + 1.0 / small) > kRationalTolerance * std::max(1.0, ratio)) {
        ++r.unresolved_pairs;
        continue;
      }
      GapWitness w = screen_ratio(big, small, denominator_bound);
      if (w.q == 0) continue;
      w.i = i_larger ? i : j;
      w.j = i_larger ? j : i;
      r.witnesses.push_back(w);
    }
  }
  r.gaps_independent = r.witnesses.empty();
  if (r.unresolved_pairs > 0) {
    r.notes.push_back(std::to_string(r.unresolved_pairs) +
                      " gap pairs have ratios blurred by eigenvalue rounding beyond the screening "
                      "tolerance and were not screened");
  }

  r.couplings_checked = true;
  r.couplings_nonzero = true;
  r.min_coupling = std::numeric_limits<double>::infinity();
  const CMatrix& phi = spectrum.eigenvectors;
  for (Index n = 0; n < scope; ++n) {
    const double c = std::abs(phi.col(n + 1).dot(h1.matrix() * phi.col(n)));
    r.couplings.push_back(c);
    r.min_coupling = std::min(r.min_coupling, c);
    if (c <= kCouplingFloor && r.couplings_nonzero) {
      r.couplings_nonzero = false;
      r.first_failing_coupling = n;
    }
  }
  if (scope == 0) r.min_coupling = 0.0;
  // spectrum-only checks leave A1-A3 to check_normal_system; mark them from H1 alone
  r.a1_max_asymmetry = h1.hermiticity_defect();
  r.a1_hermitian = r.a1_max_asymmetry <= 1e-12;
  r.a2_eigenbasis = true;
  r.a3_domain = true;
  r.a3_note = "finite truncation: every eigenvector of H0 lies in the domain of H1";
  return r;
}

// ----------------------------------------------------------------- system

ControlSystem build_control_system(const FourierBasis& basis, double base, double mu0, double mu1) {
  TruncatedOperator lap = spectral::build_magnetic_laplacian(base, basis);
  const spectral::Spectrum lap_spectrum = spectral::eigendecompose(lap);
  const TruncatedOperator h1 = spectral::build_position_operator(basis).scaled(-1.0);
  const Perturbations diag = build_perturbations(lap_spectrum, basis, {}, mu0, 0.0);
  TruncatedOperator h0 = lap + diag.h0p;
  spectral::Spectrum spectrum = spectral::eigendecompose(h0);

  std::vector<Index> zero_set;
  const Index scope = screening_scope(basis, spectrum.dimension());
  for (Index n = 0; n < scope; ++n) {
    const CMatrix& phi = spectrum.eigenvectors;
    if (std::abs(phi.col(n + 1).dot(h1.matrix() * phi.col(n))) <= kCouplingFloor) zero_set.push_back(n);
  }
  const Perturbations hop = build_perturbations(spectrum, basis, zero_set, 0.0, mu1);
  return ControlSystem{basis,        base,          std::move(lap),      diag.h0p,
                       hop.h1p,      std::move(h0), h1 + hop.h1p,        std::move(spectrum),
                       std::move(zero_set)};
}

std::vector<TruncatedOperator> ControlSystem::coupled_terms() const {
  if (h1p.matrix().isZero(0.0)) return {};
  return {h1p};
}

// ------------------------------------------------------------------ paths

std::vector<TruncatedOperator> boundary_terms(const FourierBasis& basis) {
  return {spectral::build_free_laplacian(basis), spectral::build_momentum_operator(basis),
          spectral::build_identity(basis), spectral::build_position_operator(basis)};
}

propagator::CoefficientPath assemble_boundary_run(const ControlEnvelope& envelope,
                                                  const FourierBasis& basis,
                                                  const std::vector<TruncatedOperator>& static_terms,
                                                  const std::vector<TruncatedOperator>& coupled_terms) {
  const double horizon = envelope.horizon();
  const PiecewisePolynomial& a = envelope.potential();
  std::vector<TruncatedOperator> terms = boundary_terms(basis);
  std::vector<PiecewisePolynomial> coefficients = {
      PiecewisePolynomial::constant(1.0, a.begin(), a.end()), a.scaled(-2.0), a * a,
      a.derivative_polynomial().scaled(-1.0)};
  for (const auto& s : static_terms) {
    terms.push_back(s);
    coefficients.push_back(PiecewisePolynomial::constant(1.0, a.begin(), a.end()));
  }
  for (const auto& s : coupled_terms) {
    terms.push_back(s);
    coefficients.push_back(a.derivative_polynomial());
  }
  return propagator::CoefficientPath(std::move(terms), std::move(coefficients), 0.0, horizon);
}

}  // namespace bctrl::control
