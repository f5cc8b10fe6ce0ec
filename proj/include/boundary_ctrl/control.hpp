#pragma once

// Controllability screening, spectral perturbations, control synthesis and
// reconstruction of the boundary vector potential.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "boundary_ctrl/polynomial.hpp"
#include "boundary_ctrl/propagator.hpp"
#include "boundary_ctrl/spectral.hpp"
#include "boundary_ctrl/types.hpp"

namespace bctrl::control {

/// u_j on windows [j tau, (j+1) tau). Construction enforces 0 < u_j < c.
class PiecewiseConstantControl {
 public:
  PiecewiseConstantControl(std::vector<double> values, double tau, double c);
  /// Skips the open-interval check; used by degenerate test fixtures.
  static PiecewiseConstantControl unchecked(std::vector<double> values, double tau, double c);

  const std::vector<double>& values() const noexcept { return values_; }
  double tau() const noexcept { return tau_; }
  double bound() const noexcept { return c_; }
  std::size_t windows() const noexcept { return values_.size(); }
  double horizon() const noexcept { return tau_ * static_cast<double>(values_.size()); }

 private:
  PiecewiseConstantControl() = default;

  std::vector<double> values_;
  double tau_ = 0.0;
  double c_ = 0.0;
};

/// Sawtooth A(t) = a + u_j (t - j tau) on window j, reset to a at each window start.
class ControlEnvelope {
 public:
  ControlEnvelope(double base, PiecewiseConstantControl control);

  double base() const noexcept { return base_; }
  const PiecewiseConstantControl& control() const noexcept { return control_; }
  const std::vector<PolynomialPiece>& pieces() const noexcept { return potential_.pieces(); }
  const PiecewisePolynomial& potential() const noexcept { return potential_; }
  double horizon() const noexcept { return control_.horizon(); }

  double value(double t) const { return potential_.value(t); }
  double derivative(double t) const { return potential_.derivative(t); }
  /// A(t_k+) - A(t_k-) at the internal window starts t_k.
  std::vector<double> jumps() const;
  /// sup |A - a| from `samples_per_window` points per window plus the
  /// window ends (left limits).
  double sup_deviation(int samples_per_window = 10000) const;

 private:
  double base_;
  PiecewiseConstantControl control_;
  PiecewisePolynomial potential_;
};

ControlEnvelope reconstruct_vector_potential(const PiecewiseConstantControl& control, double base);

/// Constant potential over [0, horizon] (no control acting).
ControlEnvelope constant_envelope(double base, double horizon);

struct PerturbationSpec {
  std::vector<double> nu;     // indexed by 0-based eigen index j, nu[j] = nu_{j+1}
  std::vector<double> alpha;  // alpha[n] couples eigen indices n and n+1
  double mu0 = 0.0;
  double mu1 = 0.0;
};

/// First `count` primes.
std::vector<std::uint64_t> primes(std::size_t count);
/// nu_k = 2^{-k} / sqrt(p_k), k = 1..count
std::vector<double> nu_sequence(std::size_t count);
/// alpha_n = 2^{-(n+2)}, n = 0..count-1
std::vector<double> alpha_sequence(std::size_t count);

PerturbationSpec default_perturbation_spec(Index dimension, double mu0, double mu1);

struct Perturbations {
  spectral::TruncatedOperator h0p;
  spectral::TruncatedOperator h1p;
};

/// H0p = mu0 sum_j nu_j phi_j phi_j^dagger and
/// H1p = mu1 sum_{n in zero set} alpha_n (phi_{n+1} phi_n^dagger + phi_n phi_{n+1}^dagger).
Perturbations build_perturbations(const spectral::Spectrum& spectrum,
                                  const spectral::FourierBasis& basis,
                                  const std::vector<Index>& coupling_zero_set, double mu0,
                                  double mu1);

struct GapWitness {
  std::string kind;  // "zero-gap" or "rational-ratio"
  Index i = 0;
  Index j = 0;
  std::int64_t p = 0;
  std::int64_t q = 0;
  double residual = 0.0;
};

struct ControllabilityReport {
  bool a1_hermitian = false;
  double a1_max_asymmetry = 0.0;
  bool a2_eigenbasis = false;
  double a2_unitarity_defect = 0.0;
  bool a3_domain = false;
  std::string a3_note;
  bool degenerate_spectrum = false;

  bool gaps_checked = false;
  bool gaps_independent = false;
  std::vector<GapWitness> witnesses;
  Index gaps_screened = 0;
  Index unresolved_pairs = 0;

  bool couplings_checked = false;
  bool couplings_nonzero = false;
  Index first_failing_coupling = -1;
  double min_coupling = 0.0;
  std::vector<double> couplings;

  std::int64_t denominator_bound = 0;
  std::vector<std::string> notes;

  bool normal() const noexcept { return a1_hermitian && a2_eigenbasis && a3_domain; }
  bool passed() const noexcept { return normal() && gaps_independent && couplings_nonzero; }
};

/// A1-A3 for the pair (H0, H1).
ControllabilityReport check_normal_system(const spectral::TruncatedOperator& h0,
                                          const spectral::TruncatedOperator& h1);

/// Relation residual under which a gap ratio counts as rational.
inline constexpr double kRationalTolerance = 1e-12;
inline constexpr double kCouplingFloor = 1e-12;

/// Continued-fraction screening of the first min(2N, 20) gaps and coupling
/// check on the consecutive eigenpairs in that scope.
ControllabilityReport check_chambrion_conditions(const spectral::Spectrum& spectrum,
                                                 const spectral::TruncatedOperator& h1,
                                                 std::int64_t denominator_bound);

/// Screens one ratio r >= 1: returns the first (p, q) with q <= Q and
/// |q r - p| <= kRationalTolerance * r, or q = 0 when none exists.
GapWitness screen_ratio(double larger, double smaller, std::int64_t denominator_bound);

/// Number of leading gaps screened for a basis of half-width N.
Index screening_scope(const spectral::FourierBasis& basis, Index dimension);

// ---------------------------------------------------------------- system

/// The configured control system: H0 = magnetic Laplacian(a) + H0p and
/// H1 = -x + H1p, so that H0 + u H1 is the auxiliary Hamiltonian with u in (0, c).
struct ControlSystem {
  spectral::FourierBasis basis;
  double base = 0.0;
  spectral::TruncatedOperator laplacian;  // unperturbed magnetic Laplacian
  spectral::TruncatedOperator h0p;
  spectral::TruncatedOperator h1p;
  spectral::TruncatedOperator h0;
  spectral::TruncatedOperator h1;
  spectral::Spectrum spectrum;  // of h0
  std::vector<Index> coupling_zero_set;

  /// Extra boundary-Hamiltonian terms: H0p with coefficient 1 and, when
  /// present, H1p with coefficient A'(t).
  std::vector<spectral::TruncatedOperator> static_terms() const { return {h0p}; }
  std::vector<spectral::TruncatedOperator> coupled_terms() const;
};

/// H1p is built on the consecutive eigenpairs of H0 whose -x coupling vanishes.
ControlSystem build_control_system(const spectral::FourierBasis& basis, double base, double mu0,
                                   double mu1);

// ---------------------------------------------------------------- paths

/// Terms {H_free, P, I, x} with coefficients {1, -2A(t), A(t)^2, -A'(t)},
/// followed by static terms (coefficient 1) and coupled terms (coefficient A'(t)).
propagator::CoefficientPath assemble_boundary_run(
    const ControlEnvelope& envelope, const spectral::FourierBasis& basis,
    const std::vector<spectral::TruncatedOperator>& static_terms = {},
    const std::vector<spectral::TruncatedOperator>& coupled_terms = {});

/// The boundary Hamiltonian's four standard terms, in path order.
std::vector<spectral::TruncatedOperator> boundary_terms(const spectral::FourierBasis& basis);

// ------------------------------------------------------------ synthesis

/// Window propagator as a function of the window's control value.
using WindowModel = std::function<CMatrix(double u)>;
/// Builds a window model for a given window length.
using WindowModelFactory = std::function<WindowModel(double tau)>;

/// exp(-i tau (H0 + u H1)).
WindowModelFactory auxiliary_window_model(const spectral::TruncatedOperator& h0,
                                          const spectral::TruncatedOperator& h1);

/// Propagator of the boundary Hamiltonian over one window on which
/// A(s) = a + u s, by `substeps` midpoint-frozen factors.
WindowModelFactory boundary_window_model(const spectral::FourierBasis& basis, double base,
                                         const std::vector<spectral::TruncatedOperator>& static_terms,
                                         const std::vector<spectral::TruncatedOperator>& coupled_terms,
                                         int substeps = 64);

struct SynthesisOptions {
  double tau = 0.25;
  int initial_windows = 16;
  int starts = 8;
  int levels = 65;
  int max_sweeps = 8;
  int golden_steps = 0;  // continuous refinement around the best level
  std::uint64_t seed = 0;
  double floor_fraction = 1e-3;
};

struct SynthesisResult {
  explicit SynthesisResult(PiecewiseConstantControl c) : control(std::move(c)) {}

  PiecewiseConstantControl control;
  double fidelity = 0.0;
  double initial_fidelity = 0.0;
  bool converged = false;
  int windows = 0;
  double tau = 0.0;
  int best_start = -1;
  /// objective after every accepted coordinate update of the winning start
  std::vector<double> history;
  std::vector<CMatrix> window_propagators;  // of the returned control, earliest first
};

/// |<a, b>|^2
double projective_fidelity(const CVector& a, const CVector& b);

SynthesisResult synthesize_with_model(const WindowModelFactory& model, const CVector& psi0,
                                      const CVector& psi_target, double c, double horizon_budget,
                                      double fidelity_target, const SynthesisOptions& options = {});

/// Chambrion form H0 + u H1 with u in (0, c).
SynthesisResult synthesize_control(const spectral::TruncatedOperator& h0,
                                   const spectral::TruncatedOperator& h1, const CVector& psi0,
                                   const CVector& psi_target, double c, double horizon_budget,
                                   double fidelity_target, const SynthesisOptions& options = {});

// ------------------------------------------------------------ smoothing

/// Mollification of a sawtooth envelope by a compactly supported bump.
class SmoothEnvelope {
 public:
  SmoothEnvelope(ControlEnvelope envelope, double width);

  const ControlEnvelope& envelope() const noexcept { return envelope_; }
  /// Kernel half-width; zero means the envelope is returned unchanged.
  double width() const noexcept { return width_; }

  double value(double t) const;
  double derivative(double t) const;

  /// Sampled sup |A - A~| and sup |A' - A~'| (per-window samples plus
  /// one-sided limits at the window ends).
  std::pair<double, double> deviations(int samples_per_window = 10000) const;

 private:
  ControlEnvelope envelope_;
  double width_;
};

struct SmoothingResult {
  SmoothEnvelope smooth;
  double achieved_delta1 = 0.0;
  double achieved_delta2 = 0.0;
};

/// Largest kernel width (scanned down from tau/2) meeting both targets.
/// Throws InvalidArgument for non-positive targets and PreconditionError
/// when no width down to 1e-9 tau meets them.
SmoothingResult smooth_control(const ControlEnvelope& envelope, double delta1, double delta2,
                               int samples_per_window = 10000);

/// Boundary path for a smoothed envelope: each coefficient is interpolated
/// by piecewise quadratics on `pieces_per_window` pieces per window.
propagator::CoefficientPath assemble_smooth_boundary_run(
    const SmoothEnvelope& smooth, const spectral::FourierBasis& basis,
    const std::vector<spectral::TruncatedOperator>& static_terms = {},
    const std::vector<spectral::TruncatedOperator>& coupled_terms = {}, int pieces_per_window = 64);

/// Bump kernel K on [-1, 1] normalized to unit mass, and its moments
/// M0(z) = int_{-1}^z K, M1(z) = int_{-1}^z s K(s) ds.
double bump_kernel(double z);
double bump_mass(double z);
double bump_first_moment(double z);

}  // namespace bctrl::control
