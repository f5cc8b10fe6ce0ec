#pragma once

// Time-ordered evolution for H(t) = sum_i f_i(t) H_i by products of
// exponentials of the generator frozen on a uniform k-fold partition.

#include <cstdint>
#include <functional>
#include <vector>

#include "boundary_ctrl/polynomial.hpp"
#include "boundary_ctrl/spectral.hpp"
#include "boundary_ctrl/types.hpp"

namespace bctrl::propagator {

class CoefficientPath {
 public:
  CoefficientPath(std::vector<spectral::TruncatedOperator> terms,
                  std::vector<PiecewisePolynomial> coefficients, double start, double stop);

  const std::vector<spectral::TruncatedOperator>& terms() const noexcept { return terms_; }
  const std::vector<PiecewisePolynomial>& coefficients() const noexcept { return coefficients_; }
  double start() const noexcept { return start_; }
  double stop() const noexcept { return stop_; }
  Index dimension() const noexcept { return terms_.front().dimension(); }
  bool commuting_diagonal() const noexcept { return all_diagonal_; }

  std::vector<double> coefficient_values(double t) const;
  CMatrix generator(double t) const;
  CMatrix generator(const std::vector<double>& values) const;

  /// Same terms and coefficients over a sub-window.
  CoefficientPath restricted(double start, double stop) const;

 private:
  std::vector<spectral::TruncatedOperator> terms_;
  std::vector<PiecewisePolynomial> coefficients_;
  double start_;
  double stop_;
  bool all_diagonal_ = true;
};

enum class FreezeRule {
  LeftEndpoint,  // generator frozen at t_{j-1}
  Midpoint,      // generator frozen at (t_{j-1} + t_j) / 2; off by default
};

struct PiecewisePropagator {
  std::int64_t k = 0;
  std::vector<CMatrix> factors;  // earliest first; kept only when k <= kMaxStoredFactors
  CMatrix total;                 // U_k(stop, start) = F_k ... F_1
  double start = 0.0;
  double stop = 0.0;
};

inline constexpr std::int64_t kMaxStoredFactors = 4096;
inline constexpr std::int64_t kMaxSubdivisions = std::int64_t{1} << 20;

/// exp(-i dt H) through the Hermitian eigendecomposition of H.
CMatrix step_exponential(const CMatrix& hamiltonian, double dt);
CMatrix step_exponential(const spectral::TruncatedOperator& hamiltonian, double dt);

PiecewisePropagator rs_propagator(const CoefficientPath& path, std::int64_t k,
                                  FreezeRule rule = FreezeRule::LeftEndpoint);

/// later * earlier over adjacent windows.
PiecewisePropagator compose(const PiecewisePropagator& later, const PiecewisePropagator& earlier);

struct Refinement {
  PiecewisePropagator propagator;
  std::int64_t k = 0;
  double gap = 0.0;  // max over probes of ||(U_{2k} - U_k) psi||
};

/// e_0, e_1 and one seeded pseudorandom normalized state.
std::vector<CVector> probe_states(const spectral::FourierBasis& basis);

/// Doubles k from 8 until the probe gap falls to `tolerance`; throws
/// NonConvergenceError past kMaxSubdivisions.
Refinement refine_to_tolerance(const CoefficientPath& path, double tolerance,
                               FreezeRule rule = FreezeRule::LeftEndpoint);

struct Trajectory {
  std::vector<double> times;
  std::vector<CVector> states;
  std::int64_t k = 0;
  double gap = 0.0;
};

/// States on the refined k-grid, starting with the initial state.
Trajectory evolve(const CoefficientPath& path, const CVector& state, double tolerance,
                  FreezeRule rule = FreezeRule::LeftEndpoint);
/// States on a fixed k-grid without refinement.
Trajectory evolve_fixed(const CoefficientPath& path, const CVector& state, std::int64_t k,
                        FreezeRule rule = FreezeRule::LeftEndpoint);

struct BoundReport {
  double bound = 0.0;
  double measured = 0.0;
  std::vector<double> components;  // (T - s) ||f_i - g_i||_inf ||H_i psi||
  std::int64_t k1 = 0;
  std::int64_t k2 = 0;

  double margin() const noexcept { return bound - measured; }
};

struct CertifyOptions {
  double tolerance = 1e-8;
  double slack = 1e-8;
  FreezeRule rule = FreezeRule::LeftEndpoint;
  int samples_per_piece = 10000;
  /// Applied to the second propagator before measuring; a test hook.
  std::function<void(CMatrix&)> corrupt;
};

/// Bound and measured distance, without judging them.
BoundReport measure_distance_bound(const CoefficientPath& path1, const CoefficientPath& path2,
                                   const CVector& state, const CertifyOptions& options = {});
/// Throws CertificationFailure when measured > bound + slack.
BoundReport certify_distance_bound(const CoefficientPath& path1, const CoefficientPath& path2,
                                   const CVector& state, const CertifyOptions& options = {});

double unitarity_defect(const CMatrix& u);  // ||U^dagger U - I||_F

}  // namespace bctrl::propagator
