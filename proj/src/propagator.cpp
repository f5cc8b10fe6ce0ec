#include "boundary_ctrl/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "boundary_ctrl/errors.hpp"
#include "boundary_ctrl/random.hpp"

namespace bctrl::propagator {

namespace {

constexpr double kHermitianPrecondition = 1e-9;
constexpr std::uint64_t kProbeSeed = 0x5EED;

double grid_time(double start, double stop, std::int64_t j, std::int64_t k) {
  if (j == k) return stop;
  return start + (stop - start) * (static_cast<double>(j) / static_cast<double>(k));
}

double freeze_time(double start, double stop, std::int64_t j, std::int64_t k, FreezeRule rule) {
  const double a = grid_time(start, stop, j, k);
  if (rule == FreezeRule::LeftEndpoint) return a;
  return 0.5 * (a + grid_time(start, stop, j + 1, k));
}

// Walks the k-grid, handing each step's exponential to `sink`. Runs of equal
// frozen coefficients reuse one exponential.
template <class Sink>
void walk(const CoefficientPath& path, std::int64_t k, FreezeRule rule, Sink sink) {
  const double dt = (path.stop() - path.start()) / static_cast<double>(k);
  std::vector<double> previous;
  CMatrix factor;
  for (std::int64_t j = 0; j < k; ++j) {
    const double tf = freeze_time(path.start(), path.stop(), j, k, rule);
    std::vector<double> values = path.coefficient_values(tf);
    if (j == 0 || values != previous) {
      factor = step_exponential(path.generator(values), dt);
      previous = std::move(values);
    }
    sink(j, factor);
  }
}

}  // namespace

CoefficientPath::CoefficientPath(std::vector<spectral::TruncatedOperator> terms,
                                 std::vector<PiecewisePolynomial> coefficients, double start,
                                 double stop)
    : terms_(std::move(terms)), coefficients_(std::move(coefficients)), start_(start), stop_(stop) {
  if (terms_.empty()) throw InvalidArgument("coefficient path needs at least one term");
  if (terms_.size() != coefficients_.size()) {
    throw InvalidArgument("coefficient path needs one coefficient per term");
  }
  if (!std::isfinite(start_) || !std::isfinite(stop_) || stop_ < start_) {
    throw InvalidArgument("coefficient path window must satisfy start <= stop");
  }
  const Index dim = terms_.front().dimension();
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].dimension() != dim) throw InvalidArgument("path terms have mismatched dimensions");
    all_diagonal_ = all_diagonal_ && terms_[i].is_diagonal();
    const auto& f = coefficients_[i];
    const double tol = 1e-12 * std::max(1.0, std::abs(stop_));
    if (f.empty() || f.begin() > start_ + tol || f.end() < stop_ - tol) {
      std::ostringstream msg;
      msg << "coefficient " << i << " does not cover [" << start_ << ", " << stop_ << "]";
      throw InvalidArgument(msg.str());
    }
  }
}

std::vector<double> CoefficientPath::coefficient_values(double t) const {
  std::vector<double> out(coefficients_.size());
  for (std::size_t i = 0; i < coefficients_.size(); ++i) out[i] = coefficients_[i].value(t);
  return out;
}

CMatrix CoefficientPath::generator(const std::vector<double>& values) const {
  CMatrix h = CMatrix::Zero(dimension(), dimension());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (values[i] != 0.0) h += values[i] * terms_[i].matrix();
  }
  return h;
}

CMatrix CoefficientPath::generator(double t) const { return generator(coefficient_values(t)); }

CoefficientPath CoefficientPath::restricted(double start, double stop) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(stop_));
  if (start < start_ - tol || stop > stop_ + tol || stop < start) {
    throw InvalidArgument("restricted window lies outside the path window");
  }
  return CoefficientPath(terms_, coefficients_, start, stop);
}

double unitarity_defect(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols())).norm();
}

CMatrix step_exponential(const CMatrix& hamiltonian, double dt) {
  if (!std::isfinite(dt)) throw InvalidArgument("time step must be finite");
  const Index dim = hamiltonian.rows();
  const double defect = (hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff();
  if (defect > kHermitianPrecondition) {
    std::ostringstream msg;
    msg << "generator is not Hermitian: max |H - H^dagger| = " << defect;
    throw PreconditionError(msg.str(), defect);
  }
  if (dt == 0.0) return CMatrix::Identity(dim, dim);
  bool diagonal = true;
  for (Index j = 0; j < dim && diagonal; ++j)
    for (Index i = 0; i < dim; ++i)
      if (i != j && hamiltonian(i, j) != Complex{0.0, 0.0}) {
        diagonal = false;
        break;
      }
  if (diagonal) {
    CMatrix out = CMatrix::Zero(dim, dim);
    for (Index i = 0; i < dim; ++i) out(i, i) = std::exp(-kI * (dt * hamiltonian(i, i).real()));
    return out;
  }
  const CMatrix herm = 0.5 * (hamiltonian + hamiltonian.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm);
  if (solver.info() != Eigen::Success) throw PreconditionError("eigensolver failed", defect);
  CVector phases(dim);
  for (Index i = 0; i < dim; ++i) phases(i) = std::exp(-kI * (dt * solver.eigenvalues()(i)));
  const CMatrix& v = solver.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

CMatrix step_exponential(const spectral::TruncatedOperator& hamiltonian, double dt) {
  return step_exponential(hamiltonian.matrix(), dt);
}

PiecewisePropagator rs_propagator(const CoefficientPath& path, std::int64_t k, FreezeRule rule) {
  if (k < 1) throw InvalidArgument("subdivision count must be >= 1");
  PiecewisePropagator out;
  out.k = k;
  out.start = path.start();
  out.stop = path.stop();
  const Index dim = path.dimension();
  out.total = CMatrix::Identity(dim, dim);
  if (path.stop() == path.start()) return out;  // exact identity on an empty window
  const bool store = k <= kMaxStoredFactors;
  if (store) out.factors.reserve(static_cast<std::size_t>(k));
  walk(path, k, rule, [&](std::int64_t, const CMatrix& factor) {
    out.total = factor * out.total;
    if (store) out.factors.push_back(factor);
  });
  return out;
}

PiecewisePropagator compose(const PiecewisePropagator& later, const PiecewisePropagator& earlier) {
  if (later.total.rows() != earlier.total.rows()) throw InvalidArgument("propagator dimensions differ");
  const double tol = 1e-12 * std::max(1.0, std::abs(later.start));
  if (std::abs(later.start - earlier.stop) > tol) {
    throw InvalidArgument("propagators are not on adjacent windows");
  }
  PiecewisePropagator out;
  out.k = later.k + earlier.k;
  out.start = earlier.start;
  out.stop = later.stop;
  out.total = later.total * earlier.total;
  if (out.k <= kMaxStoredFactors && static_cast<std::int64_t>(earlier.factors.size()) == earlier.k &&
      static_cast<std::int64_t>(later.factors.size()) == later.k) {
    out.factors = earlier.factors;
    out.factors.insert(out.factors.end(), later.factors.begin(), later.factors.end());
  }
  return out;
}

std::vector<CVector> probe_states(const spectral::FourierBasis& basis) {
  Rng rng(kProbeSeed);
  return {basis.unit(0), basis.unit(1), rng.normalized_state(basis.dimension())};
}

Refinement refine_to_tolerance(const CoefficientPath& path, double tolerance, FreezeRule rule) {
  if (!(tolerance > 0.0)) throw InvalidArgument("refinement tolerance must be positive");
  const auto probes = probe_states(path.terms().front().basis());
  std::int64_t k = 8;
  PiecewisePropagator coarse = rs_propagator(path, k, rule);
  double gap = 0.0;
  while (2 * k <= kMaxSubdivisions) {
    PiecewisePropagator fine = rs_propagator(path, 2 * k, rule);
    const CMatrix diff = fine.total - coarse.total;
    gap = 0.0;
    for (const auto& p : probes) gap = std::max(gap, (diff * p).norm());
    k *= 2;
    if (gap <= tolerance) return {std::move(fine), k, gap};
    coarse = std::move(fine);
  }
  std::ostringstream msg;
  msg << "propagator refinement did not reach tolerance " << tolerance << " by k = " << k
      << " (last gap " << gap << ")";
  throw NonConvergenceError(msg.str(), static_cast<long>(k), gap);
}

Trajectory evolve_fixed(const CoefficientPath& path, const CVector& state, std::int64_t k,
                        FreezeRule rule) {
  if (state.size() != path.dimension()) throw InvalidArgument("state has wrong dimension");
  const double n = state.norm();
  if (std::abs(n - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << "initial state must be normalized, norm = " << n;
    throw PreconditionError(msg.str(), std::abs(n - 1.0));
  }
  if (k < 1) throw InvalidArgument("subdivision count must be >= 1");
  Trajectory out;
  out.k = k;
  out.times.reserve(static_cast<std::size_t>(k + 1));
  out.states.reserve(static_cast<std::size_t>(k + 1));
  out.times.push_back(path.start());
  out.states.push_back(state);
  if (path.stop() == path.start()) return out;
  walk(path, k, rule, [&](std::int64_t j, const CMatrix& factor) {
    out.states.push_back(factor * out.states.back());
    out.times.push_back(grid_time(path.start(), path.stop(), j + 1, k));
  });
  return out;
}

Trajectory evolve(const CoefficientPath& path, const CVector& state, double tolerance,
                  FreezeRule rule) {
  if (path.stop() == path.start()) return evolve_fixed(path, state, 1, rule);
  const Refinement r = refine_to_tolerance(path, tolerance, rule);
  Trajectory out = evolve_fixed(path, state, r.k, rule);
  out.gap = r.gap;
  return out;
}

BoundReport measure_distance_bound(const CoefficientPath& path1, const CoefficientPath& path2,
                                   const CVector& state, const CertifyOptions& options) {
  const auto& t1 = path1.terms();
  const auto& t2 = path2.terms();
  if (t1.size() != t2.size()) throw InvalidArgument("paths have different numbers of terms");
  for (std::size_t i = 0; i < t1.size(); ++i) {
    if (!(t1[i].basis() == t2[i].basis()) || t1[i].matrix() != t2[i].matrix()) {
      std::ostringstream msg;
      msg << "term " << i << " differs between the two paths";
      throw InvalidArgument(msg.str());
    }
  }
  if (path1.start() != path2.start() || path1.stop() != path2.stop()) {
    throw InvalidArgument("paths cover different windows");
  }
  if (state.size() != path1.dimension()) throw InvalidArgument("state has wrong dimension");
  if (std::abs(state.norm() - 1.0) > 1e-8) {
    throw PreconditionError("state must be normalized", std::abs(state.norm() - 1.0));
  }

  BoundReport report;
  const double length = path1.stop() - path1.start();
  for (std::size_t i = 0; i < t1.size(); ++i) {
    const PiecewisePolynomial diff = path1.coefficients()[i] - path2.coefficients()[i];
    const double sup = diff.sup_norm(path1.start(), path1.stop(), options.samples_per_piece);
    const double c = length * sup * (t1[i].matrix() * state).norm();
    report.components.push_back(c);
    report.bound += c;
  }

  const Refinement r1 = refine_to_tolerance(path1, options.tolerance, options.rule);
  const Refinement r2 = refine_to_tolerance(path2, options.tolerance, options.rule);
  CMatrix u2 = r2.propagator.total;
  if (options.corrupt) options.corrupt(u2);
  report.k1 = r1.k;
  report.k2 = r2.k;
  report.measured = (r1.propagator.total * state - u2 * state).norm();
  return report;
}

BoundReport certify_distance_bound(const CoefficientPath& path1, const CoefficientPath& path2,
                                   const CVector& state, const CertifyOptions& options) {
  BoundReport report = measure_distance_bound(path1, path2, state, options);
  if (report.measured > report.bound + options.slack) {
    std::ostringstream msg;
    msg << "distance " << report.measured << " exceeds certified bound " << report.bound;
    throw CertificationFailure(msg.str(), report.bound, report.measured);
  }
  return report;
}

}  // namespace bctrl::propagator
