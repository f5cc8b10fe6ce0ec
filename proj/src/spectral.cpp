#include "boundary_ctrl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "boundary_ctrl/errors.hpp"

namespace bctrl::spectral {

namespace {

constexpr double kHermitianPrecondition = 1e-9;

// Two eigenvalues belong to the same cluster when closer than this
// (relative to max(1, |lambda|)).
constexpr double kClusterTolerance = 1e-10;

int dominant_index(const CVector& v) {
  Index best = 0;
  double best_weight = -1.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double w = std::norm(v(i));
    // strict comparison keeps the lowest index on exact ties
    if (w > best_weight * (1.0 + 1e-12)) {
      best_weight = w;
      best = i;
    }
  }
  return static_cast<int>(best);
}

void fix_phase(CVector& v, Index anchor) {
  const Complex c = v(anchor);
  if (std::abs(c) > 0.0) v *= std::conj(c) / std::abs(c);
}

// Replace an orthonormal basis of a degenerate eigenspace by the one obtained
// from Gram-Schmidt on the projections of Fourier unit vectors, taken in order
// of decreasing overlap with the eigenspace.
CMatrix canonical_cluster_basis(const CMatrix& cluster) {
  const Index dim = cluster.rows();
  const Index size = cluster.cols();
  std::vector<double> overlap(dim);
  for (Index i = 0; i < dim; ++i) overlap[i] = cluster.row(i).squaredNorm();
  std::vector<Index> order(dim);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return overlap[a] > overlap[b] * (1.0 + 1e-12); });

  CMatrix out(dim, 0);
  for (Index candidate : order) {
    if (out.cols() == size) break;
    // projection of e_candidate onto the eigenspace
    CVector v = cluster * cluster.row(candidate).adjoint();
    for (Index j = 0; j < out.cols(); ++j) v -= out.col(j) * out.col(j).dot(v);
    for (Index j = 0; j < out.cols(); ++j) v -= out.col(j) * out.col(j).dot(v);
    const double norm = v.norm();
    if (norm < 1e-6) continue;
    out.conservativeResize(Eigen::NoChange, out.cols() + 1);
    out.col(out.cols() - 1) = v / norm;
  }
  if (out.cols() != size) return cluster;  // numerically degenerate projection; keep solver output
  return out;
}

}  // namespace

IntervalGeometry::IntervalGeometry(double length) : length_(length) {
  if (!std::isfinite(length) || length <= 0.0) {
    std::ostringstream msg;
    msg << "interval length must be finite and positive, got " << length;
    throw InvalidArgument(msg.str());
  }
}

FourierBasis::FourierBasis(IntervalGeometry geometry, int half_width)
    : geometry_(geometry), half_width_(half_width) {
  if (half_width < 1) throw InvalidArgument("truncation half-width must be >= 1");
}

Index FourierBasis::index_of(int mode) const {
  if (mode < -half_width_ || mode > half_width_) {
    std::ostringstream msg;
    msg << "mode " << mode << " outside truncation window [" << -half_width_ << ", "
        << half_width_ << "]";
    throw InvalidArgument(msg.str());
  }
  return Index{mode} + half_width_;
}

std::vector<int> FourierBasis::modes() const {
  std::vector<int> out(static_cast<std::size_t>(dimension()));
  std::iota(out.begin(), out.end(), -half_width_);
  return out;
}

double FourierBasis::wavenumber(int mode) const noexcept {
  return 2.0 * kPi * mode / length();
}

Complex FourierBasis::evaluate(int mode, double x) const {
  return std::exp(kI * (wavenumber(mode) * x)) / std::sqrt(length());
}

Complex FourierBasis::reconstruct(const CVector& coefficients, double x) const {
  if (coefficients.size() != dimension()) throw InvalidArgument("coefficient vector has wrong dimension");
  if (x == length()) x = 0.0;
  Complex sum{0.0, 0.0};
  for (Index i = 0; i < dimension(); ++i) sum += coefficients(i) * evaluate(mode(i), x);
  return sum;
}

CVector FourierBasis::unit(int mode) const {
  CVector v = CVector::Zero(dimension());
  v(index_of(mode)) = 1.0;
  return v;
}

TruncatedOperator::TruncatedOperator(FourierBasis basis, CMatrix matrix)
    : basis_(std::move(basis)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != basis_.dimension() || matrix_.cols() != basis_.dimension()) {
    throw InvalidArgument("operator matrix does not match basis dimension");
  }
  if (!matrix_.allFinite()) throw InvalidArgument("operator matrix has non-finite entries");
}

double TruncatedOperator::hermiticity_defect() const {
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

bool TruncatedOperator::is_diagonal() const {
  for (Index j = 0; j < matrix_.cols(); ++j)
    for (Index i = 0; i < matrix_.rows(); ++i)
      if (i != j && matrix_(i, j) != Complex{0.0, 0.0}) return false;
  return true;
}

TruncatedOperator TruncatedOperator::operator+(const TruncatedOperator& other) const {
  if (!(basis_ == other.basis_)) throw InvalidArgument("operators live in different bases");
  return TruncatedOperator(basis_, matrix_ + other.matrix_);
}

TruncatedOperator TruncatedOperator::scaled(double factor) const {
  return TruncatedOperator(basis_, matrix_ * factor);
}

RVector Spectrum::gaps() const {
  if (eigenvalues.size() < 2) return RVector(0);
  return eigenvalues.tail(eigenvalues.size() - 1) - eigenvalues.head(eigenvalues.size() - 1);
}

TruncatedOperator build_magnetic_laplacian(double potential, const FourierBasis& basis) {
  if (!std::isfinite(potential)) throw InvalidArgument("magnetic potential must be finite");
  CMatrix m = CMatrix::Zero(basis.dimension(), basis.dimension());
  for (Index i = 0; i < basis.dimension(); ++i) {
    const double k = basis.wavenumber(basis.mode(i)) - potential;
    m(i, i) = k * k;
  }
  return TruncatedOperator(basis, std::move(m));
}

TruncatedOperator build_free_laplacian(const FourierBasis& basis) {
  return build_magnetic_laplacian(0.0, basis);
}

TruncatedOperator build_position_operator(const FourierBasis& basis) {
  const double l = basis.length();
  const Index dim = basis.dimension();
  CMatrix m(dim, dim);
  for (Index j = 0; j < dim; ++j) {
    for (Index i = 0; i < dim; ++i) {
      const int diff = basis.mode(i) - basis.mode(j);
      m(i, j) = diff == 0 ? Complex{l / 2.0, 0.0} : kI * (l / (2.0 * kPi * diff));
    }
  }
  return TruncatedOperator(basis, std::move(m));
}

TruncatedOperator build_momentum_operator(const FourierBasis& basis) {
  CMatrix m = CMatrix::Zero(basis.dimension(), basis.dimension());
  for (Index i = 0; i < basis.dimension(); ++i) m(i, i) = basis.wavenumber(basis.mode(i));
  return TruncatedOperator(basis, std::move(m));
}

TruncatedOperator build_identity(const FourierBasis& basis) {
  return TruncatedOperator(basis, CMatrix::Identity(basis.dimension(), basis.dimension()));
}

Spectrum eigendecompose(const TruncatedOperator& op) {
  const double defect = op.hermiticity_defect();
  if (defect > kHermitianPrecondition) {
    std::ostringstream msg;
    msg << "operator is not Hermitian: max |H - H^dagger| = " << defect;
    throw PreconditionError(msg.str(), defect);
  }
  const Index dim = op.dimension();
  const FourierBasis& basis = op.basis();
  Spectrum out;

  if (op.is_diagonal()) {
    std::vector<Index> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), Index{0});
    const CMatrix& m = op.matrix();
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return m(a, a).real() < m(b, b).real(); });
    out.eigenvalues.resize(dim);
    out.eigenvectors = CMatrix::Zero(dim, dim);
    for (Index k = 0; k < dim; ++k) {
      out.eigenvalues(k) = m(order[k], order[k]).real();
      out.eigenvectors(order[k], k) = 1.0;
      out.dominant_modes.push_back(basis.mode(order[k]));
    }
    return out;
  }

  const CMatrix herm = 0.5 * (op.matrix() + op.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm);
  if (solver.info() != Eigen::Success) {
    throw PreconditionError("Hermitian eigensolver failed to converge", defect);
  }
  RVector values = solver.eigenvalues();
  CMatrix vectors = solver.eigenvectors();

  // Canonicalize degenerate clusters, then order within each cluster by the
  // dominant Fourier mode.
  Index begin = 0;
  while (begin < dim) {
    Index end = begin + 1;
    while (end < dim &&
           values(end) - values(end - 1) <= kClusterTolerance * std::max(1.0, std::abs(values(end)))) {
      ++end;
    }
    const Index size = end - begin;
    if (size > 1) {
      CMatrix cluster = canonical_cluster_basis(vectors.middleCols(begin, size));
      std::vector<Index> order(static_cast<std::size_t>(size));
      std::iota(order.begin(), order.end(), Index{0});
      std::vector<int> dom(static_cast<std::size_t>(size));
      for (Index j = 0; j < size; ++j) dom[j] = dominant_index(cluster.col(j));
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return dom[a] < dom[b]; });
      for (Index j = 0; j < size; ++j) {
        const CVector v = cluster.col(order[j]);
        vectors.col(begin + j) = v;
        values(begin + j) = (v.adjoint() * herm * v)(0, 0).real();
      }
    }
    begin = end;
  }

  out.eigenvalues = values;
  out.eigenvectors = vectors;
  for (Index k = 0; k < dim; ++k) {
    CVector v = out.eigenvectors.col(k);
    const int anchor = dominant_index(v);
    fix_phase(v, anchor);
    out.eigenvectors.col(k) = v;
    out.dominant_modes.push_back(basis.mode(anchor));
  }
  return out;
}

std::vector<double> gap_sequence(const Spectrum& spectrum, Index count) {
  if (count < 0 || count > spectrum.dimension() - 1) {
    std::ostringstream msg;
    msg << "requested " << count << " gaps but only " << spectrum.dimension() - 1 << " exist";
    throw InvalidArgument(msg.str());
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) out[k] = spectrum.eigenvalues(k + 1) - spectrum.eigenvalues(k);
  return out;
}

}  // namespace bctrl::spectral
