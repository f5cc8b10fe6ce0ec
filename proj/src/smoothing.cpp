#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "boundary_ctrl/control.hpp"
#include "boundary_ctrl/errors.hpp"

namespace bctrl::control {

namespace {

double raw_bump(double z) {
  if (z <= -1.0 || z >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - z * z));
}

// Cumulative moments of the bump on a uniform grid, filled by 8-point
// Gauss-Legendre on every cell and read back by cubic Hermite interpolation.
class BumpTable {
 public:
  static const BumpTable& instance() {
    static const BumpTable table;
    return table;
  }

  double kernel(double z) const { return raw_bump(z) / norm_; }

  double mass(double z) const { return lookup(m0_, z, [&](double x) { return kernel(x); }); }
  double first_moment(double z) const {
    return lookup(m1_, z, [&](double x) { return x * kernel(x); });
  }

 private:
  static constexpr int kCells = 4096;

  BumpTable() {
    static constexpr std::array<double, 8> nodes = {
        -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
        0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static constexpr std::array<double, 8> weights = {
        0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
        0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    h_ = 2.0 / kCells;
    std::vector<double> m0(kCells + 1, 0.0), m1(kCells + 1, 0.0);
    for (int c = 0; c < kCells; ++c) {
      const double a = -1.0 + c * h_;
      double s0 = 0.0, s1 = 0.0;
      for (int g = 0; g < 8; ++g) {
        const double x = a + 0.5 * h_ * (nodes[g] + 1.0);
        const double k = raw_bump(x);
        s0 += weights[g] * k;
        s1 += weights[g] * x * k;
      }
      m0[c + 1] = m0[c] + 0.5 * h_ * s0;
      m1[c + 1] = m1[c] + 0.5 * h_ * s1;
    }
    norm_ = m0.back();
    for (auto& v : m0) v /= norm_;
    for (auto& v : m1) v /= norm_;
    m0_ = std::move(m0);
    m1_ = std::move(m1);
  }

  template <class Derivative>
  double lookup(const std::vector<double>& table, double z, Derivative d) const {
    if (z <= -1.0) return table.front();
    if (z >= 1.0) return table.back();
    const double pos = (z + 1.0) / h_;
    const int c = std::min(kCells - 1, static_cast<int>(pos));
    const double s = pos - c;
    const double x0 = -1.0 + c * h_;
    const double x1 = x0 + h_;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * table[c] + (s3 - 2 * s2 + s) * h_ * d(x0) +
           (-2 * s3 + 3 * s2) * table[c + 1] + (s3 - s2) * h_ * d(x1);
  }

  double h_ = 0.0;
  double norm_ = 1.0;
  std::vector<double> m0_, m1_;
};

}  // namespace

double bump_kernel(double z) { return BumpTable::instance().kernel(z); }
double bump_mass(double z) { return BumpTable::instance().mass(z); }
double bump_first_moment(double z) { return BumpTable::instance().first_moment(z); }

SmoothEnvelope::SmoothEnvelope(ControlEnvelope envelope, double width)
    : envelope_(std::move(envelope)), width_(width) {
  if (!(width_ >= 0.0) || !std::isfinite(width_)) throw InvalidArgument("kernel width must be >= 0");
}

double SmoothEnvelope::value(double t) const {
  if (width_ == 0.0) return envelope_.value(t);
  const auto& table = BumpTable::instance();
  const auto& pieces = envelope_.pieces();
  const double w = width_;
  const std::size_t n = pieces.size();
  const double tau = envelope_.control().tau();
  const long jlo = std::max(0L, static_cast<long>(std::floor((t - w) / tau)));
  const long jhi = std::min(static_cast<long>(n) - 1, static_cast<long>(std::floor((t + w) / tau)));
  double sum = 0.0;
  for (long j = jlo; j <= jhi; ++j) {
    const auto& p = pieces[static_cast<std::size_t>(j)];
    // the outermost pieces continue affinely past the horizon
    const double a = j == 0 ? -1e300 : p.t0;
    const double b = j + 1 == static_cast<long>(n) ? 1e300 : p.t1;
    // s ranges over (t - b, t - a]
    const double z1 = std::clamp((t - b) / w, -1.0, 1.0);
    const double z2 = std::clamp((t - a) / w, -1.0, 1.0);
    if (z2 <= z1) continue;
    const double at_t = p.c0 + p.c1 * (t - p.t0);
    sum += at_t * (table.mass(z2) - table.mass(z1)) -
           p.c1 * w * (table.first_moment(z2) - table.first_moment(z1));
  }
  return sum;
}

double SmoothEnvelope::derivative(double t) const {
  if (width_ == 0.0) return envelope_.derivative(t);
  const auto& table = BumpTable::instance();
  const auto& pieces = envelope_.pieces();
  const double w = width_;
  const std::size_t n = pieces.size();
  const double tau = envelope_.control().tau();
  const long jlo = std::max(0L, static_cast<long>(std::floor((t - w) / tau)));
  const long jhi = std::min(static_cast<long>(n) - 1, static_cast<long>(std::floor((t + w) / tau)));
  const std::vector<double> jumps = envelope_.jumps();
  double sum = 0.0;
  for (long j = jlo; j <= jhi; ++j) {
    const auto& p = pieces[static_cast<std::size_t>(j)];
    const double a = j == 0 ? -1e300 : p.t0;
    const double b = j + 1 == static_cast<long>(n) ? 1e300 : p.t1;
    const double z1 = std::clamp((t - b) / w, -1.0, 1.0);
    const double z2 = std::clamp((t - a) / w, -1.0, 1.0);
    if (z2 > z1) sum += p.c1 * (table.mass(z2) - table.mass(z1));
    // jump at the start of piece j (j >= 1) contributes J K_w(t - t_j)
    if (j >= 1) sum += jumps[static_cast<std::size_t>(j - 1)] * table.kernel((t - p.t0) / w) / w;
  }
  return sum;
}

std::pair<double, double> SmoothEnvelope::deviations(int samples_per_window) const {
  if (width_ == 0.0) return {0.0, 0.0};
  double d1 = 0.0, d2 = 0.0;
  for (const auto& p : envelope_.pieces()) {
    for (int s = 0; s <= samples_per_window; ++s) {
      const double t = p.t0 + (p.t1 - p.t0) * s / samples_per_window;
      d1 = std::max(d1, std::abs(p.value(t) - value(t)));
      d2 = std::max(d2, std::abs(p.derivative(t) - derivative(t)));
    }
  }
  return {d1, d2};
}

SmoothingResult smooth_control(const ControlEnvelope& envelope, double delta1, double delta2,
                               int samples_per_window) {
  if (!(delta1 > 0.0) || !(delta2 > 0.0)) {
    throw InvalidArgument("smoothing targets delta1 and delta2 must be positive");
  }
  const auto jumps = envelope.jumps();
  const bool smooth_already =
      std::all_of(jumps.begin(), jumps.end(), [](double j) { return j == 0.0; });
  if (smooth_already) return {SmoothEnvelope(envelope, 0.0), 0.0, 0.0};

  const double tau = envelope.control().tau();
  double best1 = 0.0, best2 = 0.0;
  for (double w = 0.5 * tau; w >= 1e-9 * tau; w *= 0.7) {
    SmoothEnvelope candidate(envelope, w);
    const auto [d1, d2] = candidate.deviations(samples_per_window);
    if (d1 <= delta1 && d2 <= delta2) return {std::move(candidate), d1, d2};
    best1 = d1;
    best2 = d2;
  }
  std::ostringstream msg;
  msg << "no mollifier width down to 1e-9 tau meets delta1 = " << delta1 << ", delta2 = " << delta2
      << " (smallest width gives " << best1 << ", " << best2
      << "; a jump J forces sup |A - A~| >= |J|/2)";
  throw PreconditionError(msg.str(), best1);
}

propagator::CoefficientPath assemble_smooth_boundary_run(
    const SmoothEnvelope& smooth, const spectral::FourierBasis& basis,
    const std::vector<spectral::TruncatedOperator>& static_terms,
    const std::vector<spectral::TruncatedOperator>& coupled_terms, int pieces_per_window) {
  const ControlEnvelope& env = smooth.envelope();
  const double horizon = env.horizon();
  if (!(horizon > 0.0)) throw InvalidArgument("smooth boundary run needs a positive horizon");
  const int pieces = pieces_per_window * static_cast<int>(env.control().windows());
  std::vector<spectral::TruncatedOperator> terms = boundary_terms(basis);
  std::vector<PiecewisePolynomial> coefficients = {
      PiecewisePolynomial::constant(1.0, 0.0, horizon),
      PiecewisePolynomial::interpolate([&](double t) { return -2.0 * smooth.value(t); }, 0.0, horizon,
                                       pieces),
      PiecewisePolynomial::interpolate(
          [&](double t) {
            const double a = smooth.value(t);
            return a * a;
          },
          0.0, horizon, pieces),
      PiecewisePolynomial::interpolate([&](double t) { return -smooth.derivative(t); }, 0.0, horizon,
                                       pieces)};
  for (const auto& s : static_terms) {
    terms.push_back(s);
    coefficients.push_back(PiecewisePolynomial::constant(1.0, 0.0, horizon));
  }
  for (const auto& s : coupled_terms) {
    terms.push_back(s);
    coefficients.push_back(coefficients[3].scaled(-1.0));
  }
  return propagator::CoefficientPath(std::move(terms), std::move(coefficients), 0.0, horizon);
}

}  // namespace bctrl::control
