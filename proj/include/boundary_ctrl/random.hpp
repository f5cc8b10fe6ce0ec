#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "boundary_ctrl/types.hpp"

namespace bctrl {

/// mt19937_64 with distributions written out by hand, so streams are identical
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  CVector normalized_state(Index dim) {
    CVector v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = Complex{normal(), normal()};
    return v / v.norm();
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bctrl
