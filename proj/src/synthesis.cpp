#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "boundary_ctrl/control.hpp"
#include "boundary_ctrl/errors.hpp"
#include "boundary_ctrl/parallel.hpp"
#include "boundary_ctrl/random.hpp"

namespace bctrl::control {

namespace {

using spectral::FourierBasis;
using spectral::TruncatedOperator;

struct StartOutcome {
  std::vector<double> values;
  std::vector<CMatrix> window_props;
  double fidelity = -1.0;
  std::vector<double> history;
};

struct LevelTable {
  std::vector<double> u;
  std::vector<CMatrix> w;
};

double fid(const CVector& back, const CMatrix& w, const CVector& fwd) {
  return std::norm(back.dot(w * fwd));
}

StartOutcome run_start(const LevelTable& table, const WindowModel& model, const CVector& psi0,
                       const CVector& target, int windows, const SynthesisOptions& options,
                       std::uint64_t stream) {
  Rng rng(stream);
  const int levels = static_cast<int>(table.u.size());
  std::vector<int> level(windows);
  StartOutcome out;
  out.values.resize(windows);
  out.window_props.resize(windows);
  for (int j = 0; j < windows; ++j) {
    level[j] = static_cast<int>(rng.below(static_cast<std::uint64_t>(levels)));
    out.values[j] = table.u[level[j]];
    out.window_props[j] = table.w[level[j]];
  }
  auto total_fidelity = [&] {
    CVector s = psi0;
    for (const auto& w : out.window_props) s = w * s;
    return std::norm(target.dot(s));
  };
  out.fidelity = total_fidelity();
  out.history.push_back(out.fidelity);

  std::vector<CVector> back(windows);
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    // back[j] = W_{j+1}^dagger ... W_{last}^dagger target, valid while windows > j are untouched
    back[windows - 1] = target;
    for (int j = windows - 2; j >= 0; --j) back[j] = out.window_props[j + 1].adjoint() * back[j + 1];
    CVector fwd = psi0;
    bool improved = false;
    for (int j = 0; j < windows; ++j) {
      double best = out.fidelity;
      int best_level = -1;
      for (int q = 0; q < levels; ++q) {
        const double f = fid(back[j], table.w[q], fwd);
        if (f > best) {
          best = f;
          best_level = q;
        }
      }
      double best_u = best_level >= 0 ? table.u[best_level] : out.values[j];
      CMatrix best_w = best_level >= 0 ? table.w[best_level] : out.window_props[j];
      if (options.golden_steps > 0) {
        // golden-section search on the bracket around the incumbent value
        const double h = table.u.size() > 1 ? table.u[1] - table.u[0] : 0.0;
        double lo = std::max(table.u.front(), best_u - h);
        double hi = std::min(table.u.back(), best_u + h);
        double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
        CMatrix w1 = model(x1), w2 = model(x2);
        double f1 = fid(back[j], w1, fwd), f2 = fid(back[j], w2, fwd);
        for (int g = 0; g < options.golden_steps; ++g) {
          if (f1 > best) { best = f1; best_u = x1; best_w = w1; }
          if (f2 > best) { best = f2; best_u = x2; best_w = w2; }
          if (f1 >= f2) {
            hi = x2; x2 = x1; f2 = f1; w2 = w1;
            x1 = hi - golden * (hi - lo); w1 = model(x1); f1 = fid(back[j], w1, fwd);
          } else {
            lo = x1; x1 = x2; f1 = f2; w1 = w2;
            x2 = lo + golden * (hi - lo); w2 = model(x2); f2 = fid(back[j], w2, fwd);
          }
        }
      }
      if (best > out.fidelity) {
        out.fidelity = best;
        out.values[j] = best_u;
        out.window_props[j] = best_w;
        out.history.push_back(best);
        improved = true;
      }
      fwd = out.window_props[j] * fwd;
    }
    // resynchronize with a full forward pass so rounding cannot accumulate
    out.fidelity = total_fidelity();
    if (!improved) break;
  }
  return out;
}

std::uint64_t stream_id(std::uint64_t seed, int windows, int start) {
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ULL;
  x ^= static_cast<std::uint64_t>(windows) * 0xBF58476D1CE4E5B9ULL;
  x ^= static_cast<std::uint64_t>(start + 1) * 0x94D049BB133111EBULL;
  return x;
}

}  // namespace

double projective_fidelity(const CVector& a, const CVector& b) { return std::norm(a.dot(b)); }

WindowModelFactory auxiliary_window_model(const TruncatedOperator& h0, const TruncatedOperator& h1) {
  if (h0.dimension() != h1.dimension()) throw InvalidArgument("H0 and H1 have different dimensions");
  const CMatrix m0 = h0.matrix();
  const CMatrix m1 = h1.matrix();
  return [m0, m1](double tau) -> WindowModel {
    return [m0, m1, tau](double u) { return propagator::step_exponential(m0 + u * m1, tau); };
  };
}

WindowModelFactory boundary_window_model(const FourierBasis& basis, double base,
                                         const std::vector<TruncatedOperator>& static_terms,
                                         const std::vector<TruncatedOperator>& coupled_terms,
                                         int substeps) {
  if (substeps < 1) throw InvalidArgument("window model needs at least one substep");
  return [basis, base, static_terms, coupled_terms, substeps](double tau) -> WindowModel {
    return [basis, base, static_terms, coupled_terms, substeps, tau](double u) {
      const ControlEnvelope env(base, PiecewiseConstantControl::unchecked({u}, tau, 1.0));
      const auto path = assemble_boundary_run(env, basis, static_terms, coupled_terms);
      return propagator::rs_propagator(path, substeps, propagator::FreezeRule::Midpoint).total;
    };
  };
}

SynthesisResult synthesize_with_model(const WindowModelFactory& factory, const CVector& psi0,
                                      const CVector& psi_target, double c, double horizon_budget,
                                      double fidelity_target, const SynthesisOptions& options) {
  if (std::abs(psi0.norm() - 1.0) > 1e-8 || std::abs(psi_target.norm() - 1.0) > 1e-8) {
    throw PreconditionError("initial and target states must be normalized",
                            std::max(std::abs(psi0.norm() - 1.0), std::abs(psi_target.norm() - 1.0)));
  }
  if (psi0.size() != psi_target.size()) throw InvalidArgument("state dimensions differ");
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("control bound c must be positive");
  if (!(options.tau > 0.0)) throw InvalidArgument("window length tau must be positive");
  if (options.levels < 2 || options.starts < 1 || options.initial_windows < 1) {
    throw InvalidArgument("synthesis needs >= 2 levels, >= 1 start and >= 1 window");
  }

  const double initial = projective_fidelity(psi_target, psi0);
  SynthesisResult result(PiecewiseConstantControl({}, options.tau, c));
  result.fidelity = initial;
  result.initial_fidelity = initial;
  result.tau = options.tau;
  if (initial >= fidelity_target) {
    result.converged = true;
    return result;
  }
  if (!(horizon_budget > 0.0)) return result;

  double tau = options.tau;
  if (options.initial_windows * tau > horizon_budget) tau = horizon_budget / options.initial_windows;
  result.tau = tau;
  result.control = PiecewiseConstantControl({}, tau, c);
  const WindowModel model = factory(tau);

  LevelTable table;
  const double lo = options.floor_fraction * c;
  const double hi = (1.0 - options.floor_fraction) * c;
  table.u.resize(options.levels);
  table.w.resize(options.levels);
  for (int q = 0; q < options.levels; ++q) table.u[q] = lo + (hi - lo) * q / (options.levels - 1);
  parallel_for(static_cast<std::size_t>(options.levels),
               [&](std::size_t q) { table.w[q] = model(table.u[q]); });

  const double slack = 1e-12 * horizon_budget;
  for (int windows = options.initial_windows; windows * tau <= horizon_budget + slack; windows *= 2) {
    std::vector<StartOutcome> outcomes(options.starts);
    parallel_for(static_cast<std::size_t>(options.starts), [&](std::size_t s) {
      outcomes[s] = run_start(table, model, psi0, psi_target, windows, options,
                              stream_id(options.seed, windows, static_cast<int>(s)));
    });
    int best = 0;
    for (int s = 1; s < options.starts; ++s)
      if (outcomes[s].fidelity > outcomes[best].fidelity) best = s;
    if (outcomes[best].fidelity > result.fidelity || result.windows == 0) {
      result.fidelity = outcomes[best].fidelity;
      result.control = PiecewiseConstantControl(outcomes[best].values, tau, c);
      result.windows = windows;
      result.best_start = best;
      result.history = std::move(outcomes[best].history);
      result.window_propagators = std::move(outcomes[best].window_props);
    }
    if (result.fidelity >= fidelity_target) {
      result.converged = true;
      break;
    }
  }
  return result;
}

SynthesisResult synthesize_control(const TruncatedOperator& h0, const TruncatedOperator& h1,
                                   const CVector& psi0, const CVector& psi_target, double c,
                                   double horizon_budget, double fidelity_target,
                                   const SynthesisOptions& options) {
  SynthesisOptions opts = options;
  if (opts.golden_steps == 0) opts.golden_steps = 12;  // one exponential per evaluation is cheap
  return synthesize_with_model(auxiliary_window_model(h0, h1), psi0, psi_target, c, horizon_budget,
                               fidelity_target, opts);
}

}  // namespace bctrl::control
