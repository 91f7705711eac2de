#pragma once

// Time-ordered coefficients F_p(t) and G_p(t) of the Fock-drive series.
//
// F_p(t) is the (2p+1)-fold ordered integral over 0 < t_1 < ... < t_{2p+1} < t
// with emission slots (odd positions) weighted by xi*(s) e^{-gamma s/2} and
// absorption slots (even positions) by xi(s) e^{+gamma s/2}. G_p(t) is the
// 2p-fold analogue. Closed forms exist for the exponential mode; arbitrary
// pulses go through the chain evaluator below.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stimemit/errors.hpp"
#include "stimemit/extended_real.hpp"
#include "stimemit/ode.hpp"
#include "stimemit/pulses.hpp"

namespace stimemit {

inline constexpr std::size_t kMaxSeriesOrder = 1'000'000;

enum class CoefficientKind { F, G };

/// Odd chains end on an emission (F_p, 2p+1 events); even chains have 2p events (G_p).
enum class Parity { Odd, Even };

struct CoefficientTable {
  CoefficientKind kind = CoefficientKind::F;
  std::vector<ExtendedReal> values;  // indexed by p
  std::optional<double> time;        // nullopt: t -> infinity
  std::string pulse;
  double gamma = 1.0;

  std::size_t p_max() const { return values.size() - 1; }
};

namespace detail {

inline void check_order(std::size_t p) {
  if (p > kMaxSeriesOrder) throw std::out_of_range("series order out of range");
}

inline void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// lim_{t->inf} F_p(t) for xi(t) = e^{-t/2tau}/sqrt(tau):
///   2^{p+1}/p! * tau^{p+1/2} / prod_{k=0}^{p} (2k+1+gamma tau).
inline ExtendedReal fp_exponential_limit(std::size_t p, double tau, double gamma,
                                         unsigned bits = ExtendedReal::kDefaultBits) {
  detail::check_order(p);
  detail::check_positive(tau, "tau");
  detail::check_positive(gamma, "gamma");
  ExtendedReal t(tau, bits);
  ExtendedReal x = t * ExtendedReal(gamma, bits);
  ExtendedReal value = ldexp(ExtendedReal(1.0, bits), static_cast<long>(p) + 1);
  value /= factorial(p, bits);
  value *= pow(t, static_cast<long>(p)) * sqrt(t);
  for (std::size_t k = 0; k <= p; ++k) {
    value /= ExtendedReal(static_cast<double>(2 * k + 1), bits) + x;
  }
  return value;
}

/// All of F_0..F_{p_max} at t -> inf for the exponential mode, by the ratio
/// F_p / F_{p-1} = 2 tau / (p (2p+1+gamma tau)).
inline CoefficientTable exponential_limit_table(std::size_t p_max, double tau, double gamma,
                                                unsigned bits = ExtendedReal::kDefaultBits) {
  detail::check_order(p_max);
  detail::check_positive(tau, "tau");
  detail::check_positive(gamma, "gamma");
  CoefficientTable table;
  table.kind = CoefficientKind::F;
  table.pulse = pulses::PulseShape::exponential(tau).describe();
  table.gamma = gamma;
  table.values.reserve(p_max + 1);

  ExtendedReal t(tau, bits);
  ExtendedReal x = t * ExtendedReal(gamma, bits);
  ExtendedReal two_tau = ldexp(t, 1);
  ExtendedReal f = ldexp(sqrt(t), 1) / (ExtendedReal(1.0, bits) + x);
  table.values.push_back(f);
  for (std::size_t p = 1; p <= p_max; ++p) {
    f *= two_tau;
    f /= (ExtendedReal(static_cast<double>(2 * p + 1), bits) + x) * static_cast<unsigned long>(p);
    table.values.push_back(f);
  }
  return table;
}

/// area^order / order!, the ordered-integral value when every slot carries
/// the same weight and the decay factors are dropped.
inline ExtendedReal short_pulse_coefficient(std::size_t order, const ExtendedReal& area) {
  return pow(area, static_cast<long>(order)) / factorial(order, area.bits());
}

/// Short-pulse (gamma tau << 1) limit: (sqrt(4 tau))^{2p+1} / (2p+1)!.
inline ExtendedReal fp_short_pulse_limit(std::size_t p, double tau, unsigned bits = ExtendedReal::kDefaultBits) {
  detail::check_order(p);
  detail::check_positive(tau, "tau");
  return short_pulse_coefficient(2 * p + 1, sqrt(ExtendedReal(4.0 * tau, bits)));
}

namespace detail {

// sqrt(4 tau) (1 - e^{-t/2tau}) = integral_0^t xi for the exponential mode.
inline ExtendedReal exponential_area(double t, double tau, unsigned bits) {
  if (t < 0.0) throw std::invalid_argument("time must be non-negative");
  check_positive(tau, "tau");
  ExtendedReal arg = -(ExtendedReal(t, bits) / ExtendedReal(2.0 * tau, bits));
  return -(sqrt(ExtendedReal(4.0 * tau, bits)) * expm1(arg));
}

}  // namespace detail

/// Short-pulse F_p(t) = (sqrt(4tau))^{2p+1}/(2p+1)! e^{-(2p+1)t/2tau} (e^{t/2tau}-1)^{2p+1},
/// evaluated in the equivalent form (sqrt(4tau)(1-e^{-t/2tau}))^{2p+1}/(2p+1)!.
inline ExtendedReal fp_time_resolved_short(std::size_t p, double t, double tau,
                                           unsigned bits = ExtendedReal::kDefaultBits) {
  detail::check_order(p);
  return short_pulse_coefficient(2 * p + 1, detail::exponential_area(t, tau, bits));
}

/// Short-pulse G_p(t), the 2p-event analogue of fp_time_resolved_short.
inline ExtendedReal gp_time_resolved_short(std::size_t p, double t, double tau,
                                           unsigned bits = ExtendedReal::kDefaultBits) {
  detail::check_order(p);
  return short_pulse_coefficient(2 * p, detail::exponential_area(t, tau, bits));
}

// ---------------------------------------------------------------------------
// Chain evaluator
// ---------------------------------------------------------------------------

struct ChainOptions {
  ode::Controls controls{};
};

/// Ordered-integral coefficients for every order up to p_max on a time grid.
///
/// The ordered integral is the last member of the chain u_0 = 1,
/// u_j(t) = integral_0^t w_j(s) u_{j-1}(s) ds. Internally the even members are
/// carried as v_j = e^{-gamma t/2} u_j and every member is scaled by j!/L^j
/// (L = integral |xi| over the grid span), which keeps all state variables
/// O(1) and removes the e^{+gamma s/2} growth of the absorption weights.
class ChainTable {
 public:
  ChainTable(std::size_t p_max, std::vector<double> times, double gamma, double scale,
             std::vector<std::vector<double>> scaled, ode::Stats stats, double rel_tol)
      : p_max_(p_max),
        times_(std::move(times)),
        gamma_(gamma),
        scale_(scale),
        scaled_(std::move(scaled)),
        stats_(stats),
        rel_tol_(rel_tol) {}

  std::size_t p_max() const { return p_max_; }
  const std::vector<double>& times() const { return times_; }
  double gamma() const { return gamma_; }
  const ode::Stats& stats() const { return stats_; }
  double rel_tol() const { return rel_tol_; }

  /// F_0..F_{p_max} at times()[i].
  std::vector<ExtendedReal> f_series(std::size_t i, unsigned bits = ExtendedReal::kDefaultBits) const {
    return series(i, bits, 1, false);
  }

  /// G_0..G_{p_max} at times()[i], as ordered integrals (G_0 = 1).
  std::vector<ExtendedReal> g_series(std::size_t i, unsigned bits = ExtendedReal::kDefaultBits) const {
    return series(i, bits, 0, true);
  }

  /// e^{-gamma t/2} G_p(t): G_p including the decay of the excited state
  /// between the last absorption and t.
  std::vector<ExtendedReal> g_decayed_series(std::size_t i, unsigned bits = ExtendedReal::kDefaultBits) const {
    return series(i, bits, 0, false);
  }

 private:
  // Orders j = first, first + 2, ..., as u_j (undo_decay) or v_j.
  std::vector<ExtendedReal> series(std::size_t i, unsigned bits, std::size_t first, bool undo_decay) const {
    const auto& z = scaled_.at(i);
    ExtendedReal length(scale_, bits);
    ExtendedReal factor(1.0, bits);  // L^j / j!
    std::vector<ExtendedReal> out;
    out.reserve(p_max_ + 1);
    ExtendedReal growth = undo_decay ? exp(ExtendedReal(0.5 * gamma_ * times_[i], bits)) : ExtendedReal(1.0, bits);
    std::size_t j = 0;
    for (std::size_t p = 0; p <= p_max_; ++p) {
      std::size_t order = 2 * p + first;
      for (; j < order; ) {
        ++j;
        factor *= length;
        factor /= static_cast<unsigned long>(j);
      }
      if (order == 0) {
        // u_0 = 1, v_0 = e^{-gamma t/2}
        out.push_back(undo_decay ? ExtendedReal(1.0, bits)
                                 : exp(ExtendedReal(-0.5 * gamma_ * times_[i], bits)));
        continue;
      }
      ExtendedReal v = factor * ExtendedReal(z[order - 1], bits);
      if (order % 2 == 0) v *= growth;
      out.push_back(std::move(v));
    }
    return out;
  }

  std::size_t p_max_;
  std::vector<double> times_;
  double gamma_;
  double scale_;
  std::vector<std::vector<double>> scaled_;  // [time][j - 1], j = 1..2p_max+1
  ode::Stats stats_;
  double rel_tol_;
};

/// Integrates the chain for orders up to 2 p_max + 1 once, forward in time,
/// reporting every grid time. gamma may be zero (no decay).
inline ChainTable integrate_chain(std::size_t p_max, std::span<const double> grid, const pulses::PulseShape& pulse,
                                  double gamma, const ChainOptions& options = {}) {
  detail::check_order(p_max);
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be non-negative");
  if (!pulse.is_real()) throw std::invalid_argument("chain evaluation requires a real-valued pulse");
  if (grid.empty()) throw std::invalid_argument("time grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) throw std::invalid_argument("grid times must be finite and >= 0");
    if (i > 0 && grid[i] < grid[i - 1]) throw std::invalid_argument("grid times must be ascending");
  }

  const std::size_t depth = 2 * p_max + 1;
  const double t_max = grid.back();
  double scale = pulse.abs_integral(t_max);
  if (!(scale > 0.0)) scale = 1.0;
  const double half_gamma = 0.5 * gamma;

  std::vector<double> state(depth, 0.0);  // z_1..z_depth
  std::vector<std::vector<double>> out;
  out.reserve(grid.size());

  // Segment edges: pulse breakpoints merged with the output grid.
  std::vector<double> edges = pulse.breakpoints(0.0, t_max);
  edges.insert(edges.end(), grid.begin(), grid.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  ode::Stats stats;
  double h = 0.0;
  double t = 0.0;
  std::size_t next_output = 0;
  auto emit_outputs = [&] {
    while (next_output < grid.size() && grid[next_output] <= t) {
      out.push_back(state);
      ++next_output;
    }
  };
  emit_outputs();
  for (double edge : edges) {
    if (edge <= t) continue;
    const double lo = t;
    const double hi = edge;
    auto rhs = [&](double s, const std::vector<double>& z, std::vector<double>& dz) {
      const double xi = pulse.evaluate_in(s, lo, hi).real();
      dz[0] = xi * std::exp(-half_gamma * s) / scale;
      for (std::size_t k = 1; k < depth; ++k) {
        const std::size_t j = k + 1;  // chain order of z[k]
        dz[k] = static_cast<double>(j) / scale * xi * z[k - 1];
        if (j % 2 == 0) dz[k] -= half_gamma * z[k];
      }
    };
    ode::integrate_step_doubling(rhs, state, lo, hi, h, options.controls, stats);
    t = hi;
    emit_outputs();
  }
  return ChainTable(p_max, std::vector<double>(grid.begin(), grid.end()), gamma, scale, std::move(out), stats,
                    options.controls.rel_tol);
}

/// F_p (Odd) or G_p (Even) on each grid time via the chain evaluator.
inline std::vector<ExtendedReal> fp_general(std::size_t p, std::span<const double> grid,
                                            const pulses::PulseShape& pulse, double gamma, Parity parity,
                                            unsigned bits = ExtendedReal::kDefaultBits,
                                            const ChainOptions& options = {}) {
  ChainTable table = integrate_chain(p, grid, pulse, gamma, options);
  std::vector<ExtendedReal> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto series = parity == Parity::Odd ? table.f_series(i, bits) : table.g_series(i, bits);
    out.push_back(std::move(series[p]));
  }
  return out;
}

}  // namespace stimemit
