#pragma once

// Stimulated-emission probability P_stim and no-stimulation probability P_0
// for an excited two-level atom driven by an n-photon Fock pulse:
//
//   P_stim(t) = | sum_{p=0}^{n} (-1)^p sqrt(n+1) n!/(n-p)! F_p(t) gamma^{p+1/2} |^2
//   P_0(t)    = | sum_{p=0}^{n} (-1)^p n!/(n-p)! e^{-gamma t/2} G_p(t) gamma^p |^2

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "stimemit/alternating_sum.hpp"
#include "stimemit/extended_real.hpp"
#include "stimemit/fock_series.hpp"
#include "stimemit/pulses.hpp"

namespace stimemit {

inline constexpr unsigned kMaxPhotons = 10'000;

/// Upper bound on gamma*tau for the short-pulse formulas before a warning.
inline constexpr double kShortPulseValidity = 0.05;

struct DriveSpec {
  unsigned n = 0;
  pulses::PulseShape pulse = pulses::PulseShape::exponential(1.0);
  double gamma = 1.0;

  void validate() const {
    if (n > kMaxPhotons) throw std::invalid_argument("photon number exceeds guard of 10^4");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be positive");
  }
};

struct StimResult {
  double p_stim = 0.0;
  std::optional<double> p0;
  std::vector<ExtendedReal> terms;  // signed terms of the P_stim amplitude
  ExtendedReal max_term_magnitude;
  unsigned precision_bits_used = 0;
  std::optional<double> t;  // nullopt: asymptotic
  /// Amplitude error implied by the coefficient accuracy; 0 for closed forms.
  double coefficient_error_bound = 0.0;
  std::vector<std::string> warnings;
};

struct Asymptotic {};
inline constexpr Asymptotic asymptotic{};

struct EvalOptions {
  SumOptions sum{.absolute_floor = 1e-60};
  ChainOptions chain{};
  double exponential_support = pulses::kExponentialSupport;
  /// Extra integration time after the pulse support, in units of 1/gamma.
  double settle_time = 40.0;
};

enum class PrefactorKind { Stim, P0 };

/// sqrt(n+1) n!/(n-p)! (Stim) or n!/(n-p)! (P0).
inline ExtendedReal prefactor(unsigned n, unsigned p, PrefactorKind kind,
                              unsigned bits = ExtendedReal::kDefaultBits) {
  if (p > n) throw std::invalid_argument("term order exceeds photon number");
  ExtendedReal value = falling_factorial(n, p, bits);
  if (kind == PrefactorKind::Stim) value *= sqrt(ExtendedReal(static_cast<double>(n) + 1.0, bits));
  return value;
}

namespace detail {

// (-1)^p pref_p c_p gamma^{p + offset/2} for p = 0..n, with the prefactor
// built incrementally. `coefficients(bits)` returns c_0..c_n.
template <typename CoefficientFn>
std::vector<ExtendedReal> signed_terms(unsigned n, PrefactorKind kind, double gamma, bool half_power, unsigned bits,
                                       CoefficientFn&& coefficients) {
  std::vector<ExtendedReal> c = coefficients(bits);
  ExtendedReal g(gamma, bits);
  ExtendedReal weight = kind == PrefactorKind::Stim ? sqrt(ExtendedReal(static_cast<double>(n) + 1.0, bits))
                                                    : ExtendedReal(1.0, bits);
  if (half_power) weight *= sqrt(g);
  std::vector<ExtendedReal> terms;
  terms.reserve(n + 1);
  for (unsigned p = 0; p <= n; ++p) {
    if (p > 0) {
      weight *= static_cast<unsigned long>(n - p + 1);
      weight *= g;
      weight = -weight;
    }
    terms.push_back(weight * c.at(p));
  }
  return terms;
}

inline double sum_abs(const std::vector<ExtendedReal>& terms) {
  double acc = 0.0;
  for (const auto& t : terms) acc += std::fabs(t.to_double());
  return acc;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

/// P_stim after the pulse has passed (t -> infinity). Uses the closed-form
/// coefficients for the exponential mode, the chain evaluator otherwise.
inline StimResult pstim_exact(const DriveSpec& drive, Asymptotic, const EvalOptions& options = {}) {
  drive.validate();
  StimResult result;
  std::optional<ChainTable> chain;
  if (drive.pulse.kind() != pulses::PulseKind::Exponential) {
    const double horizon = drive.pulse.support_end(options.exponential_support) + options.settle_time / drive.gamma;
    const double grid[] = {horizon};
    chain.emplace(integrate_chain(drive.n, grid, drive.pulse, drive.gamma, options.chain));
  }
  auto coefficients = [&](unsigned bits) {
    if (chain) return chain->f_series(0, bits);
    return exponential_limit_table(drive.n, drive.pulse.tau(), drive.gamma, bits).values;
  };
  auto terms = [&](unsigned bits) {
    return detail::signed_terms(drive.n, PrefactorKind::Stim, drive.gamma, true, bits, coefficients);
  };
  SumResult sum = sum_alternating(terms, options.sum);
  result.p_stim = (sum.value * sum.value).to_double();
  result.max_term_magnitude = sum.max_term;
  result.precision_bits_used = sum.precision_bits;
  result.terms = terms(sum.precision_bits);
  if (chain) result.coefficient_error_bound = chain->rel_tol() * detail::sum_abs(result.terms);
  return result;
}

/// P_stim(t) and P_0(t) on a grid from a single chain integration.
inline std::vector<StimResult> pstim_timeseries(const DriveSpec& drive, std::span<const double> grid,
                                                const EvalOptions& options = {}) {
  drive.validate();
  ChainTable chain = integrate_chain(drive.n, grid, drive.pulse, drive.gamma, options.chain);
  std::vector<StimResult> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto stim_terms = [&](unsigned bits) {
      return detail::signed_terms(drive.n, PrefactorKind::Stim, drive.gamma, true, bits,
                                  [&](unsigned b) { return chain.f_series(i, b); });
    };
    auto p0_terms = [&](unsigned bits) {
      return detail::signed_terms(drive.n, PrefactorKind::P0, drive.gamma, false, bits,
                                  [&](unsigned b) { return chain.g_decayed_series(i, b); });
    };
    SumResult stim = sum_alternating(stim_terms, options.sum);
    SumResult p0 = sum_alternating(p0_terms, options.sum);

    StimResult r;
    r.t = grid[i];
    r.p_stim = (stim.value * stim.value).to_double();
    r.p0 = (p0.value * p0.value).to_double();
    r.max_term_magnitude = stim.max_term;
    r.precision_bits_used = std::max(stim.precision_bits, p0.precision_bits);
    r.terms = stim_terms(stim.precision_bits);
    r.coefficient_error_bound = chain.rel_tol() * std::max(detail::sum_abs(r.terms), detail::sum_abs(p0_terms(64)));
    out.push_back(std::move(r));
  }
  return out;
}

/// P_stim(t) and P_0(t) at a single time.
inline StimResult pstim_exact(const DriveSpec& drive, double t, const EvalOptions& options = {}) {
  const double grid[] = {t};
  return pstim_timeseries(drive, grid, options).front();
}

/// Large-n, short-pulse approximation sin^2(sqrt(4 gamma tau n)).
inline double pstim_sin2(unsigned n, double tau, double gamma) {
  double s = std::sin(std::sqrt(4.0 * gamma * tau * static_cast<double>(n)));
  return s * s;
}

/// Companion approximation cos^2(sqrt(4 gamma tau n)) for P_0.
inline double p0_cos2(unsigned n, double tau, double gamma) {
  double c = std::cos(std::sqrt(4.0 * gamma * tau * static_cast<double>(n)));
  return c * c;
}

namespace detail {

// c_j = area^j / j! for j = 0..2n+1, split into odd (F) and even (G) orders.
inline void short_pulse_coefficients(unsigned n, const ExtendedReal& area, std::vector<ExtendedReal>& f,
                                     std::vector<ExtendedReal>& g) {
  const unsigned bits = area.bits();
  f.clear();
  g.clear();
  ExtendedReal c(1.0, bits);
  for (unsigned long j = 0; j <= 2ul * n + 1; ++j) {
    if (j > 0) {
      c *= area;
      c /= j;
    }
    (j % 2 == 0 ? g : f).push_back(c);
  }
}

inline StimResult short_pulse_point(unsigned n, double gamma, double t, const std::function<ExtendedReal(unsigned)>& area,
                                    const SumOptions& sum_options) {
  auto stim_terms = [&](unsigned bits) {
    return signed_terms(n, PrefactorKind::Stim, gamma, true, bits, [&](unsigned b) {
      std::vector<ExtendedReal> f, g;
      short_pulse_coefficients(n, area(b), f, g);
      return f;
    });
  };
  auto p0_terms = [&](unsigned bits) {
    return signed_terms(n, PrefactorKind::P0, gamma, false, bits, [&](unsigned b) {
      std::vector<ExtendedReal> f, g;
      short_pulse_coefficients(n, area(b), f, g);
      return g;
    });
  };
  SumResult stim = sum_alternating(stim_terms, sum_options);
  SumResult p0 = sum_alternating(p0_terms, sum_options);
  StimResult r;
  r.t = t;
  r.p_stim = (stim.value * stim.value).to_double();
  r.p0 = (p0.value * p0.value).to_double();
  r.max_term_magnitude = stim.max_term;
  r.precision_bits_used = std::max(stim.precision_bits, p0.precision_bits);
  r.terms = stim_terms(stim.precision_bits);
  return r;
}

}  // namespace detail

/// Time-resolved P_stim(t), P_0(t) from the short-pulse closed forms for the
/// exponential mode (decay during the pulse neglected).
inline std::vector<StimResult> rabi_timeseries_short(unsigned n, double tau, double gamma,
                                                     std::span<const double> grid, const SumOptions& sum_options =
                                                                                       EvalOptions{}.sum) {
  DriveSpec{n, pulses::PulseShape::exponential(tau), gamma}.validate();
  std::vector<StimResult> out;
  out.reserve(grid.size());
  for (double t : grid) {
    StimResult r = detail::short_pulse_point(
        n, gamma, t, [&](unsigned bits) { return detail::exponential_area(t, tau, bits); }, sum_options);
    if (gamma * tau > kShortPulseValidity) {
      r.warnings.push_back("short-pulse formula used outside its validity (gamma*tau=" +
                           detail::format_double(gamma * tau) + ")");
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Same approximation for any real pulse: every ordered-integral coefficient
/// of order j becomes A(t)^j / j! with A(t) = integral_0^t xi.
inline std::vector<StimResult> rabi_timeseries_short(const DriveSpec& drive, std::span<const double> grid,
                                                     const SumOptions& sum_options = EvalOptions{}.sum) {
  drive.validate();
  if (drive.pulse.kind() == pulses::PulseKind::Exponential) {
    return rabi_timeseries_short(drive.n, drive.pulse.tau(), drive.gamma, grid, sum_options);
  }
  if (!drive.pulse.is_real()) throw std::invalid_argument("short-pulse series requires a real-valued pulse");
  const double duration = drive.pulse.support_end();
  std::vector<StimResult> out;
  out.reserve(grid.size());
  for (double t : grid) {
    if (!(t >= 0.0)) throw std::invalid_argument("time must be non-negative");
    const double area = drive.pulse.cumulative_amplitude(t).real();
    StimResult r = detail::short_pulse_point(
        drive.n, drive.gamma, t, [area](unsigned bits) { return ExtendedReal(area, bits); }, sum_options);
    // For a square mode 4 tau plays the role of T.
    if (drive.gamma * duration / 4.0 > kShortPulseValidity) {
      r.warnings.push_back("short-pulse formula used outside its validity (gamma*T/4=" +
                           detail::format_double(drive.gamma * duration / 4.0) + ")");
    }
    out.push_back(std::move(r));
  }
  return out;
}

struct SquareRabi {
  double p_stim = 0.0;
  double p0 = 1.0;
  double rabi_frequency = 0.0;  // sqrt(gamma / T) sqrt(n)
};

/// Square-mode Rabi picture: sin^2(t sqrt(gamma n / T)) during the pulse,
/// frozen at sin^2(sqrt(gamma T n)) afterwards; cos^2 for P_0.
inline SquareRabi square_rabi(unsigned n, double width, double gamma, double t) {
  if (!(width > 0.0)) throw std::invalid_argument("pulse width T must be positive");
  if (!(t >= 0.0)) throw std::invalid_argument("time must be non-negative");
  SquareRabi r;
  r.rabi_frequency = std::sqrt(gamma / width) * std::sqrt(static_cast<double>(n));
  const double angle = r.rabi_frequency * std::min(t, width);
  r.p_stim = std::sin(angle) * std::sin(angle);
  r.p0 = std::cos(angle) * std::cos(angle);
  return r;
}

}  // namespace stimemit
