#pragma once

// Normalized temporal modes xi(t) of the incident drive.

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace stimemit {

using Complex = std::complex<double>;

namespace pulses {

/// Default numeric support of an exponential mode, in units of tau.
inline constexpr double kExponentialSupport = 40.0;

/// Tolerance on the unit-norm invariant of a sampled pulse.
inline constexpr double kNormTolerance = 1e-10;

/// Complex samples on a uniform grid t0, t0 + dt, ..., linearly interpolated
/// inside the grid and zero outside it.
class SampledWaveform {
 public:
  SampledWaveform() = default;

  SampledWaveform(double t0, double dt, std::vector<Complex> values)
      : t0_(t0), dt_(dt), values_(std::move(values)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw std::invalid_argument("sample spacing must be positive");
    if (!std::isfinite(t0_)) throw std::invalid_argument("grid origin must be finite");
    if (values_.size() < 2) throw std::invalid_argument("at least 2 grid points required");
  }

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t size() const { return values_.size(); }
  double t_last() const { return t0_ + dt_ * static_cast<double>(values_.size() - 1); }
  double time(std::size_t i) const { return t0_ + dt_ * static_cast<double>(i); }
  const std::vector<Complex>& values() const { return values_; }

  Complex evaluate(double t) const {
    if (t < t0_ || t > t_last()) return {0.0, 0.0};
    return on_interval(t, interval_of(t));
  }

  /// Linear piece covering the midpoint of [lo, hi], evaluated at t (may
  /// extrapolate). Integrators use this so a step never straddles a kink.
  Complex evaluate_in(double t, double lo, double hi) const {
    double mid = 0.5 * (lo + hi);
    if (mid < t0_ || mid > t_last()) return {0.0, 0.0};
    return on_interval(t, interval_of(mid));
  }

  /// Trapezoid rule for integral |f|^2.
  double norm_squared() const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
      acc += 0.5 * (std::norm(values_[i]) + std::norm(values_[i + 1]));
    }
    return acc * dt_;
  }

  /// Exact integral of the interpolant over [t0, min(t, t_last)].
  Complex integral_to(double t) const {
    Complex acc{0.0, 0.0};
    if (t <= t0_) return acc;
    double end = std::min(t, t_last());
    std::size_t last = interval_of(end);
    for (std::size_t i = 0; i < last; ++i) acc += 0.5 * (values_[i] + values_[i + 1]) * dt_;
    double a = time(last);
    acc += 0.5 * (values_[last] + on_interval(end, last)) * (end - a);
    return acc;
  }

  /// Trapezoid estimate of integral |f| over [t0, min(t, t_last)].
  double abs_integral_to(double t) const {
    double acc = 0.0;
    if (t <= t0_) return acc;
    double end = std::min(t, t_last());
    std::size_t last = interval_of(end);
    for (std::size_t i = 0; i < last; ++i) acc += 0.5 * (std::abs(values_[i]) + std::abs(values_[i + 1])) * dt_;
    acc += 0.5 * (std::abs(values_[last]) + std::abs(on_interval(end, last))) * (end - time(last));
    return acc;
  }

  SampledWaveform scaled(double factor) const {
    std::vector<Complex> v(values_);
    for (auto& x : v) x *= factor;
    return SampledWaveform(t0_, dt_, std::move(v));
  }

 private:
  std::size_t interval_of(double t) const {
    double pos = (t - t0_) / dt_;
    auto i = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
    return std::min(i, values_.size() - 2);
  }

  Complex on_interval(double t, std::size_t i) const {
    double frac = (t - time(i)) / dt_;
    return values_[i] + (values_[i + 1] - values_[i]) * frac;
  }

  double t0_ = 0.0;
  double dt_ = 1.0;
  std::vector<Complex> values_;
};

struct Exponential {
  double tau;
};

struct Square {
  double width;
};

struct Sampled {
  SampledWaveform waveform;
};

enum class PulseKind { Exponential, Square, Sampled };

/// A temporal mode with unit norm and support on t >= 0. Immutable.
class PulseShape {
 public:
  /// xi(t) = exp(-t / 2 tau) / sqrt(tau) for t >= 0.
  static PulseShape exponential(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("pulse length tau must be positive");
    return PulseShape(Exponential{tau});
  }

  /// xi(t) = 1 / sqrt(T) on [0, T).
  static PulseShape square(double width) {
    if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("pulse width T must be positive");
    return PulseShape(Square{width});
  }

  /// Wraps samples that are already normalized; see normalize() otherwise.
  static PulseShape sampled(SampledWaveform waveform) {
    if (waveform.t0() < 0.0) throw std::invalid_argument("sampled pulse must start at t >= 0");
    double norm = waveform.norm_squared();
    if (std::fabs(norm - 1.0) > kNormTolerance) {
      throw std::invalid_argument("sampled pulse is not normalized (norm " + std::to_string(norm) + ")");
    }
    return PulseShape(Sampled{std::move(waveform)});
  }

  PulseKind kind() const { return static_cast<PulseKind>(shape_.index()); }

  double tau() const { return std::get<Exponential>(shape_).tau; }
  double width() const { return std::get<Square>(shape_).width; }
  const SampledWaveform& waveform() const { return std::get<Sampled>(shape_).waveform; }

  Complex evaluate(double t) const {
    return std::visit(
        [t](const auto& s) -> Complex {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Exponential>) {
            if (t < 0.0) return {0.0, 0.0};
            return {std::exp(-t / (2.0 * s.tau)) / std::sqrt(s.tau), 0.0};
          } else if constexpr (std::is_same_v<S, Square>) {
            if (t < 0.0 || t >= s.width) return {0.0, 0.0};
            return {1.0 / std::sqrt(s.width), 0.0};
          } else {
            return s.waveform.evaluate(t);
          }
        },
        shape_);
  }

  /// Smooth piece of xi that covers the interval [lo, hi], evaluated at t.
  /// [lo, hi] must not contain an interior breakpoint.
  Complex evaluate_in(double t, double lo, double hi) const {
    double mid = 0.5 * (lo + hi);
    return std::visit(
        [&](const auto& s) -> Complex {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Exponential>) {
            if (mid < 0.0) return {0.0, 0.0};
            return {std::exp(-t / (2.0 * s.tau)) / std::sqrt(s.tau), 0.0};
          } else if constexpr (std::is_same_v<S, Square>) {
            if (mid < 0.0 || mid >= s.width) return {0.0, 0.0};
            return {1.0 / std::sqrt(s.width), 0.0};
          } else {
            return s.waveform.evaluate_in(t, lo, hi);
          }
        },
        shape_);
  }

  /// Jumps or kinks of xi strictly inside (lo, hi), ascending.
  std::vector<double> breakpoints(double lo, double hi) const {
    std::vector<double> out;
    if (const auto* sq = std::get_if<Square>(&shape_)) {
      if (sq->width > lo && sq->width < hi) out.push_back(sq->width);
    } else if (const auto* sm = std::get_if<Sampled>(&shape_)) {
      const auto& w = sm->waveform;
      for (std::size_t i = 0; i < w.size(); ++i) {
        double t = w.time(i);
        if (t > lo && t < hi) out.push_back(t);
      }
    }
    return out;
  }

  /// integral |xi|^2: analytic for Exponential and Square, trapezoid for Sampled.
  double norm_squared() const {
    if (const auto* sm = std::get_if<Sampled>(&shape_)) return sm->waveform.norm_squared();
    return 1.0;
  }

  /// End of the numeric support: 40 tau (configurable) for Exponential.
  double support_end(double exponential_lengths = kExponentialSupport) const {
    return std::visit(
        [&](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Exponential>) {
            return exponential_lengths * s.tau;
          } else if constexpr (std::is_same_v<S, Square>) {
            return s.width;
          } else {
            return s.waveform.t_last();
          }
        },
        shape_);
  }

  bool is_real() const {
    if (const auto* sm = std::get_if<Sampled>(&shape_)) {
      return std::all_of(sm->waveform.values().begin(), sm->waveform.values().end(),
                         [](const Complex& c) { return c.imag() == 0.0; });
    }
    return true;
  }

  /// integral_0^t xi(s) ds.
  Complex cumulative_amplitude(double t) const {
    if (t <= 0.0) return {0.0, 0.0};
    return std::visit(
        [t](const auto& s) -> Complex {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Exponential>) {
            return {-2.0 * std::sqrt(s.tau) * std::expm1(-t / (2.0 * s.tau)), 0.0};
          } else if constexpr (std::is_same_v<S, Square>) {
            return {std::min(t, s.width) / std::sqrt(s.width), 0.0};
          } else {
            return s.waveform.integral_to(t);
          }
        },
        shape_);
  }

  /// integral_0^t |xi(s)| ds.
  double abs_integral(double t) const {
    if (const auto* sm = std::get_if<Sampled>(&shape_)) return sm->waveform.abs_integral_to(t);
    return std::abs(cumulative_amplitude(t));
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&os](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Exponential>) {
            os << "exp(tau=" << s.tau << ")";
          } else if constexpr (std::is_same_v<S, Square>) {
            os << "square(T=" << s.width << ")";
          } else {
            os << "sampled(t0=" << s.waveform.t0() << ",dt=" << s.waveform.dt() << ",count=" << s.waveform.size()
               << ")";
          }
        },
        shape_);
    return os.str();
  }

 private:
  using Variant = std::variant<Exponential, Square, Sampled>;
  explicit PulseShape(Variant v) : shape_(std::move(v)) {}

  Variant shape_;
};

/// Rescales samples to unit norm (trapezoid rule).
inline PulseShape normalize(const SampledWaveform& samples) {
  double norm = samples.norm_squared();
  if (!(norm > 0.0)) throw std::invalid_argument("degenerate pulse");
  SampledWaveform scaled = samples.scaled(1.0 / std::sqrt(norm));
  // One rounding pass can leave the norm a few ulps away from 1.
  double residual = scaled.norm_squared();
  if (std::fabs(residual - 1.0) > kNormTolerance) scaled = scaled.scaled(1.0 / std::sqrt(residual));
  return PulseShape::sampled(std::move(scaled));
}

/// Reads a two-column `time amplitude` table and normalizes it.
///
/// Blank lines and lines starting with '#' are skipped. Times must be
/// uniformly spaced (relative tolerance 1e-6 on the spacing).
inline PulseShape read_pulse_table(std::istream& in) {
  std::vector<double> times;
  std::vector<Complex> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    double t = 0.0;
    double a = 0.0;
    if (!(row >> t >> a)) {
      throw std::invalid_argument("pulse file line " + std::to_string(line_no) + ": expected `time amplitude`");
    }
    times.push_back(t);
    values.emplace_back(a, 0.0);
  }
  if (times.size() < 2) throw std::invalid_argument("pulse file needs at least 2 samples");
  double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(dt > 0.0)) throw std::invalid_argument("pulse file times must be strictly increasing");
  for (std::size_t i = 1; i < times.size(); ++i) {
    double step = times[i] - times[i - 1];
    if (!(step > 0.0) || std::fabs(step - dt) > 1e-6 * dt) {
      throw std::invalid_argument("pulse file times must be uniformly spaced");
    }
  }
  return normalize(SampledWaveform(times.front(), dt, std::move(values)));
}

}  // namespace pulses
}  // namespace stimemit
