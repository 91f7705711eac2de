#pragma once

// Adaptive explicit integrators for small linear systems.
//
// Both steppers work on std::vector<T> with T = double or std::complex<double>
// and call the right-hand side as rhs(t, y, dydt). Each integrate_* call
// advances y from t0 to exactly t1; `h` carries the step suggestion between
// calls so consecutive output intervals do not restart from a tiny step.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <vector>

#include "stimemit/errors.hpp"

namespace stimemit::ode {

struct Controls {
  double rel_tol = 1e-10;
  double abs_tol = 1e-20;
  std::size_t max_steps = std::size_t{1} << 20;
};

struct Stats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double max_error_ratio = 0.0;  // largest accepted error / tolerance
};

namespace detail {

inline double magnitude(double v) { return std::fabs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <typename T>
double error_ratio(const std::vector<T>& err, const std::vector<T>& y0, const std::vector<T>& y1,
                   const Controls& c) {
  double worst = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    double scale = c.abs_tol + c.rel_tol * std::max(magnitude(y0[i]), magnitude(y1[i]));
    worst = std::max(worst, magnitude(err[i]) / scale);
  }
  return worst;
}

inline double next_step(double h, double ratio) {
  double factor = ratio > 0.0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
  return h * std::clamp(factor, 0.2, 5.0);
}

[[noreturn]] inline void fail(const char* what, double t, double ratio) {
  std::ostringstream os;
  os << what << " at t=" << t << " (error/tolerance " << ratio << ")";
  throw NumericError(os.str(), ratio);
}

}  // namespace detail

/// Classical RK4 with step doubling: each step is taken once with h and
/// twice with h/2, the difference estimates the local error, and the
/// Richardson-extrapolated value is kept.
template <typename T, typename Rhs>
void integrate_step_doubling(Rhs&& rhs, std::vector<T>& y, double t0, double t1, double& h, const Controls& c,
                             Stats& stats) {
  const std::size_t n = y.size();
  if (t1 <= t0) return;
  std::vector<T> k1(n), k2(n), k3(n), k4(n), tmp(n), full(n), half(n), dbl(n), err(n), f0(n);

  auto rk4 = [&](double t, const std::vector<T>& y0, const std::vector<T>& d0, double step, std::vector<T>& out) {
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y0[i] + (0.5 * step) * d0[i];
    rhs(t + 0.5 * step, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y0[i] + (0.5 * step) * k2[i];
    rhs(t + 0.5 * step, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y0[i] + step * k3[i];
    rhs(t + step, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) out[i] = y0[i] + (step / 6.0) * (d0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  };

  const double span = t1 - t0;
  if (!(h > 0.0)) h = span * 1e-3;
  double t = t0;
  while (t < t1) {
    if (stats.steps >= c.max_steps) detail::fail("step limit reached", t, stats.max_error_ratio);
    double step = std::min(h, t1 - t);
    bool last = step >= t1 - t;
    // A tiny final step just closes a rounding-level gap between edges.
    if (!last && step < 1e-14 * std::max(span, std::fabs(t))) {
      detail::fail("step size underflow", t, stats.max_error_ratio);
    }

    rhs(t, y, f0);
    rk4(t, y, f0, step, full);
    rk4(t, y, f0, 0.5 * step, half);
    rhs(t + 0.5 * step, half, k1);
    rk4(t + 0.5 * step, half, k1, 0.5 * step, dbl);
    for (std::size_t i = 0; i < n; ++i) err[i] = (dbl[i] - full[i]) / 15.0;

    double ratio = detail::error_ratio(err, y, dbl, c);
    if (ratio <= 1.0) {
      for (std::size_t i = 0; i < n; ++i) y[i] = dbl[i] + err[i];
      t = last ? t1 : t + step;
      ++stats.steps;
      stats.max_error_ratio = std::max(stats.max_error_ratio, ratio);
      double proposed = detail::next_step(step, ratio);
      // Keep the suggestion from the last full step, not a truncated one.
      if (!last || proposed > h) h = proposed;
    } else {
      ++stats.rejected;
      h = detail::next_step(step, ratio);
    }
  }
}

/// Dormand-Prince 5(4) with the 4th-order embedded error estimate.
template <typename T, typename Rhs>
void integrate_dopri5(Rhs&& rhs, std::vector<T>& y, double t0, double t1, double& h, const Controls& c,
                      Stats& stats) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t n = y.size();
  if (t1 <= t0) return;
  std::vector<T> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n), err(n);

  const double span = t1 - t0;
  if (!(h > 0.0)) h = span * 1e-3;
  double t = t0;
  rhs(t, y, k1);
  while (t < t1) {
    if (stats.steps >= c.max_steps) detail::fail("step limit reached", t, stats.max_error_ratio);
    double step = std::min(h, t1 - t);
    bool last = step >= t1 - t;
    // A tiny final step just closes a rounding-level gap between edges.
    if (!last && step < 1e-14 * std::max(span, std::fabs(t))) {
      detail::fail("step size underflow", t, stats.max_error_ratio);
    }

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (a21 * k1[i]);
    rhs(t + c2 * step, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * step, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * step, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      tmp[i] = y[i] + step * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    }
    rhs(t + c5 * step, tmp, k5);
    for (std::size_t i = 0; i < n; ++i) {
      tmp[i] = y[i] + step * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    }
    rhs(t + step, tmp, k6);
    for (std::size_t i = 0; i < n; ++i) {
      ynew[i] = y[i] + step * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    }
    rhs(t + step, ynew, k7);
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }

    double ratio = detail::error_ratio(err, y, ynew, c);
    if (ratio <= 1.0) {
      y.swap(ynew);
      k1.swap(k7);
      t = last ? t1 : t + step;
      ++stats.steps;
      stats.max_error_ratio = std::max(stats.max_error_ratio, ratio);
      double proposed = detail::next_step(step, ratio);
      if (!last || proposed > h) h = proposed;
    } else {
      ++stats.rejected;
      h = detail::next_step(step, ratio);
    }
  }
}

}  // namespace stimemit::ode
