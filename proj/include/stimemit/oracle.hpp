#pragma once

// Independent reference evaluators for tests and acceptance runs. Nothing in
// the main computation path calls into this header.

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stimemit/extended_real.hpp"
#include "stimemit/pulses.hpp"
#include "stimemit/scatter.hpp"

namespace stimemit::oracle {

/// Composite Simpson weights for m subintervals of width h. Odd m uses the
/// 3/8 rule on the first three subintervals; m = 1 falls back to trapezoid.
inline std::vector<double> simpson_weights(std::size_t m, double h) {
  std::vector<double> w(m + 1, 0.0);
  if (m == 0) return w;
  if (m == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  std::size_t start = 0;
  if (m % 2 == 1) {
    const double c = 3.0 * h / 8.0;
    w[0] += c;
    w[1] += 3.0 * c;
    w[2] += 3.0 * c;
    w[3] += c;
    start = 3;
  }
  for (std::size_t i = start; i + 2 <= m; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  return w;
}

namespace detail {

// Sum over ordered node indices k_1 <= ... <= k_depth of the nested Simpson
// weights times the slot weights, recursing one slot at a time.
inline double nested_sum(std::size_t slot, std::size_t depth, std::size_t from,
                         const std::vector<std::vector<double>>& tail_weights,
                         const std::vector<double>& odd_weight, const std::vector<double>& even_weight) {
  const auto& w = tail_weights[from];
  const auto& f = (slot % 2 == 1) ? odd_weight : even_weight;
  double acc = 0.0;
  for (std::size_t k = from; k < odd_weight.size(); ++k) {
    double inner = slot == depth ? 1.0 : nested_sum(slot + 1, depth, k, tail_weights, odd_weight, even_weight);
    acc += w[k - from] * f[k] * inner;
  }
  return acc;
}

}  // namespace detail

/// F_p(t) for p <= 2 by direct nested Simpson quadrature over the ordered
/// simplex on a uniform grid of `grid_points` nodes. Cost grows as
/// grid_points^(2p+1).
inline double fp_bruteforce(std::size_t p, double t, const pulses::PulseShape& pulse, double gamma,
                            std::size_t grid_points) {
  if (p > 2) throw std::invalid_argument("brute-force oracle supports p <= 2");
  if (grid_points < 2) throw std::invalid_argument("need at least 2 grid points");
  if (!(t > 0.0)) return 0.0;
  if (!pulse.is_real()) throw std::invalid_argument("oracle requires a real-valued pulse");

  // The integrand vanishes past a square pulse, and its right edge must be
  // sampled from the inside.
  const double end = pulse.kind() == pulses::PulseKind::Square ? std::min(t, pulse.width()) : t;
  const std::size_t n = grid_points;
  const double h = end / static_cast<double>(n - 1);
  std::vector<double> odd(n), even(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = h * static_cast<double>(k);
    const double xi = pulse.kind() == pulses::PulseKind::Sampled ? pulse.evaluate(s).real()
                                                                 : pulse.evaluate_in(s, 0.0, end).real();
    odd[k] = xi * std::exp(-0.5 * gamma * s);
    even[k] = xi * std::exp(0.5 * gamma * s);
  }
  const std::size_t depth = 2 * p + 1;
  std::vector<std::vector<double>> tail(n);
  for (std::size_t a = 0; a < n; ++a) {
    if (depth == 1 && a > 0) break;
    tail[a] = simpson_weights(n - 1 - a, h);
  }
  return detail::nested_sum(1, depth, 0, tail, odd, even);
}

/// Two-photon projection by fixed-grid nested Simpson over the two
/// triangles s2 <= s1 and s2 >= s1 (the kernel is smooth inside each).
inline double projection_bruteforce(double tau_prime, double gamma, std::size_t grid_points) {
  if (grid_points < 100) throw std::invalid_argument("need at least 100 grid points");
  if (!(tau_prime > 0.0)) throw std::invalid_argument("tau' must be positive");
  const scatter::TwoPhotonKernel kernel(gamma);
  // Slowest decay of the integrand per variable is 1/(2tau') + gamma/2.
  const double edge = 40.0 / (1.0 / (2.0 * tau_prime) + 0.5 * gamma);
  const std::size_t n = grid_points;
  const double h = edge / static_cast<double>(n - 1);
  auto f = [&](std::size_t i, std::size_t k) {
    const double s1 = h * static_cast<double>(i);
    const double s2 = h * static_cast<double>(k);
    return scatter::fock2_amplitude(s1, s2, tau_prime) * (kernel(s1, s2) + kernel(s2, s1));
  };
  const std::vector<double> outer = simpson_weights(n - 1, h);
  double overlap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double lower = 0.0;
    const auto wl = simpson_weights(i, h);
    for (std::size_t k = 0; k <= i; ++k) lower += wl[k] * f(i, k);
    double upper = 0.0;
    const auto wu = simpson_weights(n - 1 - i, h);
    for (std::size_t k = i; k < n; ++k) upper += wu[k - i] * f(i, k);
    overlap += outer[i] * (lower + upper);
  }
  return overlap * overlap;
}

/// Exact ordered integral for the exponential mode at finite t, by carrying
/// each chain member as a sum of polynomial-times-exponential terms and
/// integrating those in closed form. Returns F_p(t) (odd) or G_p(t) (even).
/// The intermediate growth of e^{+gamma s/2} cancels, hence the wide default.
inline ExtendedReal exponential_chain_exact(std::size_t order, double t, double tau, double gamma,
                                            unsigned bits = 1024) {
  // Key (a, b): a emission slots and b absorption slots in the exponent,
  // rate a * r_odd + b * r_even.
  using Key = std::pair<long, long>;
  using Poly = std::vector<ExtendedReal>;
  const ExtendedReal inv_tau = ExtendedReal(1.0, bits) / ExtendedReal(tau, bits);
  const ExtendedReal g(gamma, bits);
  const ExtendedReal r_odd = -ldexp(inv_tau + g, -1);
  const ExtendedReal r_even = -ldexp(inv_tau - g, -1);
  const ExtendedReal amp = sqrt(inv_tau);
  auto rate = [&](const Key& k) {
    return r_odd * ExtendedReal(static_cast<double>(k.first), bits) +
           r_even * ExtendedReal(static_cast<double>(k.second), bits);
  };

  std::map<Key, Poly> u{{Key{0, 0}, Poly{ExtendedReal(1.0, bits)}}};
  for (std::size_t slot = 1; slot <= order; ++slot) {
    std::map<Key, Poly> next;
    auto add = [&](const Key& key, std::size_t degree, const ExtendedReal& c) {
      auto& poly = next[key];
      while (poly.size() <= degree) poly.emplace_back(bits);
      poly[degree] += c;
    };
    for (const auto& [key, poly] : u) {
      Key k2 = slot % 2 == 1 ? Key{key.first + 1, key.second} : Key{key.first, key.second + 1};
      ExtendedReal r = rate(k2);
      for (std::size_t deg = 0; deg < poly.size(); ++deg) {
        ExtendedReal c = poly[deg] * amp;
        if (c.is_zero()) continue;
        if (r.is_zero()) {
          add(k2, deg + 1, c / static_cast<unsigned long>(deg + 1));
          continue;
        }
        // int_0^t s^k e^{rs} ds = e^{rt} sum_i (-1)^i k!/(k-i)! t^{k-i}/r^{i+1} - (-1)^k k!/r^{k+1}
        ExtendedReal falling(1.0, bits);
        ExtendedReal r_pow = r;
        for (std::size_t i = 0; i <= deg; ++i) {
          ExtendedReal term = c * falling / r_pow;
          add(k2, deg - i, i % 2 == 0 ? term : -term);
          falling *= static_cast<unsigned long>(deg - i);
          r_pow *= r;
        }
        ExtendedReal constant = c * factorial(deg, bits) / pow(r, static_cast<long>(deg) + 1);
        add(Key{0, 0}, 0, deg % 2 == 0 ? -constant : constant);
      }
    }
    u = std::move(next);
  }

  const ExtendedReal time(t, bits);
  ExtendedReal total(bits);
  for (const auto& [key, poly] : u) {
    ExtendedReal value(bits);
    for (std::size_t deg = poly.size(); deg-- > 0;) value = value * time + poly[deg];
    total += value * exp(rate(key) * time);
  }
  return total;
}

}  // namespace stimemit::oracle
