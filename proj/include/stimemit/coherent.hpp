#pragma once

// Two-level atom driven by a continuous-mode coherent pulse |alpha>, with the
// field projected onto a reference coherent state |beta>. The projected
// state factorizes: <beta|psi(t)> = (c_e |e> + c_g |g>) <beta|alpha>, where
//
//   dc_g/dt = sqrt(gamma) beta*(t) c_e
//   dc_e/dt = -sqrt(gamma) alpha(t) c_g - (gamma/2) c_e,   (c_e, c_g)(0) = (1, 0).
//
// alpha(t) and beta(t) are amplitude densities (|alpha|^2 is a photon flux).

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "stimemit/ode.hpp"
#include "stimemit/pulses.hpp"

namespace stimemit::coherent {

using pulses::SampledWaveform;

struct CoherentDrive {
  SampledWaveform alpha;
  SampledWaveform beta;
  double gamma = 1.0;

  /// Constant amplitudes on [0, width], sampled on `samples` grid points.
  static CoherentDrive square(Complex alpha_amplitude, Complex beta_amplitude, double width, double gamma,
                              std::size_t samples = 2) {
    if (!(width > 0.0)) throw std::invalid_argument("pulse width must be positive");
    samples = std::max<std::size_t>(samples, 2);
    const double dt = width / static_cast<double>(samples - 1);
    return CoherentDrive{SampledWaveform(0.0, dt, std::vector<Complex>(samples, alpha_amplitude)),
                         SampledWaveform(0.0, dt, std::vector<Complex>(samples, beta_amplitude)), gamma};
  }

  void validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be non-negative");
    if (alpha.size() != beta.size() || alpha.t0() != beta.t0() || alpha.dt() != beta.dt()) {
      throw std::invalid_argument("alpha and beta must share one time grid");
    }
    if (alpha.t0() < 0.0) throw std::invalid_argument("waveforms must start at t >= 0");
  }
};

struct AmplitudePair {
  Complex c_e;
  Complex c_g;
  Complex overlap_log;  // log <beta|alpha>

  double overlap_magnitude() const { return std::exp(overlap_log.real()); }
  /// |<beta, e|psi(t)>|^2
  double p_e() const { return std::norm(c_e) * std::exp(2.0 * overlap_log.real()); }
  /// |<beta, g|psi(t)>|^2
  double p_g() const { return std::norm(c_g) * std::exp(2.0 * overlap_log.real()); }
};

/// log <beta|alpha> = int beta* alpha - int |alpha|^2 / 2 - int |beta|^2 / 2
/// by the trapezoid rule on the shared grid.
inline Complex coherent_overlap_log(const SampledWaveform& alpha, const SampledWaveform& beta) {
  if (alpha.size() != beta.size() || alpha.t0() != beta.t0() || alpha.dt() != beta.dt()) {
    throw std::invalid_argument("alpha and beta must share one time grid");
  }
  Complex acc{0.0, 0.0};
  const auto& a = alpha.values();
  const auto& b = beta.values();
  auto integrand = [&](std::size_t i) {
    return std::conj(b[i]) * a[i] - 0.5 * std::norm(a[i]) - 0.5 * std::norm(b[i]);
  };
  for (std::size_t i = 0; i + 1 < a.size(); ++i) acc += 0.5 * (integrand(i) + integrand(i + 1));
  return acc * alpha.dt();
}

/// (c_e, c_g) at each grid time, integrated with Dormand-Prince 5(4).
inline std::vector<AmplitudePair> evolve_two_level(const CoherentDrive& drive, std::span<const double> grid,
                                                   const ode::Controls& controls = {1e-10, 1e-14,
                                                                                    std::size_t{1} << 20}) {
  drive.validate();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) throw std::invalid_argument("grid times must be finite and >= 0");
    if (i > 0 && grid[i] < grid[i - 1]) throw std::invalid_argument("grid times must be ascending");
  }
  const Complex overlap = coherent_overlap_log(drive.alpha, drive.beta);
  const double root_gamma = std::sqrt(drive.gamma);
  const double half_gamma = 0.5 * drive.gamma;

  std::vector<Complex> state{Complex{1.0, 0.0}, Complex{0.0, 0.0}};
  std::vector<AmplitudePair> out;
  out.reserve(grid.size());
  if (grid.empty()) return out;

  std::vector<double> edges;
  for (std::size_t i = 0; i < drive.alpha.size(); ++i) {
    double t = drive.alpha.time(i);
    if (t > 0.0 && t < grid.back()) edges.push_back(t);
  }
  edges.insert(edges.end(), grid.begin(), grid.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  ode::Stats stats;
  double h = 0.0;
  double t = 0.0;
  std::size_t next_output = 0;
  auto emit = [&] {
    while (next_output < grid.size() && grid[next_output] <= t) {
      out.push_back(AmplitudePair{state[0], state[1], overlap});
      ++next_output;
    }
  };
  emit();
  for (double edge : edges) {
    if (edge <= t) continue;
    const double lo = t;
    const double hi = edge;
    auto rhs = [&](double s, const std::vector<Complex>& c, std::vector<Complex>& dc) {
      const Complex a = drive.alpha.evaluate_in(s, lo, hi);
      const Complex b = drive.beta.evaluate_in(s, lo, hi);
      dc[0] = -root_gamma * a * c[1] - half_gamma * c[0];
      dc[1] = root_gamma * std::conj(b) * c[0];
    };
    ode::integrate_dopri5(rhs, state, lo, hi, h, controls, stats);
    t = hi;
    emit();
  }
  return out;
}

}  // namespace stimemit::coherent
