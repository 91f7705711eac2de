#pragma once

// Single-photon stimulated scattering: projection of the exact two-photon
// output state (drive tau = 1/(3 gamma)) onto a two-photon exponential Fock
// mode of width tau', plus the short-pulse residual envelope.
//
// Two-photon amplitudes use the exchange convention <a|b> =
// int int a*(s1,s2) (b(s1,s2) + b(s2,s1)), under which both kernels below
// have unit norm.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

#include "stimemit/errors.hpp"

namespace stimemit::scatter {

/// Outgoing two-photon amplitude for a single photon with tau = 1/(3 gamma)
/// stimulating an excited atom.
class TwoPhotonKernel {
 public:
  explicit TwoPhotonKernel(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be positive");
  }

  double gamma() const { return gamma_; }
  double tau() const { return 1.0 / (3.0 * gamma_); }

  double operator()(double tau1, double tau2) const {
    if (tau1 < 0.0 || tau2 < 0.0) return 0.0;
    const double amp = gamma_ * std::sqrt(3.0);
    if (tau2 <= tau1) return amp * std::exp(-(3.0 * gamma_ * tau1 + gamma_ * tau2) / 2.0);
    return amp * std::exp(-(3.0 * gamma_ * tau2 + gamma_ * tau1) / 2.0);
  }

 private:
  double gamma_;
};

inline double psi_scatter(double tau1, double tau2, double gamma) { return TwoPhotonKernel(gamma)(tau1, tau2); }

/// e^{-(s1+s2)/2tau'} / (tau' sqrt 2) on s1, s2 >= 0.
inline double fock2_amplitude(double s1, double s2, double tau_prime) {
  if (!(tau_prime > 0.0)) throw std::invalid_argument("tau' must be positive");
  if (s1 < 0.0 || s2 < 0.0) return 0.0;
  return std::exp(-(s1 + s2) / (2.0 * tau_prime)) / (tau_prime * std::sqrt(2.0));
}

enum class ProjectionMethod { Quadrature, ClosedForm };

/// Quadrature domain edge, in units of the slowest per-variable decay length.
inline constexpr double kProjectionDomain = 60.0;

/// |<psi_Fock(tau')|Psi_scatter>|^2.
inline double projection(double tau_prime, double gamma, ProjectionMethod method = ProjectionMethod::ClosedForm) {
  if (!(tau_prime > 0.0)) throw std::invalid_argument("tau' must be positive");
  TwoPhotonKernel kernel(gamma);
  if (method == ProjectionMethod::ClosedForm) {
    // Both branches of the kernel contribute equally; each reduces to
    // c * int_0^inf e^{-A s1} int_0^{s1} e^{-B s2} = c / B (1/A - 1/(A+B)).
    const double a = 1.0 / (2.0 * tau_prime) + 1.5 * gamma;
    const double b = 1.0 / (2.0 * tau_prime) + 0.5 * gamma;
    const double c = gamma * std::sqrt(3.0) / (tau_prime * std::sqrt(2.0));
    const double half_overlap = 2.0 * c / b * (1.0 / a - 1.0 / (a + b));
    const double overlap = 2.0 * half_overlap;
    return overlap * overlap;
  }

  using boost::math::quadrature::gauss_kronrod;
  const double edge = kProjectionDomain / (1.0 / (2.0 * tau_prime) + 0.5 * gamma);
  constexpr double kTolerance = 1e-8;
  // Each piece is smooth once split at the diagonal; a shallow depth stops
  // runaway bisection where a relative tolerance cannot be met.
  constexpr unsigned kMaxDepth = 8;
  double worst_inner = 0.0;
  auto integrand = [&](double s1, double s2) {
    return fock2_amplitude(s1, s2, tau_prime) * (kernel(s1, s2) + kernel(s2, s1));
  };
  // Split the inner integral at the diagonal, where the kernel has a kink.
  auto outer = [&](double s1) {
    double e1 = 0.0;
    double e2 = 0.0;
    double below = gauss_kronrod<double, 61>::integrate([&](double s2) { return integrand(s1, s2); }, 0.0, s1,
                                                        kMaxDepth, 1e-12, &e1);
    double above = gauss_kronrod<double, 61>::integrate([&](double s2) { return integrand(s1, s2); }, s1, edge,
                                                        kMaxDepth, 1e-12, &e2);
    worst_inner = std::max(worst_inner, e1 + e2);
    return below + above;
  };
  double err = 0.0;
  const double overlap = gauss_kronrod<double, 61>::integrate(outer, 0.0, edge, kMaxDepth, 1e-12, &err);
  const double estimate = err + worst_inner * edge;
  if (!(estimate <= kTolerance)) {
    throw NumericError("projection quadrature missed tolerance (estimate " + std::to_string(estimate) + ")",
                       estimate);
  }
  return overlap * overlap;
}

/// sqrt(gamma) e^{-gamma s/2}: the spontaneous-decay photon left behind when
/// a short pulse does not stimulate emission.
inline double residual_envelope(double s, double gamma) {
  if (s < 0.0) return 0.0;
  return std::sqrt(gamma) * std::exp(-gamma * s / 2.0);
}

}  // namespace stimemit::scatter
