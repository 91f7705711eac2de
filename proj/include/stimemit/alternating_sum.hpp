#pragma once

// Cancellation-aware summation of signed extended-precision terms.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stimemit/compensated_sum.hpp"
#include "stimemit/errors.hpp"
#include "stimemit/extended_real.hpp"

namespace stimemit {

struct SumOptions {
  unsigned start_bits = ExtendedReal::kDefaultBits;
  unsigned max_bits = 8192;
  /// Relative accuracy the sum must retain after cancellation; 2^-64 gives
  /// the guard |sum| >= max_term * 2^-(bits - 64).
  double target_rel_tol = 0x1p-64;
  /// Sums whose cancellation bound falls below this absolute level are
  /// accepted even when the guard fails (0 disables). This resolves exact
  /// zeros, which no precision can make pass a relative guard.
  double absolute_floor = 0.0;
};

struct SumResult {
  ExtendedReal value;
  ExtendedReal max_term;
  unsigned precision_bits = 0;
  unsigned escalations = 0;
};

/// Builds the signed terms at a requested width.
using TermGenerator = std::function<std::vector<ExtendedReal>(unsigned bits)>;

namespace detail {

inline unsigned guard_bits(double target_rel_tol) {
  if (!(target_rel_tol > 0.0) || !(target_rel_tol < 1.0)) throw std::invalid_argument("target_rel_tol must be in (0,1)");
  return static_cast<unsigned>(std::ceil(-std::log2(target_rel_tol)));
}

}  // namespace detail

/// One compensated pass at the terms' own width; no escalation.
inline SumResult sum_terms(std::span<const ExtendedReal> terms, unsigned bits) {
  SumResult r{ExtendedReal(bits), ExtendedReal(bits), bits, 0};
  CompensatedSum<ExtendedReal> acc{ExtendedReal(bits)};
  for (const auto& term : terms) {
    if (!term.is_finite()) throw NumericError("non-finite series term", 0.0);
    acc += term;
    ExtendedReal mag = abs(term);
    if (mag > r.max_term) r.max_term = mag;
  }
  r.value = acc.value();
  return r;
}

/// True when |value| >= max_term * 2^-(bits - guard).
inline bool cancellation_guard_ok(const SumResult& r, unsigned guard) {
  if (r.max_term.is_zero()) return true;
  long shift = static_cast<long>(guard) - static_cast<long>(r.precision_bits);
  ExtendedReal threshold = ldexp(r.max_term, shift);
  return abs(r.value) >= threshold;
}

/// Sums generator(bits) starting at options.start_bits and doubles the
/// width, regenerating every term, until the cancellation guard passes.
inline SumResult sum_alternating(const TermGenerator& generator, const SumOptions& options = {}) {
  const unsigned guard = detail::guard_bits(options.target_rel_tol);
  unsigned bits = options.start_bits;
  unsigned escalations = 0;
  for (;;) {
    std::vector<ExtendedReal> terms = generator(bits);
    SumResult r = sum_terms(terms, bits);
    r.escalations = escalations;
    if (cancellation_guard_ok(r, guard)) return r;
    if (options.absolute_floor > 0.0) {
      double bound_log2 = r.max_term.log2_abs() - static_cast<double>(bits) + static_cast<double>(guard);
      if (bound_log2 < std::log2(options.absolute_floor)) return r;
    }
    if (bits >= options.max_bits) {
      throw NumericError("cancellation beyond precision ceiling", static_cast<double>(bits));
    }
    bits = std::min(options.max_bits, bits * 2);
    ++escalations;
  }
}

/// Fixed-list form: the terms cannot be regenerated, so a failing guard is
/// reported as an error rather than escalated.
inline SumResult sum_alternating(std::span<const ExtendedReal> terms, double target_rel_tol = 0x1p-64) {
  unsigned bits = ExtendedReal::kDefaultBits;
  for (const auto& t : terms) bits = std::max(bits, t.bits());
  SumResult r = sum_terms(terms, bits);
  if (!cancellation_guard_ok(r, detail::guard_bits(target_rel_tol))) {
    throw NumericError("cancellation exceeds the terms' precision", static_cast<double>(bits));
  }
  return r;
}

}  // namespace stimemit
