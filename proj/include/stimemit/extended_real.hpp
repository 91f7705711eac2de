#pragma once

// Radix-2 floating value with a per-value mantissa width, backed by MPFR.
//
// Binary operations produce a result at the wider of the two operand
// widths; every operation is correctly rounded (round-to-nearest).

#include <mpfr.h>

#include <cmath>
#include <compare>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace stimemit {

class ExtendedReal {
 public:
  static constexpr unsigned kDefaultBits = 256;

  explicit ExtendedReal(unsigned bits = kDefaultBits) {
    mpfr_init2(value_, checked(bits));
    mpfr_set_zero(value_, 1);
  }

  ExtendedReal(double v, unsigned bits) {
    mpfr_init2(value_, checked(bits));
    mpfr_set_d(value_, v, MPFR_RNDN);
  }

  static ExtendedReal from_integer(long v, unsigned bits) {
    ExtendedReal r(bits);
    mpfr_set_si(r.value_, v, MPFR_RNDN);
    return r;
  }

  static ExtendedReal from_string(const std::string& s, unsigned bits) {
    ExtendedReal r(bits);
    if (mpfr_set_str(r.value_, s.c_str(), 10, MPFR_RNDN) != 0) {
      throw std::invalid_argument("not a decimal number: " + s);
    }
    return r;
  }

  static ExtendedReal pi(unsigned bits) {
    ExtendedReal r(bits);
    mpfr_const_pi(r.value_, MPFR_RNDN);
    return r;
  }

  ExtendedReal(const ExtendedReal& other) {
    mpfr_init2(value_, mpfr_get_prec(other.value_));
    mpfr_set(value_, other.value_, MPFR_RNDN);
  }

  ExtendedReal(ExtendedReal&& other) noexcept {
    mpfr_init2(value_, MPFR_PREC_MIN);
    mpfr_swap(value_, other.value_);
  }

  ExtendedReal& operator=(const ExtendedReal& other) {
    if (this != &other) {
      mpfr_set_prec(value_, mpfr_get_prec(other.value_));
      mpfr_set(value_, other.value_, MPFR_RNDN);
    }
    return *this;
  }

  ExtendedReal& operator=(ExtendedReal&& other) noexcept {
    mpfr_swap(value_, other.value_);
    return *this;
  }

  ~ExtendedReal() { mpfr_clear(value_); }

  unsigned bits() const { return static_cast<unsigned>(mpfr_get_prec(value_)); }

  /// Same value rounded to a new width.
  ExtendedReal with_bits(unsigned bits) const {
    ExtendedReal r(bits);
    mpfr_set(r.value_, value_, MPFR_RNDN);
    return r;
  }

  double to_double() const { return mpfr_get_d(value_, MPFR_RNDN); }

  bool is_finite() const { return mpfr_number_p(value_) != 0; }
  bool is_zero() const { return mpfr_zero_p(value_) != 0; }
  bool is_negative() const { return mpfr_sgn(value_) < 0; }

  /// log2|x| as a double; -inf for zero. Safe far outside double's range.
  double log2_abs() const {
    if (is_zero()) return -INFINITY;
    long exp = 0;
    double mant = mpfr_get_d_2exp(&exp, value_, MPFR_RNDN);
    return std::log2(std::fabs(mant)) + static_cast<double>(exp);
  }

  std::string str(int digits = 20) const {
    if (!is_finite()) return is_zero() ? "0" : (mpfr_nan_p(value_) ? "nan" : (is_negative() ? "-inf" : "inf"));
    std::string fmt = "%." + std::to_string(digits) + "Rg";
    char* out = nullptr;
    mpfr_asprintf(&out, fmt.c_str(), value_);
    std::string s(out);
    mpfr_free_str(out);
    return s;
  }

  mpfr_srcptr raw() const { return value_; }
  mpfr_ptr raw() { return value_; }

  ExtendedReal operator-() const {
    ExtendedReal r(bits());
    mpfr_neg(r.value_, value_, MPFR_RNDN);
    return r;
  }

  ExtendedReal& operator+=(const ExtendedReal& o) { return apply(o, mpfr_add); }
  ExtendedReal& operator-=(const ExtendedReal& o) { return apply(o, mpfr_sub); }
  ExtendedReal& operator*=(const ExtendedReal& o) { return apply(o, mpfr_mul); }
  ExtendedReal& operator/=(const ExtendedReal& o) { return apply(o, mpfr_div); }

  ExtendedReal& operator*=(unsigned long k) {
    mpfr_mul_ui(value_, value_, k, MPFR_RNDN);
    return *this;
  }
  ExtendedReal& operator/=(unsigned long k) {
    mpfr_div_ui(value_, value_, k, MPFR_RNDN);
    return *this;
  }
  ExtendedReal& operator*=(double d) {
    mpfr_mul_d(value_, value_, d, MPFR_RNDN);
    return *this;
  }

  friend ExtendedReal operator+(ExtendedReal a, const ExtendedReal& b) { return a += b; }
  friend ExtendedReal operator-(ExtendedReal a, const ExtendedReal& b) { return a -= b; }
  friend ExtendedReal operator*(ExtendedReal a, const ExtendedReal& b) { return a *= b; }
  friend ExtendedReal operator/(ExtendedReal a, const ExtendedReal& b) { return a /= b; }
  friend ExtendedReal operator*(ExtendedReal a, unsigned long k) { return a *= k; }
  friend ExtendedReal operator/(ExtendedReal a, unsigned long k) { return a /= k; }
  friend ExtendedReal operator*(ExtendedReal a, double d) { return a *= d; }

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return mpfr_equal_p(a.value_, b.value_) != 0;
  }
  friend std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
    if (mpfr_unordered_p(a.value_, b.value_)) return std::partial_ordering::unordered;
    int c = mpfr_cmp(a.value_, b.value_);
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
  }
  friend bool operator==(const ExtendedReal& a, double d) { return mpfr_cmp_d(a.value_, d) == 0; }
  friend std::partial_ordering operator<=>(const ExtendedReal& a, double d) {
    if (mpfr_nan_p(a.value_) || std::isnan(d)) return std::partial_ordering::unordered;
    int c = mpfr_cmp_d(a.value_, d);
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
  }

  friend std::ostream& operator<<(std::ostream& os, const ExtendedReal& x) { return os << x.str(); }

#define STIMEMIT_UNARY(name, fn)                    \
  friend ExtendedReal name(const ExtendedReal& x) { \
    ExtendedReal r(x.bits());                       \
    fn(r.value_, x.value_, MPFR_RNDN);              \
    return r;                                       \
  }
  STIMEMIT_UNARY(abs, mpfr_abs)
  STIMEMIT_UNARY(sqrt, mpfr_sqrt)
  STIMEMIT_UNARY(exp, mpfr_exp)
  STIMEMIT_UNARY(expm1, mpfr_expm1)
  STIMEMIT_UNARY(log, mpfr_log)
  STIMEMIT_UNARY(sin, mpfr_sin)
  STIMEMIT_UNARY(cos, mpfr_cos)
#undef STIMEMIT_UNARY

  friend ExtendedReal pow(const ExtendedReal& x, long k) {
    ExtendedReal r(x.bits());
    mpfr_pow_si(r.value_, x.value_, k, MPFR_RNDN);
    return r;
  }

  friend ExtendedReal ldexp(const ExtendedReal& x, long e) {
    ExtendedReal r(x.bits());
    mpfr_mul_2si(r.value_, x.value_, e, MPFR_RNDN);
    return r;
  }

 private:
  static mpfr_prec_t checked(unsigned bits) {
    if (bits < 2 || bits > (1u << 20)) throw std::invalid_argument("precision out of range");
    return static_cast<mpfr_prec_t>(bits);
  }

  template <typename Op>
  ExtendedReal& apply(const ExtendedReal& o, Op op) {
    if (mpfr_get_prec(o.value_) > mpfr_get_prec(value_)) {
      mpfr_prec_round(value_, mpfr_get_prec(o.value_), MPFR_RNDN);
    }
    op(value_, value_, o.value_, MPFR_RNDN);
    return *this;
  }

  mpfr_t value_;
};

/// k! by repeated multiplication.
inline ExtendedReal factorial(unsigned long k, unsigned bits) {
  ExtendedReal r(1.0, bits);
  for (unsigned long i = 2; i <= k; ++i) r *= i;
  return r;
}

/// n!/(n-p)! = n (n-1) ... (n-p+1), never through full factorials.
inline ExtendedReal falling_factorial(unsigned long n, unsigned long p, unsigned bits) {
  ExtendedReal r(1.0, bits);
  for (unsigned long i = 0; i < p; ++i) r *= (n - i);
  return r;
}

}  // namespace stimemit
