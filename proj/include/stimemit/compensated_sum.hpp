#pragma once

#include <cmath>

namespace stimemit {

/// Neumaier's variant of Kahan summation.
///
/// Unlike plain Kahan it stays accurate when an incoming term is larger in
/// magnitude than the running sum, which is the normal case for an
/// alternating series whose terms first grow and then cancel.
template <typename Value>
class CompensatedSum {
 public:
  explicit CompensatedSum(Value zero = Value{}) : sum_(zero), compensation_(zero) {}

  CompensatedSum& operator+=(const Value& value) {
    Value t = sum_ + value;
    if (abs_of(sum_) >= abs_of(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
    return *this;
  }

  Value value() const { return sum_ + compensation_; }

 private:
  static Value abs_of(const Value& v) {
    using std::abs;
    return abs(v);
  }

  Value sum_;
  Value compensation_;
};

}  // namespace stimemit
