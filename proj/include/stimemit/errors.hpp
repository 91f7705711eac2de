#pragma once

#include <stdexcept>
#include <string>

namespace stimemit {

/// A computation ran but could not reach its accuracy target.
///
/// `estimate` carries the best achieved error estimate (or the precision
/// reached, for summation failures) so callers can report it.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double estimate)
      : std::runtime_error(what), estimate_(estimate) {}

  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

}  // namespace stimemit
