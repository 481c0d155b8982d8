#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace detsparse {

/// A nonnegative quantity held as its natural logarithm. Tree counts and
/// determinants overflow doubles quickly (T(K_n) = n^(n-2)), so everything
/// downstream of the matrix-tree theorem is carried in this form. Zero is an
/// explicit marker rather than -inf arithmetic.
class LogWeight {
 public:
  constexpr LogWeight() = default;

  static constexpr LogWeight zero() { return LogWeight{}; }
  static constexpr LogWeight one() { return from_log(0.0); }
  static constexpr LogWeight from_log(double log_value) {
    LogWeight w;
    w.log_ = log_value;
    w.zero_ = false;
    return w;
  }
  static LogWeight from_linear(double value) {
    return value > 0.0 ? from_log(std::log(value)) : zero();
  }

  constexpr bool is_zero() const noexcept { return zero_; }
  /// Natural log; -inf for the zero marker.
  constexpr double log() const noexcept {
    return zero_ ? -std::numeric_limits<double>::infinity() : log_;
  }
  /// Linear value. Overflows to +inf for log > ~709; callers that need ratios
  /// should subtract logs instead.
  double linear() const noexcept { return zero_ ? 0.0 : std::exp(log_); }

  friend constexpr LogWeight operator*(LogWeight a, LogWeight b) {
    if (a.zero_ || b.zero_) return zero();
    return from_log(a.log_ + b.log_);
  }
  /// Division by zero yields zero; callers never divide by an empty count.
  friend constexpr LogWeight operator/(LogWeight a, LogWeight b) {
    if (a.zero_ || b.zero_) return zero();
    return from_log(a.log_ - b.log_);
  }
  LogWeight& operator*=(LogWeight other) { return *this = *this * other; }

  friend LogWeight operator+(LogWeight a, LogWeight b) {
    if (a.zero_) return b;
    if (b.zero_) return a;
    const double hi = std::max(a.log_, b.log_);
    const double lo = std::min(a.log_, b.log_);
    return from_log(hi + std::log1p(std::exp(lo - hi)));
  }
  LogWeight& operator+=(LogWeight other) { return *this = *this + other; }

  friend constexpr bool operator==(LogWeight a, LogWeight b) {
    return a.zero_ == b.zero_ && (a.zero_ || a.log_ == b.log_);
  }

 private:
  double log_ = 0.0;
  bool zero_ = true;
};

/// log(sum(exp(x_i))) with max-shift; -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

}  // namespace detsparse
