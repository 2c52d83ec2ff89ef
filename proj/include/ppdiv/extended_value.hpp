#pragma once

#include <cmath>
#include <compare>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <string>

#include "ppdiv/error.hpp"

namespace ppdiv {

/// A nonnegative extended real: a finite value >= 0 or +inf. Never NaN.
class ExtendedValue {
 public:
  constexpr ExtendedValue() = default;

  explicit ExtendedValue(double v) : value_(v) {
    if (std::isnan(v) || v < 0.0) {
      fail(ErrorCode::InvalidArgument, "extended value must be >= 0 or +inf, got " + std::to_string(v));
    }
  }

  static ExtendedValue infinity() { return ExtendedValue(std::numeric_limits<double>::infinity()); }
  static constexpr ExtendedValue zero() { return ExtendedValue(); }

  /// Rounding can leave tiny negative residues on quantities that are
  /// nonnegative in exact arithmetic; those are mapped to zero.
  static ExtendedValue clamped(double v) {
    if (std::isnan(v)) fail(ErrorCode::InvalidArgument, "NaN is not an extended value");
    return ExtendedValue(v < 0.0 ? 0.0 : v);
  }

  bool is_finite() const noexcept { return std::isfinite(value_); }
  bool is_infinite() const noexcept { return !is_finite(); }
  double value() const noexcept { return value_; }

  friend ExtendedValue operator+(ExtendedValue a, ExtendedValue b) {
    return ExtendedValue(a.value_ + b.value_);
  }
  ExtendedValue& operator+=(ExtendedValue other) { return *this = *this + other; }

  /// Scaling by c >= 0 with 0 * inf = 0.
  friend ExtendedValue operator*(double c, ExtendedValue a) {
    if (c == 0.0 || a.value_ == 0.0) return ExtendedValue();
    return ExtendedValue(c * a.value_);
  }

  friend bool operator==(ExtendedValue a, ExtendedValue b) noexcept { return a.value_ == b.value_; }
  friend std::partial_ordering operator<=>(ExtendedValue a, ExtendedValue b) noexcept {
    return a.value_ <=> b.value_;
  }

  /// "inf" for +inf, otherwise shortest round-trip decimal.
  std::string to_string() const;

 private:
  double value_ = 0.0;
};

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // prefer the shortest representation that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    char trial[64];
    std::snprintf(trial, sizeof trial, "%.*g", prec, v);
    if (std::strtod(trial, nullptr) == v) return trial;
  }
  return buf;
}

}  // namespace detail

inline std::string ExtendedValue::to_string() const { return detail::format_double(value_); }

inline std::ostream& operator<<(std::ostream& os, ExtendedValue v) { return os << v.to_string(); }

}  // namespace ppdiv
