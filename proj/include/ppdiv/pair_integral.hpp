#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ppdiv/error.hpp"
#include "ppdiv/extended_value.hpp"
#include "ppdiv/measure.hpp"
#include "ppdiv/quadrature.hpp"

namespace ppdiv {

/// Integral of a pointwise functional of the densities against the
/// reference measure.
struct PairIntegral {
  ExtendedValue value;
  double error = 0.0;
  /// Absolute tolerance the quadrature was asked to meet; 0 for exact sums.
  double tolerance = 0.0;
  std::vector<std::string> notes;
};

namespace detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

struct InfiniteIntegrand {
  double x;
};

/// Whether the integrand is +inf on a neighbourhood of x (a set of positive
/// Lebesgue measure) rather than at an isolated point.
template <class Eval>
bool infinite_on_neighbourhood(const Eval& eval, double x, double lo, double hi) {
  const double scale = std::max(1.0, std::abs(x));
  int hits = 0, tries = 0;
  for (double h : {1e-4, 1e-6, 1e-8}) {
    for (double side : {-1.0, 1.0}) {
      const double y = x + side * h * scale;
      if (y <= lo || y >= hi) continue;
      ++tries;
      if (std::isinf(eval(y))) ++hits;
    }
  }
  return tries > 0 && hits == tries;
}

}  // namespace detail

/// Integral of kernel(location, f, g) >= 0 (possibly +inf) against the
/// reference.
///
/// Tabulated pairs are summed exactly; any entry with positive reference
/// mass and an infinite integrand makes the result +inf. Smooth pairs are
/// integrated adaptively; quadrature cannot certify +inf, so the result is
/// declared infinite only when the integrand is +inf on a probed
/// neighbourhood, and otherwise a failure to converge raises
/// QuadratureFailure noting that the value is possibly infinite.
template <class Kernel>
PairIntegral integrate_nonnegative_at(const DensityPair& pair, const Kernel& kernel, const std::string& what) {
  PairIntegral out;
  if (pair.is_tabulated()) {
    const auto& t = pair.tabulated();
    detail::CompensatedSum acc;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.weight[i] == 0.0) continue;
      const double v = kernel(t.location(i), t.f[i], t.g[i]);
      if (v == 0.0) continue;
      if (std::isinf(v)) {
        out.value = ExtendedValue::infinity();
        out.notes.push_back(what + " is infinite: integrand +inf on an entry of positive reference mass");
        return out;
      }
      acc.add(t.weight[i] * v);
    }
    out.value = ExtendedValue::clamped(acc.value());
    return out;
  }

  const auto& s = pair.smooth();
  out.tolerance = s.quadrature.abs_tol;
  auto eval = [&](double x) { return kernel(Location{{x}, {}}, s.f(x), s.g(x)); };
  for (double x : probe_points(s.lower, s.upper)) {
    if (std::isinf(eval(x)) && detail::infinite_on_neighbourhood(eval, x, s.lower, s.upper)) {
      out.value = ExtendedValue::infinity();
      out.notes.push_back(what + " is infinite: integrand +inf on a neighbourhood of x=" + detail::format_double(x));
      return out;
    }
  }
  auto integrand = [&](double x) {
    const double v = eval(x);
    if (std::isinf(v)) throw detail::InfiniteIntegrand{x};
    return v;
  };
  QuadratureResult r;
  try {
    r = integrate(integrand, s.lower, s.upper, s.quadrature);
  } catch (const detail::InfiniteIntegrand& hit) {
    if (detail::infinite_on_neighbourhood(eval, hit.x, s.lower, s.upper)) {
      out.value = ExtendedValue::infinity();
      out.notes.push_back(what + " is infinite: integrand +inf near x=" + detail::format_double(hit.x));
      return out;
    }
    fail(ErrorCode::QuadratureFailure,
         what + ": integrand +inf at isolated point x=" + detail::format_double(hit.x) + " (possibly infinite)");
  }
  if (!r.converged) {
    fail(ErrorCode::QuadratureFailure, what + ": tolerance not met after " + std::to_string(r.subdivisions) +
                                           " subdivisions, error estimate " + detail::format_double(r.error) +
                                           " (possibly infinite)");
  }
  out.value = ExtendedValue::clamped(s.reference_scale * r.value);
  out.error = s.reference_scale * r.error;
  return out;
}

/// As integrate_nonnegative_at for kernels of the densities alone.
template <class Kernel>
PairIntegral integrate_nonnegative(const DensityPair& pair, const Kernel& kernel, const std::string& what) {
  if (pair.is_tabulated()) {
    // skip building locations for the common case
    const auto& t = pair.tabulated();
    PairIntegral out;
    detail::CompensatedSum acc;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.weight[i] == 0.0) continue;
      const double v = kernel(t.f[i], t.g[i]);
      if (v == 0.0) continue;
      if (std::isinf(v)) {
        out.value = ExtendedValue::infinity();
        out.notes.push_back(what + " is infinite: integrand +inf on an entry of positive reference mass");
        return out;
      }
      acc.add(t.weight[i] * v);
    }
    out.value = ExtendedValue::clamped(acc.value());
    return out;
  }
  return integrate_nonnegative_at(
      pair, [&](const Location&, double f, double g) { return kernel(f, g); }, what);
}

/// Signed integral of kernel(x, f, g) over [lo, hi] of a smooth pair.
/// Throws QuadratureFailure when the tolerance is not met.
template <class Kernel>
QuadratureResult integrate_smooth_signed(const SmoothPair& s, double lo, double hi, const Kernel& kernel,
                                         const std::string& what) {
  lo = std::max(lo, s.lower);
  hi = std::min(hi, s.upper);
  if (!(lo < hi)) return {0.0, 0.0, 0, true};
  auto r = integrate([&](double x) { return kernel(x, s.f(x), s.g(x)); }, lo, hi, s.quadrature);
  if (!r.converged) fail(ErrorCode::QuadratureFailure, what + ": tolerance not met");
  r.value *= s.reference_scale;
  r.error *= s.reference_scale;
  return r;
}

}  // namespace ppdiv
