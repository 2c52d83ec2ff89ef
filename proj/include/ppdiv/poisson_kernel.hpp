#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "ppdiv/error.hpp"
#include "ppdiv/extended_value.hpp"

namespace ppdiv {

/// Below this distance from 1 the order-1 (Kullback-Leibler) branch is used.
inline constexpr double kKlBranchWidth = 1e-9;

namespace detail {

inline void check_alpha(double alpha) {
  if (std::isnan(alpha) || alpha < 0.0 || std::isinf(alpha)) {
    fail(ErrorCode::InvalidAlpha, "order alpha must be finite and >= 0, got " + format_double(alpha));
  }
}

/// expm1(z) / z, with the removable singularity at 0 filled in.
inline double exprel(double z) {
  if (std::abs(z) < 1e-5) return 1.0 + z * (0.5 + z / 6.0);
  return std::expm1(z) / z;
}

// For s = t e^u the divergence divided by t is
//   alpha * sum_{k>=2} u^k / k! * (1 + alpha + ... + alpha^(k-2)),
// a series without the (1 - alpha) denominator. Used when |u| max(1, alpha)
// is small, where the closed form cancels catastrophically.
inline double renyi_series(double u, double alpha) {
  double term = u;   // u^k / k!, starting at k = 1
  double geo = 1.0;  // 1 + alpha + ... + alpha^(k-2), starting at k = 2
  double sum = 0.0;
  for (int k = 2; k < 80; ++k) {
    term *= u / k;
    const double add = term * geo;
    sum += add;
    if (std::abs(add) <= 1e-17 * std::abs(sum)) break;
    geo = 1.0 + alpha * geo;
  }
  return alpha * sum;
}

}  // namespace detail

/// Renyi divergence of order alpha between Poisson distributions with means
/// s and t:
///   alpha = 0:       1(s = 0) t
///   alpha = 1:       s log(s/t) + t - s
///   otherwise:       (alpha s + (1 - alpha) t - s^alpha t^(1-alpha)) / (1 - alpha)
/// with 0/0 = 0 and s/0 = inf, so the value is +inf for alpha >= 1, s > 0,
/// t = 0.
inline ExtendedValue renyi_poisson(double s, double t, double alpha) {
  detail::check_alpha(alpha);
  if (!(s >= 0.0) || !(t >= 0.0) || std::isinf(s) || std::isinf(t)) {
    fail(ErrorCode::InvalidArgument, "Poisson means must be finite and >= 0");
  }
  if (alpha == 0.0) return ExtendedValue(s == 0.0 ? t : 0.0);
  if (s == t) return ExtendedValue::zero();
  const bool kl = std::abs(alpha - 1.0) < kKlBranchWidth;
  if (s == 0.0) return ExtendedValue(t);
  if (t == 0.0) {
    if (kl || alpha > 1.0) return ExtendedValue::infinity();
    return ExtendedValue::clamped(alpha * s / (1.0 - alpha));
  }

  const double r = s / t;
  const double u = (r >= 0.5 && r <= 2.0) ? std::log1p((s - t) / t) : std::log(s) - std::log(t);
  const double a = kl ? 1.0 : alpha;
  if (std::abs(u) * std::max(1.0, a) <= 0.5) return ExtendedValue::clamped(t * detail::renyi_series(u, a));

  const double delta = a - 1.0;
  if (std::abs(delta * u) <= 1.0) {
    // (alpha r + 1 - alpha - r^alpha) / (1 - alpha) = r u exprel(delta u) - (r - 1)
    return ExtendedValue::clamped(t * (r * u * detail::exprel(delta * u) - (r - 1.0)));
  }
  double mixed = std::pow(s, a) * std::pow(t, 1.0 - a);
  if (!std::isfinite(mixed) || mixed == 0.0) mixed = std::exp(a * std::log(s) + (1.0 - a) * std::log(t));
  if (std::isinf(mixed)) return ExtendedValue::infinity();
  return ExtendedValue::clamped((a * s + (1.0 - a) * t - mixed) / (1.0 - a));
}

/// Renyi divergence of Poisson distributions by direct summation of the
/// probability mass functions in extended precision. Reference
/// implementation for tests; independent of the closed form above.
///
/// Terms are summed outward from the largest one until a geometric bound
/// on each remaining tail falls below tail_tol relative to the running sum.
inline ExtendedValue renyi_poisson_oracle(double s, double t, double alpha, double tail_tol = 1e-14) {
  detail::check_alpha(alpha);
  using real = long double;
  constexpr std::uint64_t kMaxTerms = 1'000'000;
  const real ls = s, lt = t;
  auto log_pmf = [](real mean, std::uint64_t k) -> real {
    if (mean == 0) return k == 0 ? 0.0L : -std::numeric_limits<real>::infinity();
    return static_cast<real>(k) * std::log(mean) - mean - std::lgamma(static_cast<real>(k) + 1);
  };

  if (alpha == 1.0) {
    // sum_k p_s(k) log(p_s(k) / p_t(k))
    if (s == 0.0) return ExtendedValue(t);
    if (t == 0.0) return ExtendedValue::infinity();
    real sum = 0, mass = 0;
    for (std::uint64_t k = 0; k < kMaxTerms; ++k) {
      const real lp = log_pmf(ls, k);
      const real p = std::exp(lp);
      sum += p * (lp - log_pmf(lt, k));
      mass += p;
      if (static_cast<real>(k) > ls && 1 - mass < tail_tol && p < tail_tol) {
        return ExtendedValue::clamped(static_cast<double>(sum));
      }
    }
    fail(ErrorCode::NonConvergent, "Poisson KL summation exceeded the term budget");
  }

  if (alpha == 0.0) {
    // -log Q(p_s > 0): the support of p_s is {0} when s = 0, else everything
    if (s > 0.0) return ExtendedValue::zero();
    return ExtendedValue(static_cast<double>(-log_pmf(lt, 0)));
  }

  // Degenerate means: only k = 0 can carry mass under the degenerate law.
  if (s == 0.0 || t == 0.0) {
    if (s == 0.0 && t == 0.0) return ExtendedValue::zero();
    if (t == 0.0 && alpha > 1.0) return ExtendedValue::infinity();
    // Z = p_s(0)^alpha p_t(0)^(1-alpha) from the single shared support point
    const real log_z = alpha * log_pmf(ls, 0) + (1 - static_cast<real>(alpha)) * log_pmf(lt, 0);
    return ExtendedValue::clamped(static_cast<double>(log_z / (static_cast<real>(alpha) - 1)));
  }

  // log of the k-th term of Z = sum_k p_s(k)^alpha p_t(k)^(1-alpha)
  const real a = alpha;
  auto log_term = [&](std::uint64_t k) { return a * log_pmf(ls, k) + (1 - a) * log_pmf(lt, k); };
  // The log term is concave in k; gallop then bisect on its forward difference.
  auto rising = [&](std::uint64_t k) { return log_term(k + 1) > log_term(k); };
  std::uint64_t hi = 1;
  while (rising(hi)) hi *= 2;
  std::uint64_t lo = 0;
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (rising(mid)) lo = mid + 1;
    else hi = mid;
  }
  const std::uint64_t peak = lo;
  const real peak_log = log_term(peak);

  real sum = 1;  // terms relative to the peak term
  std::uint64_t used = 1;
  for (std::uint64_t k = peak + 1;; ++k) {
    const real term = std::exp(log_term(k) - peak_log);
    sum += term;
    const real ratio = std::exp(log_term(k + 1) - log_term(k));
    if (ratio < 1 && term * ratio / (1 - ratio) < tail_tol * sum) break;
    if (++used > kMaxTerms) fail(ErrorCode::NonConvergent, "Poisson Renyi summation exceeded the term budget");
  }
  for (std::uint64_t k = peak; k-- > 0;) {
    const real term = std::exp(log_term(k) - peak_log);
    sum += term;
    if (k == 0) break;
    const real ratio = std::exp(log_term(k - 1) - log_term(k));
    if (ratio < 1 && term * ratio / (1 - ratio) < tail_tol * sum) break;
    if (++used > kMaxTerms) fail(ErrorCode::NonConvergent, "Poisson Renyi summation exceeded the term budget");
  }
  const real log_z = peak_log + std::log(sum);
  return ExtendedValue::clamped(static_cast<double>(log_z / (a - 1)));
}

}  // namespace ppdiv
