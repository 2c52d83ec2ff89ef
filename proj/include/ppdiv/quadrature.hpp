#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "ppdiv/error.hpp"

namespace ppdiv {

/// Tolerances for adaptive integration. Convergence is declared when the
/// summed error estimate drops below max(abs_tol, rel_tol * |integral|).
struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  std::size_t max_subdivisions = 10'000;

  friend bool operator==(const QuadratureSpec&, const QuadratureSpec&) = default;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t subdivisions = 0;
  bool converged = false;
};

namespace detail {

// 21-point Kronrod rule with embedded 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double a, b, value, error;
  friend bool operator<(const Segment& x, const Segment& y) { return x.error < y.error; }
};

template <class F>
Segment gauss_kronrod21(const F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double resg = 0.0;
  double resk = kWgk[10] * fc;
  double resabs = std::abs(resk);
  std::array<double, 10> fv1{}, fv2{};
  for (int j = 0; j < 5; ++j) {
    const int jtw = 2 * j + 1;
    const double dx = half * kXgk[jtw];
    const double f1 = f(centre - dx), f2 = f(centre + dx);
    fv1[jtw] = f1;
    fv2[jtw] = f2;
    resg += kWg[j] * (f1 + f2);
    resk += kWgk[jtw] * (f1 + f2);
    resabs += kWgk[jtw] * (std::abs(f1) + std::abs(f2));
  }
  for (int j = 0; j < 5; ++j) {
    const int jtwm1 = 2 * j;
    const double dx = half * kXgk[jtwm1];
    const double f1 = f(centre - dx), f2 = f(centre + dx);
    fv1[jtwm1] = f1;
    fv2[jtwm1] = f2;
    resk += kWgk[jtwm1] * (f1 + f2);
    resabs += kWgk[jtwm1] * (std::abs(f1) + std::abs(f2));
  }
  const double reskh = 0.5 * resk;
  double resasc = kWgk[10] * std::abs(fc - reskh);
  for (int j = 0; j < 10; ++j) {
    resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
  }
  const double ahalf = std::abs(half);
  resk *= half;
  resabs *= ahalf;
  resasc *= ahalf;
  double err = std::abs((resk - resg * half));
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return {a, b, resk, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over the finite interval
/// [a, b]. The segment with the largest error estimate is bisected until the
/// tolerance is met or the subdivision budget is exhausted. Does not throw on
/// non-convergence; callers inspect `converged`.
template <class F>
QuadratureResult integrate_adaptive(const F& f, double a, double b, const QuadratureSpec& quad = {}) {
  if (!(a < b)) return {0.0, 0.0, 0, true};
  std::priority_queue<detail::Segment> heap;
  auto first = detail::gauss_kronrod21(f, a, b);
  double total = first.value, total_err = first.error;
  heap.push(first);
  std::size_t subdivisions = 0;
  const auto done = [&] {
    return total_err <= std::max(quad.abs_tol, quad.rel_tol * std::abs(total));
  };
  while (!done() && std::isfinite(total)) {
    if (subdivisions >= quad.max_subdivisions) break;
    auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) break;  // interval exhausted at machine precision
    heap.pop();
    auto left = detail::gauss_kronrod21(f, worst.a, mid);
    auto right = detail::gauss_kronrod21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
  }
  // re-sum to shed the drift of the running totals
  double sum = 0.0, err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  const bool ok = std::isfinite(sum) && err <= std::max(quad.abs_tol, quad.rel_tol * std::abs(sum));
  return {sum, err, subdivisions, ok};
}

/// Integration over [a, b] where b may be +inf; the half-line is mapped onto
/// [0, 1) by x = a + u / (1 - u). The endpoint u = 1 is never evaluated.
template <class F>
QuadratureResult integrate(const F& f, double a, double b, const QuadratureSpec& quad = {}) {
  if (std::isinf(a)) fail(ErrorCode::InvalidArgument, "lower integration limit must be finite");
  if (std::isfinite(b)) return integrate_adaptive(f, a, b, quad);
  auto mapped = [&](double u) {
    const double one_minus = 1.0 - u;
    const double x = a + u / one_minus;
    const double fx = f(x);
    if (fx == 0.0) return 0.0;
    return fx / (one_minus * one_minus);
  };
  return integrate_adaptive(mapped, 0.0, 1.0, quad);
}

/// Probe abscissae covering [a, b] (b may be +inf) used to look for
/// singular behaviour of an integrand before quadrature.
inline std::vector<double> probe_points(double a, double b, std::size_t n = 257) {
  std::vector<double> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    pts.push_back(std::isfinite(b) ? a + u * (b - a) : a + u / (1.0 - u));
  }
  return pts;
}

}  // namespace ppdiv
