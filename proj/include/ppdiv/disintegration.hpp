#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ppdiv/divergence.hpp"
#include "ppdiv/error.hpp"
#include "ppdiv/measure.hpp"
#include "ppdiv/pair_integral.hpp"
#include "ppdiv/poisson_kernel.hpp"

namespace ppdiv {

/// Tsallis divergence of lambda (x) K against mu (x) L split into the base
/// term T_alpha(lambda || mu) and the mark term.
struct ProductDivergence {
  DivergenceReport report;
  ExtendedValue base_term;
  ExtendedValue mark_term;
};

/// T_alpha(K_t || L_t) of the mark kernels at one location.
inline ExtendedValue mark_divergence(const MarkKernel& k, const MarkKernel& l, const Location& where, double alpha) {
  TabulatedPair t;
  t.support = TabulatedPair::Support::Atoms;
  for (std::size_t j = 0; j < k.reference.size(); ++j) {
    t.ids.push_back(std::to_string(j));
    t.weight.push_back(k.reference.weight(j));
    t.f.push_back(k.density(where, j));
    t.g.push_back(l.density(where, j));
  }
  return tsallis(DensityPair(std::move(t)), alpha).value;
}

namespace detail {

/// Weight of the mark term against nu: g 1(f != 0) for alpha = 0, f for
/// alpha = 1, f^alpha g^(1-alpha) otherwise (with s/0 = inf).
inline double mark_weight(double f, double g, double alpha) {
  if (alpha == 0.0) return f != 0.0 ? g : 0.0;
  if (std::abs(alpha - 1.0) < kKlBranchWidth) return f;
  if (f == 0.0) return 0.0;
  if (g == 0.0) return alpha < 1.0 ? 0.0 : kInf;
  return std::exp(alpha * std::log(f) + (1.0 - alpha) * std::log(g));
}

inline void check_kernels(const DensityPair& base, const MarkedModel& k, const MarkedModel& l) {
  if (!(k.kernel.reference == l.kernel.reference)) {
    fail(ErrorCode::KernelMismatch, "mark kernels must share one mark reference");
  }
  if (!k.kernel.density || !l.kernel.density) fail(ErrorCode::KernelMismatch, "mark kernel without density");
  ModelKind expected = ModelKind::Smooth;
  if (base.is_tabulated()) {
    expected = base.tabulated().support == TabulatedPair::Support::Atoms ? ModelKind::Discrete : ModelKind::Grid;
  }
  if (k.base.kind() != expected || l.base.kind() != expected) {
    fail(ErrorCode::KernelMismatch, "marked models do not live on the base pair's domain class");
  }
}

}  // namespace detail

/// Disintegration formula:
///   alpha = 0:  T_0(lambda || mu) + integral over {f != 0} of T_0(K_t || L_t) mu(dt)
///   alpha = 1:  T_1(lambda || mu) + integral of T_1(K_t || L_t) lambda(dt)
///   otherwise:  T_alpha(lambda || mu) + integral of T_alpha(K_t || L_t) f^alpha g^(1-alpha) nu(dt)
/// For tabulated bases the mark divergence is evaluated once per atom or
/// cell (at the cell centre).
inline ProductDivergence tsallis_product_terms(const DensityPair& base_pair, const MarkedModel& k,
                                               const MarkedModel& l, double alpha) {
  detail::check_alpha(alpha);
  detail::check_kernels(base_pair, k, l);
  ProductDivergence out;
  auto base = tsallis(base_pair, alpha);
  out.base_term = base.value;
  auto marks = integrate_nonnegative_at(
      base_pair,
      [&](const Location& where, double f, double g) {
        const double w = detail::mark_weight(f, g, alpha);
        if (w == 0.0) return 0.0;
        const auto inner = mark_divergence(k.kernel, l.kernel, where, alpha);
        if (inner.value() == 0.0) return 0.0;
        return w * inner.value();
      },
      "mark term");
  out.mark_term = marks.value;
  out.report = base;
  out.report.value = base.value + marks.value;
  out.report.quadrature_error_estimate = base.quadrature_error_estimate + marks.error;
  for (auto& n : marks.notes) out.report.notes.push_back(std::move(n));
  out.report.notes.push_back("base term " + out.base_term.to_string() + ", mark term " + out.mark_term.to_string());
  return out;
}

inline DivergenceReport tsallis_product(const DensityPair& base_pair, const MarkedModel& k, const MarkedModel& l,
                                        double alpha) {
  return tsallis_product_terms(base_pair, k, l, alpha).report;
}

/// Renyi divergence of two compound Poisson processes with diffuse event
/// intensities on a half-line or interval and real-valued jump kernels.
/// Decomposes as R_alpha(P_lambda || P_mu) plus the mark information term.
inline DivergenceReport compound_renyi(const DensityPair& event_pair, const MarkedModel& k, const MarkedModel& l,
                                       double alpha) {
  detail::check_alpha(alpha);
  if (alpha == 0.0) fail(ErrorCode::InvalidAlpha, "compound Renyi divergence needs alpha > 0");
  if (event_pair.is_tabulated()) {
    const auto& t = event_pair.tabulated();
    if (t.support == TabulatedPair::Support::Atoms) {
      fail(ErrorCode::NonDiffuseBase, "event intensity has atoms; compound processes need a diffuse base");
    }
    if (t.grid->dim() != 1) fail(ErrorCode::InvalidArgument, "compound processes live on a time axis (1-d)");
  }
  const auto& ref = k.kernel.reference;
  if (ref.kind == MarkReference::Kind::Discrete) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (ref.values[j] != 0.0) continue;
      std::vector<Location> where;
      if (event_pair.is_tabulated()) {
        const auto& t = event_pair.tabulated();
        for (std::size_t i = 0; i < t.size(); ++i) where.push_back(t.location(i));
      } else {
        for (double x : probe_points(event_pair.smooth().lower, event_pair.smooth().upper, 33)) where.push_back({{x}, {}});
      }
      for (const auto& loc : where) {
        if (k.kernel.density(loc, j) > 0.0 || l.kernel.density(loc, j) > 0.0) {
          fail(ErrorCode::ZeroMarkAtom, "jump kernel charges the zero increment");
        }
      }
    }
  }
  auto terms = tsallis_product_terms(event_pair, k, l, alpha);
  auto r = terms.report;
  r.notes.push_back("R_alpha(P_lambda || P_mu) = " + terms.base_term.to_string() + "; mark information = " +
                    terms.mark_term.to_string());
  return r;
}

}  // namespace ppdiv
