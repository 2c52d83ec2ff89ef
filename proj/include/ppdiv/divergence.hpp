#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ppdiv/error.hpp"
#include "ppdiv/extended_value.hpp"
#include "ppdiv/measure.hpp"
#include "ppdiv/pair_integral.hpp"
#include "ppdiv/poisson_kernel.hpp"

namespace ppdiv {

struct DivergenceReport {
  double alpha = 0.0;
  ExtendedValue value;
  double quadrature_error_estimate = 0.0;
  double tolerance = 0.0;
  std::vector<std::string> notes;
};

/// Tsallis divergence of intensity measures,
///   T_alpha(lambda || mu) = integral of renyi_poisson(f, g, alpha) d(nu).
/// Equals the Renyi divergence of the Poisson process laws for alpha > 0.
inline DivergenceReport tsallis(const DensityPair& pair, double alpha) {
  detail::check_alpha(alpha);
  auto r = integrate_nonnegative(
      pair, [alpha](double f, double g) { return renyi_poisson(f, g, alpha).value(); },
      "T_" + detail::format_double(alpha));
  return {alpha, r.value, r.error, r.tolerance, std::move(r.notes)};
}

/// Kullback-Leibler divergence of the Poisson process laws P_lambda, P_mu:
/// integral of f log(f/g) + g - f.
inline DivergenceReport kl_pp(const DensityPair& pair) {
  auto r = tsallis(pair, 1.0);
  r.notes.push_back("KL(P_lambda || P_mu) = T_1(lambda || mu)");
  return r;
}

/// Renyi divergence R_alpha(P_lambda || P_mu). For alpha = 0 the identity
/// with T_0 needs T_beta < inf for some beta > 0; beta = 1/2 is probed.
inline DivergenceReport renyi_pp(const DensityPair& pair, double alpha) {
  detail::check_alpha(alpha);
  auto r = tsallis(pair, alpha);
  if (alpha > 0.0) return r;
  bool finite_probe = false;
  try {
    finite_probe = tsallis(pair, 0.5).value.is_finite();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::QuadratureFailure) throw;
  }
  if (finite_probe) {
    r.notes.push_back("R_0 = T_0 established: T_1/2 finite");
  } else {
    r.notes.push_back("R_0 = T_0 unestablished: T_1/2 not certified finite; reporting T_0");
  }
  return r;
}

/// Squared Hellinger distance of measures, H^2 = 1/2 integral (sqrt f - sqrt g)^2.
inline ExtendedValue hellinger_sq(const DensityPair& pair) {
  auto r = integrate_nonnegative(
      pair,
      [](double f, double g) {
        const double d = std::sqrt(f) - std::sqrt(g);
        return 0.5 * d * d;
      },
      "H^2");
  return r.value;
}

/// Hellinger distance H(lambda, mu) of the intensity measures.
inline ExtendedValue hellinger_measures(const DensityPair& pair) {
  const auto h2 = hellinger_sq(pair);
  if (h2.is_infinite()) return h2;
  return ExtendedValue(std::sqrt(h2.value()));
}

/// Hellinger distance of the Poisson laws from H^2(lambda, mu):
/// sqrt(1 - exp(-H^2)), which is exactly 1 when H^2 is infinite.
inline double hellinger_pp_from(ExtendedValue h2_measures) {
  if (h2_measures.is_infinite()) return 1.0;
  return std::sqrt(-std::expm1(-h2_measures.value()));
}

inline ExtendedValue hellinger_pp(const DensityPair& pair) {
  return ExtendedValue(hellinger_pp_from(hellinger_sq(pair)));
}

enum class PpRelation { AbsolutelyContinuous, MutuallySingular, Neither, MutuallyAC };

inline std::string_view to_string(PpRelation r) {
  switch (r) {
    case PpRelation::AbsolutelyContinuous: return "AbsolutelyContinuous";
    case PpRelation::MutuallySingular: return "MutuallySingular";
    case PpRelation::Neither: return "Neither";
    case PpRelation::MutuallyAC: return "MutuallyAC";
  }
  return "?";
}

/// Absolute continuity verdict for the Poisson laws. These are numeric
/// verdicts: T_0 below kZeroThreshold counts as zero, and a converged
/// quadrature counts as finite.
struct AcVerdict {
  PpRelation relation = PpRelation::Neither;
  bool lambda_ac_mu = false;  // P_lambda << P_mu
  bool mu_ac_lambda = false;  // P_mu << P_lambda
  ExtendedValue t0_forward;   // T_0(lambda || mu) = mu{f = 0}
  ExtendedValue t0_backward;  // T_0(mu || lambda) = lambda{g = 0}
  ExtendedValue hellinger_sq;
  std::vector<std::string> notes;
};

inline constexpr double kZeroThreshold = 1e-12;

inline AcVerdict classify_pp_relation(const DensityPair& pair) {
  AcVerdict v;
  v.t0_forward = tsallis(pair, 0.0).value;
  v.t0_backward = tsallis(pair.swapped(), 0.0).value;
  v.hellinger_sq = ppdiv::hellinger_sq(pair);
  const bool h_finite = v.hellinger_sq.is_finite();
  const bool lambda_ll_mu = v.t0_backward.value() < kZeroThreshold;  // lambda{g = 0} = 0
  const bool mu_ll_lambda = v.t0_forward.value() < kZeroThreshold;   // mu{f = 0} = 0
  v.lambda_ac_mu = lambda_ll_mu && h_finite;
  v.mu_ac_lambda = mu_ll_lambda && h_finite;

  if (v.lambda_ac_mu && v.mu_ac_lambda) {
    v.relation = PpRelation::MutuallyAC;
    return v;
  }
  if (v.lambda_ac_mu || v.mu_ac_lambda) {
    v.relation = PpRelation::AbsolutelyContinuous;
    v.notes.push_back(v.lambda_ac_mu ? "P_lambda << P_mu only" : "P_mu << P_lambda only");
    return v;
  }
  if (lambda_ll_mu && mu_ll_lambda && !h_finite) {
    v.relation = PpRelation::MutuallySingular;
    v.notes.push_back("mutually absolutely continuous intensities with infinite Hellinger distance");
    return v;
  }
  // lambda and mu mutually singular: T_0(lambda || mu) = mu(S) and T_0(mu || lambda) = lambda(S)
  auto masses_match = [](ExtendedValue t0, ExtendedValue mass) {
    if (mass.is_infinite() || t0.is_infinite()) return mass == t0;
    return std::abs(t0.value() - mass.value()) <= kZeroThreshold * (1.0 + mass.value());
  };
  try {
    const auto lambda_mass = integrate_nonnegative(pair, [](double f, double) { return f; }, "lambda(S)").value;
    const auto mu_mass = integrate_nonnegative(pair, [](double, double g) { return g; }, "mu(S)").value;
    if (lambda_mass.is_finite() && mu_mass.is_finite() && masses_match(v.t0_forward, mu_mass) &&
        masses_match(v.t0_backward, lambda_mass)) {
      v.relation = PpRelation::MutuallySingular;
      v.notes.push_back("intensity measures are mutually singular");
      return v;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::QuadratureFailure) throw;
    v.notes.push_back("total masses not computable; singularity of intensities undecided");
  }
  v.relation = PpRelation::Neither;
  return v;
}

/// Intensity xi with density h = (sqrt f + sqrt g)^2 / 4 against the pair's
/// reference. P_lambda and P_mu are both absolutely continuous with respect
/// to P_xi, and H(lambda, xi) = H(lambda, mu) / 2. Requires H(lambda, mu) < inf.
inline IntensityModel dominating_intensity(const DensityPair& pair) {
  const auto h2 = hellinger_sq(pair);
  if (h2.is_infinite()) fail(ErrorCode::InfiniteHellinger, "no dominating Poisson law: H(lambda, mu) = inf");
  auto h = [](double f, double g) {
    const double r = std::sqrt(f) + std::sqrt(g);
    return 0.25 * r * r;
  };
  if (pair.is_tabulated()) {
    const auto& t = pair.tabulated();
    if (t.support == TabulatedPair::Support::Atoms) {
      Discrete out;
      for (std::size_t i = 0; i < t.size(); ++i) out.atoms.push_back({t.ids[i], t.weight[i] * h(t.f[i], t.g[i])});
      return out;
    }
    Grid out{*t.grid, std::vector<double>(t.grid->cell_count(), 0.0)};
    const double vol = t.grid->cell_volume();
    for (std::size_t i = 0; i < t.size(); ++i) out.values[t.cell_index[i]] = h(t.f[i], t.g[i]) * t.weight[i] / vol;
    return out;
  }
  const auto& s = pair.smooth();
  Smooth out;
  out.lower = s.lower;
  out.upper = s.upper;
  out.quadrature = s.quadrature;
  out.density = [f = s.f, g = s.g, c = s.reference_scale, h](double x) { return c * h(f(x), g(x)); };
  if (s.f_bound && s.g_bound) out.bound = s.reference_scale * h(*s.f_bound, *s.g_bound);
  return out;
}

/// Both sides of lambda(S) <= 4 mu(S) + 6 H^2(lambda, mu), valid when
/// lambda << mu.
struct SanityBound {
  ExtendedValue lhs;  // lambda(S)
  ExtendedValue rhs;  // 4 mu(S) + 6 H^2
  bool holds = false;
  bool applicable = true;
  std::vector<std::string> notes;
};

inline SanityBound tsallis_sanity_bound(const DensityPair& pair) {
  SanityBound b;
  b.lhs = integrate_nonnegative(pair, [](double f, double) { return f; }, "lambda(S)").value;
  const auto mu_mass = integrate_nonnegative(pair, [](double, double g) { return g; }, "mu(S)").value;
  b.rhs = 4.0 * mu_mass + 6.0 * hellinger_sq(pair);
  b.applicable = tsallis(pair.swapped(), 0.0).value.value() < kZeroThreshold;
  if (!b.applicable) b.notes.push_back("lambda is not absolutely continuous w.r.t. mu; bound not guaranteed");
  b.holds = b.lhs <= b.rhs;
  if (b.applicable && !b.holds) b.notes.push_back("mass bound violated: numerical inconsistency");
  return b;
}

}  // namespace ppdiv
