#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ppdiv/divergence.hpp"
#include "ppdiv/error.hpp"
#include "ppdiv/measure.hpp"
#include "ppdiv/pair_integral.hpp"
#include "ppdiv/parallel.hpp"
#include "ppdiv/poisson_kernel.hpp"
#include "ppdiv/rng.hpp"
#include "ppdiv/sampler.hpp"

namespace ppdiv {

struct LogLikelihoodResult {
  /// Whether eta avoids {phi = 0}, i.e. lies in the support set M.
  bool in_support = true;
  /// log dP_lambda/dP_mu (eta); -inf outside the support set.
  double log_lr = 0.0;
  /// (n, log-likelihood on the truncation S_n) for the sigma-finite evaluator.
  std::vector<std::pair<std::uint64_t, double>> truncation_trace;
  bool converged = true;
  /// Sigma-finite evaluator only: the compensated integral over A, the
  /// plain integral over the complement, and the two mu-integrals, where
  /// A = {|log phi| <= 1}.
  std::array<double, 4> terms{};
  std::vector<std::string> notes;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Evaluates log-likelihood ratios log dP_lambda/dP_mu for one density pair.
///
/// Construction checks lambda << mu (lambda{g = 0} = 0 numerically) and
/// precomputes the pattern-independent integrals, so a single evaluator can
/// score many patterns. Thread-safe: the only mutable state is a
/// mutex-guarded cache of per-shell integrals.
class LikelihoodEvaluator {
 public:
  explicit LikelihoodEvaluator(DensityPair pair) : pair_(std::move(pair)) {
    const auto escape = tsallis(pair_.swapped(), 0.0).value;  // lambda{g = 0}
    if (escape.value() >= kZeroThreshold) {
      fail(ErrorCode::NotAbsolutelyContinuous,
           "lambda charges {g = 0} with mass " + escape.to_string() + "; no likelihood ratio exists");
    }
    if (pair_.is_tabulated()) {
      const auto& t = pair_.tabulated();
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.support == TabulatedPair::Support::Atoms) index_.emplace(t.ids[i], i);
        if (t.g[i] > 0.0) compensator_ += t.weight[i] * (t.g[i] - t.f[i]);
      }
      finite_masses_ = true;
      mutually_positive_ = std::all_of(t.f.begin(), t.f.end(), [](double v) { return v > 0.0; }) &&
                           std::all_of(t.g.begin(), t.g.end(), [](double v) { return v > 0.0; });
    } else {
      const auto& s = pair_.smooth();
      finite_masses_ = true;
      for (bool second : {false, true}) {
        try {
          const auto m = integrate_nonnegative(
              pair_, [second](double f, double g) { return second ? g : f; }, "mass");
          finite_masses_ = finite_masses_ && m.value.is_finite();
        } catch (const Error& e) {
          if (e.code() != ErrorCode::QuadratureFailure) throw;
          if (std::isfinite(s.upper)) throw;
          finite_masses_ = false;
        }
      }
      if (finite_masses_) {
        compensator_ = integrate_smooth_signed(
                           s, s.lower, s.upper, [](double, double f, double g) { return g > 0.0 ? g - f : 0.0; },
                           "integral of (1 - phi) d(mu)")
                           .value;
      }
    }
  }

  const DensityPair& pair() const noexcept { return pair_; }
  bool finite_masses() const noexcept { return finite_masses_; }

  /// 1_M(eta) exp(integral (1 - phi) d(mu) + integral log phi d(eta)) for
  /// finite intensities.
  LogLikelihoodResult finite(const PointPattern& eta) const {
    if (!finite_masses_) fail(ErrorCode::InfiniteMass, "intensity with infinite mass; use the sigma-finite evaluator");
    LogLikelihoodResult out;
    double points = 0.0;
    for (const auto& p : eta.points) {
      const double phi = phi_at(p);
      if (phi == 0.0) {
        out.in_support = false;
        out.log_lr = kNegInf;
        return out;
      }
      points += static_cast<double>(p.multiplicity) * std::log(phi);
    }
    if (mutually_positive_) out.notes.push_back("densities strictly positive: support indicator omitted");
    out.log_lr = compensator_ + points;
    return out;
  }

  /// Compensated evaluation over truncations S_n = [lower, lower + n]:
  ///   integral over A of log phi d(eta - mu) + integral over A^c of log phi d(eta)
  ///   + integral over A of (log phi + 1 - phi) d(mu) + integral over A^c of (1 - phi) d(mu)
  /// with A = {|log phi| <= 1}. Iteration stops at the first n whose next
  /// shell changes the value by less than tol (the look-ahead value is not
  /// recorded), at the end of the domain or observation window, or at n_max.
  LogLikelihoodResult sigma_finite(const PointPattern& eta, std::uint64_t n_max = 100, double tol = 1e-8) const {
    if (n_max == 0) fail(ErrorCode::InvalidArgument, "n_max must be positive");
    check_hellinger();
    LogLikelihoodResult out;
    for (const auto& p : eta.points) {
      if (phi_at(p) == 0.0) {
        out.in_support = false;
        out.log_lr = kNegInf;
        out.notes.push_back("pattern charges {phi = 0}");
        return out;
      }
    }

    if (pair_.is_tabulated()) {
      // S_1 = S for finite tabulated supports
      out.terms = tabulated_terms(eta);
      out.log_lr = out.terms[0] + out.terms[1] + out.terms[2] + out.terms[3];
      out.truncation_trace.emplace_back(1, out.log_lr);
      return out;
    }

    const auto& s = pair_.smooth();
    const double domain_shells = std::ceil(s.upper - s.lower);
    double window_end = kInf;
    if (eta.window) {
      if (const auto* box = std::get_if<Box>(&*eta.window)) window_end = box->upper.at(0);
    }
    const double window_shells = std::isfinite(window_end) ? std::ceil(window_end - s.lower - 1e-12) : kInf;
    const auto last = static_cast<std::uint64_t>(std::min<double>({static_cast<double>(n_max), domain_shells,
                                                                    std::max(1.0, window_shells)}));

    std::array<double, 4> acc{};
    out.converged = false;
    for (std::uint64_t n = 1; n <= last; ++n) {
      const auto add = shell_terms(eta, n);
      for (int k = 0; k < 4; ++k) acc[k] += add[k];
      const double value = acc[0] + acc[1] + acc[2] + acc[3];
      out.truncation_trace.emplace_back(n, value);
      if (static_cast<double>(n) >= domain_shells) {
        out.converged = true;
        break;
      }
      if (n < last) {
        const auto next = shell_terms(eta, n + 1);
        if (std::abs(next[0] + next[1] + next[2] + next[3]) < tol) {
          out.converged = true;
          break;
        }
      }
    }
    if (!out.converged) {
      if (last < n_max && static_cast<double>(last) < domain_shells) {
        out.notes.push_back("observation window exhausted at n=" + std::to_string(last));
      } else {
        out.notes.push_back("n_max reached without meeting the tolerance");
      }
    }
    out.terms = acc;
    out.log_lr = out.truncation_trace.back().second;
    return out;
  }

 private:
  double phi_at(const Point& p) const {
    double f = 0.0, g = 0.0;
    if (pair_.is_tabulated()) {
      const auto& t = pair_.tabulated();
      std::optional<std::size_t> i;
      if (t.support == TabulatedPair::Support::Atoms) {
        if (auto it = index_.find(p.atom); it != index_.end()) i = it->second;
      } else {
        i = t.locate(p);
      }
      if (!i) fail(ErrorCode::PointOutsideDomain, "pattern point is not in the model domain");
      f = t.f[*i];
      g = t.g[*i];
    } else {
      const auto& s = pair_.smooth();
      if (p.coords.size() != 1 || !(p.coords[0] >= s.lower && p.coords[0] <= s.upper)) {
        fail(ErrorCode::PointOutsideDomain, "pattern point is not in the model domain");
      }
      f = s.f(p.coords[0]);
      g = s.g(p.coords[0]);
    }
    if (g == 0.0) return 0.0;  // 0/0 = 0; f > 0 here is ruled out by lambda << mu
    return f / g;
  }

  static bool in_a(double phi) { return phi > 0.0 && std::abs(std::log(phi)) <= 1.0; }

  void check_hellinger() const {
    ExtendedValue h2;
    try {
      h2 = hellinger_sq(pair_);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::QuadratureFailure) throw;
      fail(ErrorCode::InfiniteHellinger, "H(lambda, mu) not certified finite");
    }
    if (h2.is_infinite()) fail(ErrorCode::InfiniteHellinger, "H(lambda, mu) = inf: P_lambda is not << P_mu");
  }

  std::array<double, 4> tabulated_terms(const PointPattern& eta) const {
    const auto& t = pair_.tabulated();
    std::array<double, 4> terms{};
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.g[i] == 0.0) continue;
      const double phi = t.f[i] / t.g[i];
      const double mu = t.weight[i] * t.g[i];
      if (in_a(phi)) {
        terms[0] -= std::log(phi) * mu;
        terms[2] += (std::log(phi) + 1.0 - phi) * mu;
      } else {
        terms[3] += (1.0 - phi) * mu;
      }
    }
    for (const auto& p : eta.points) {
      const double phi = phi_at(p);
      const double v = static_cast<double>(p.multiplicity) * std::log(phi);
      (in_a(phi) ? terms[0] : terms[1]) += v;
    }
    return terms;
  }

  /// The three mu-integrals over shell n: -int_A log phi, int_A (log phi + 1 - phi), int_Ac (1 - phi).
  std::array<double, 3> shell_integrals(std::uint64_t n) const {
    std::lock_guard lock(cache_mutex_);
    while (shell_cache_.size() < n) {
      const auto& s = pair_.smooth();
      const double lo = s.lower + static_cast<double>(shell_cache_.size());
      const double hi = lo + 1.0;
      auto phi_of = [](double f, double g) { return g > 0.0 ? f / g : 0.0; };
      const double comp = integrate_smooth_signed(
                              s, lo, hi,
                              [&](double, double f, double g) {
                                const double phi = phi_of(f, g);
                                return in_a(phi) ? std::log(phi) * g : 0.0;
                              },
                              "compensator over A")
                              .value;
      const double inner = integrate_smooth_signed(
                               s, lo, hi,
                               [&](double, double f, double g) {
                                 const double phi = phi_of(f, g);
                                 return in_a(phi) ? (std::log(phi) + 1.0 - phi) * g : 0.0;
                               },
                               "integral over A of (log phi + 1 - phi) d(mu)")
                               .value;
      const double outer = integrate_smooth_signed(
                               s, lo, hi,
                               [&](double, double f, double g) {
                                 const double phi = phi_of(f, g);
                                 return in_a(phi) || g == 0.0 ? 0.0 : g - f;
                               },
                               "integral over A^c of (1 - phi) d(mu)")
                               .value;
      shell_cache_.push_back({-comp, inner, outer});
    }
    return shell_cache_[n - 1];
  }

  /// Increment of the four terms contributed by shell n = (lower + n - 1, lower + n];
  /// the first shell also takes the left endpoint.
  std::array<double, 4> shell_terms(const PointPattern& eta, std::uint64_t n) const {
    const auto& s = pair_.smooth();
    const double lo = s.lower + static_cast<double>(n - 1), hi = lo + 1.0;
    const auto integrals = shell_integrals(n);
    std::array<double, 4> terms{integrals[0], 0.0, integrals[1], integrals[2]};
    for (const auto& p : eta.points) {
      const double x = p.coords[0];
      const bool inside = (n == 1 ? x >= lo : x > lo) && x <= hi;
      if (!inside) continue;
      const double phi = phi_at(p);
      const double v = static_cast<double>(p.multiplicity) * std::log(phi);
      (in_a(phi) ? terms[0] : terms[1]) += v;
    }
    return terms;
  }

  DensityPair pair_;
  std::unordered_map<std::string, std::size_t> index_;
  double compensator_ = 0.0;
  bool finite_masses_ = false;
  bool mutually_positive_ = false;
  mutable std::mutex cache_mutex_;
  mutable std::vector<std::array<double, 3>> shell_cache_;
};

/// log dP_lambda/dP_mu (eta) for finite intensities.
inline LogLikelihoodResult log_lr_finite(const DensityPair& pair, const PointPattern& eta) {
  return LikelihoodEvaluator(pair).finite(eta);
}

/// Compensated log-likelihood ratio for sigma-finite intensities with
/// lambda << mu and H(lambda, mu) < inf.
inline LogLikelihoodResult log_lr_sigma_finite(const DensityPair& pair, const PointPattern& eta,
                                               std::uint64_t n_max = 100, double tol = 1e-8) {
  return LikelihoodEvaluator(pair).sigma_finite(eta, n_max, tol);
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of R_alpha(P_lambda || P_mu) through the likelihood
/// ratio: KL = E_lambda[log Phi] for alpha = 1, otherwise
/// log E_mu[Phi^alpha] / (alpha - 1) with a delta-method standard error.
/// Replicate i uses stream (seed, i), so the result does not depend on the
/// number of workers.
inline MonteCarloEstimate mc_divergence_estimate(const DensityPair& pair, double alpha, std::uint64_t n_samples,
                                                 std::uint64_t seed, std::size_t workers = worker_count()) {
  if (!(alpha > 0.0 && alpha <= 2.0)) fail(ErrorCode::InvalidAlpha, "Monte Carlo estimates need alpha in (0, 2]");
  if (n_samples < 2) fail(ErrorCode::InvalidArgument, "need at least two samples");
  const LikelihoodEvaluator lr(pair);
  if (!lr.finite_masses()) fail(ErrorCode::InfiniteMass, "Monte Carlo estimates need finite intensities");
  const bool kl = std::abs(alpha - 1.0) < kKlBranchWidth;
  const IntensityModel source = kl ? pair.lambda_model() : pair.mu_model();
  std::vector<double> values(n_samples);
  parallel_for(
      n_samples,
      [&](std::size_t i) {
        Rng rng = Rng::stream(seed, i);
        const auto eta = sample_pp(source, Region{}, rng);
        values[i] = lr.finite(eta).log_lr;
      },
      workers);

  const double n = static_cast<double>(n_samples);
  if (kl) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
    return {mean, std::sqrt(var / n)};
  }
  // log-domain mean of exp(alpha * log_lr)
  double top = kNegInf;
  for (double v : values) top = std::max(top, alpha * v);
  if (std::isinf(top)) fail(ErrorCode::NonConvergent, "every sample fell outside the support set");
  double mean = 0.0;
  for (double v : values) mean += std::exp(alpha * v - top);
  mean /= n;
  double var = 0.0;
  for (double v : values) {
    const double d = std::exp(alpha * v - top) - mean;
    var += d * d;
  }
  var /= (n - 1.0);
  const double log_mean = top + std::log(mean);
  const double se_mean_rel = std::sqrt(var / n) / mean;
  return {log_mean / (alpha - 1.0), se_mean_rel / std::abs(alpha - 1.0)};
}

}  // namespace ppdiv
