#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "ppdiv/divergence.hpp"
#include "ppdiv/error.hpp"
#include "ppdiv/extended_value.hpp"
#include "ppdiv/measure.hpp"
#include "ppdiv/parallel.hpp"
#include "ppdiv/rng.hpp"

namespace ppdiv {

struct ChernoffResult {
  ExtendedValue value;
  double argmax_alpha = 0.5;
  std::uintmax_t iterations = 0;
  /// Width of the coarse-grid bracket handed to the refinement.
  double bracket_width = 0.0;
  std::vector<std::string> notes;
};

inline constexpr double kChernoffEdge = 1e-6;
inline constexpr int kChernoffCoarse = 32;
inline constexpr int kChernoffBits = 30;  // alpha tolerance 2^-29, about 1e-9

/// (1 - alpha) T_alpha(lambda || mu), the objective of the Chernoff information.
inline ExtendedValue chernoff_objective(const DensityPair& pair, double alpha) {
  return (1.0 - alpha) * tsallis(pair, alpha).value;
}

/// Chernoff information C = sup over alpha in (0, 1) of (1 - alpha) T_alpha(lambda || mu).
/// A 32-point grid on [1e-6, 1 - 1e-6] picks the best basin, then Brent's
/// method (golden section with parabolic steps) refines it.
inline ChernoffResult chernoff_info(const DensityPair& pair) {
  ChernoffResult out;
  std::array<double, kChernoffCoarse> grid{};
  std::array<ExtendedValue, kChernoffCoarse> values{};
  std::size_t best = 0;
  for (int i = 0; i < kChernoffCoarse; ++i) {
    grid[i] = kChernoffEdge + (1.0 - 2.0 * kChernoffEdge) * i / (kChernoffCoarse - 1);
    values[i] = chernoff_objective(pair, grid[i]);
    if (values[i].is_infinite()) {
      out.value = ExtendedValue::infinity();
      out.argmax_alpha = grid[i];
      out.notes.push_back("objective is +inf at alpha=" + detail::format_double(grid[i]) + ": singular pair");
      return out;
    }
    if (values[i] > values[best]) best = static_cast<std::size_t>(i);
  }
  if (values[best].value() == 0.0) {
    out.value = ExtendedValue::zero();
    out.argmax_alpha = 0.5;
    out.notes.push_back("objective vanishes on the grid: lambda = mu");
    return out;
  }
  const double lo = grid[best == 0 ? 0 : best - 1];
  const double hi = grid[std::min<std::size_t>(best + 1, kChernoffCoarse - 1)];
  out.bracket_width = hi - lo;
  std::uintmax_t iterations = 200;
  const auto [alpha, neg] = boost::math::tools::brent_find_minima(
      [&](double a) { return -chernoff_objective(pair, a).value(); }, lo, hi, kChernoffBits, iterations);
  out.iterations = iterations;
  if (-neg >= values[best].value()) {
    out.value = ExtendedValue::clamped(-neg);
    out.argmax_alpha = alpha;
  } else {
    out.value = values[best];
    out.argmax_alpha = grid[best];
  }
  return out;
}

struct RiskEstimate {
  double risk = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo Bayes risk of the optimal test of H0: Poi(lambda) against
/// H1: Poi(mu) from n iid Poisson vectors. The test decides H0 when the
/// summed log-likelihood ratio log dP_lambda/dP_mu is at least
/// log(prior1 / prior0). Trial i uses stream (seed, i).
inline RiskEstimate bayes_risk_sim(const DensityPair& pair, double prior0, std::uint64_t n, std::uint64_t trials,
                                   std::uint64_t seed, std::size_t workers = worker_count()) {
  if (!pair.is_tabulated() || pair.tabulated().support != TabulatedPair::Support::Atoms) {
    fail(ErrorCode::DomainMismatch, "Bayes risk simulation needs discrete models");
  }
  if (!(prior0 >= 0.0 && prior0 <= 1.0)) fail(ErrorCode::InvalidArgument, "prior0 must lie in [0, 1]");
  if (n == 0 || trials == 0) fail(ErrorCode::InvalidArgument, "n and trials must be positive");
  const auto& t = pair.tabulated();
  const std::size_t k = t.size();
  std::vector<double> lambda(k), mu(k), log_phi(k);
  double compensator = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    lambda[i] = t.weight[i] * t.f[i];
    mu[i] = t.weight[i] * t.g[i];
    compensator += mu[i] - lambda[i];
    if (lambda[i] == 0.0 && mu[i] == 0.0) log_phi[i] = 0.0;
    else if (mu[i] == 0.0) log_phi[i] = kInf;
    else if (lambda[i] == 0.0) log_phi[i] = -kInf;
    else log_phi[i] = std::log(lambda[i] / mu[i]);
  }
  const double threshold = std::log1p(-prior0) - std::log(prior0);  // log(prior1 / prior0)
  std::vector<unsigned char> error(trials, 0);
  parallel_for(
      trials,
      [&](std::size_t trial) {
        Rng rng = Rng::stream(seed, trial);
        const bool h1 = rng.uniform() >= prior0;
        const auto& mean = h1 ? mu : lambda;
        double stat = static_cast<double>(n) * compensator;
        for (std::uint64_t r = 0; r < n; ++r) {
          for (std::size_t i = 0; i < k; ++i) {
            const auto c = rng.poisson(mean[i]);
            if (c > 0) stat += static_cast<double>(c) * log_phi[i];
          }
        }
        const bool decide_h1 = !(stat >= threshold);
        error[trial] = decide_h1 != h1;
      },
      workers);
  std::uint64_t errors = 0;
  for (auto e : error) errors += e;
  const double p = static_cast<double>(errors) / static_cast<double>(trials);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

}  // namespace ppdiv
