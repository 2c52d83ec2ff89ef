#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ppdiv/measure.hpp"
#include "ppdiv/rng.hpp"

namespace ppdiv::testing {

/// Discrete pair on n atoms; each weight is zero with probability p_zero,
/// otherwise log-uniform on [1e-2, 1e1].
inline DensityPair random_discrete_pair(Rng& rng, std::size_t n, double p_zero = 0.2) {
  Discrete a, b;
  auto weight = [&] { return rng.uniform() < p_zero ? 0.0 : std::exp(std::log(1e-2) + rng.uniform() * std::log(1e3)); };
  for (std::size_t i = 0; i < n; ++i) {
    a.atoms.push_back({"a" + std::to_string(i), weight()});
    b.atoms.push_back({"a" + std::to_string(i), weight()});
  }
  return common_reference(a, b);
}

/// 1-d grid pair on [0, 2] with 1..6 and 1..6 cells (refined to their common grid).
inline DensityPair random_grid_pair(Rng& rng, double p_zero = 0.2) {
  auto make = [&] {
    Grid g;
    const std::size_t cells = 1 + rng.below(6);
    g.geometry = {{0.0}, {2.0}, {cells}};
    for (std::size_t i = 0; i < cells; ++i) g.values.push_back(rng.uniform() < p_zero ? 0.0 : 0.05 + 3.0 * rng.uniform());
    return g;
  };
  return common_reference(make(), make());
}

inline DensityPair random_pair(Rng& rng, std::size_t atoms = 5) {
  return rng.uniform() < 0.5 ? random_discrete_pair(rng, atoms) : random_grid_pair(rng);
}

/// Independent evaluation of the Poisson Renyi kernel in long double, straight
/// from the closed forms.
inline long double kernel_reference(long double s, long double t, long double alpha) {
  if (alpha == 0) return s == 0 ? t : 0;
  if (alpha == 1) {
    if (s == 0) return t;
    if (t == 0) return INFINITY;
    return s * std::log(s / t) + t - s;
  }
  if (s == 0) return t;
  if (t == 0) return alpha < 1 ? alpha * s / (1 - alpha) : INFINITY;
  return (alpha * s + (1 - alpha) * t - std::pow(s, alpha) * std::pow(t, 1 - alpha)) / (1 - alpha);
}

/// T_alpha of a tabulated pair by direct summation with kernel_reference.
inline long double tsallis_reference(const TabulatedPair& t, double alpha) {
  long double total = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const long double v = kernel_reference(t.f[i], t.g[i], alpha);
    if (std::isinf(v)) {
      if (t.weight[i] > 0) return INFINITY;
      continue;
    }
    total += t.weight[i] * v;
  }
  return total;
}

/// A discrete base pair with location-dependent discrete mark kernels K, L on
/// a shared mark reference, together with the flattened product-space pair.
struct MarkedCase {
  DensityPair base;
  MarkedModel k;
  MarkedModel l;
  DensityPair flat;
};

inline std::vector<double> random_pmf(Rng& rng, std::size_t n, double p_zero) {
  std::vector<double> p(n);
  double total = 0;
  for (auto& v : p) total += (v = rng.uniform() < p_zero ? 0.0 : rng.uniform());
  if (total == 0) {
    p[rng.below(n)] = 1;
    return p;
  }
  for (auto& v : p) v /= total;
  return p;
}

inline MarkedCase random_marked_case(Rng& rng, std::size_t atoms = 4, std::size_t marks = 3) {
  Discrete a, b;
  std::vector<std::vector<double>> kt, lt;
  for (std::size_t i = 0; i < atoms; ++i) {
    const auto id = "t" + std::to_string(i);
    a.atoms.push_back({id, rng.uniform() < 0.2 ? 0.0 : 3 * rng.uniform()});
    b.atoms.push_back({id, rng.uniform() < 0.2 ? 0.0 : 3 * rng.uniform()});
    kt.push_back(random_pmf(rng, marks, 0.25));
    lt.push_back(random_pmf(rng, marks, 0.25));
  }
  std::vector<double> values;
  for (std::size_t j = 0; j < marks; ++j) values.push_back(static_cast<double>(j) + 1);
  auto kernel = [&](std::vector<std::vector<double>> table) {
    MarkKernel k;
    k.reference = MarkReference::discrete(values);
    k.density = [table](const Location& where, std::size_t j) { return table[std::stoul(where.atom.substr(1))][j]; };
    return k;
  };
  Discrete fa, fb;
  for (std::size_t i = 0; i < atoms; ++i) {
    for (std::size_t j = 0; j < marks; ++j) {
      const auto id = "t" + std::to_string(i) + "x" + std::to_string(j);
      fa.atoms.push_back({id, a.atoms[i].weight * kt[i][j]});
      fb.atoms.push_back({id, b.atoms[i].weight * lt[i][j]});
    }
  }
  return {common_reference(a, b), make_marked(a, kernel(kt)), make_marked(b, kernel(lt)), common_reference(fa, fb)};
}

}  // namespace ppdiv::testing
