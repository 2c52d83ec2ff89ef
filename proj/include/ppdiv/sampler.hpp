#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ppdiv/error.hpp"
#include "ppdiv/measure.hpp"
#include "ppdiv/quadrature.hpp"
#include "ppdiv/rng.hpp"

namespace ppdiv {

namespace detail {

/// Intersection of a cell [lo, hi] with a window box; empty when any side
/// has non-positive length.
inline bool clip_box(std::vector<double>& lo, std::vector<double>& hi, const Box& w) {
  for (std::size_t k = 0; k < lo.size(); ++k) {
    lo[k] = std::max(lo[k], w.lower[k]);
    hi[k] = std::min(hi[k], w.upper[k]);
    if (!(lo[k] < hi[k])) return false;
  }
  return true;
}

/// Index drawn with probability proportional to cumulative[i] - cumulative[i-1].
inline std::size_t draw_categorical(const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  auto i = static_cast<std::size_t>(it - cumulative.begin());
  // skip zero-width entries that upper_bound can land on at the top end
  while (i > 0 && (i >= cumulative.size() || cumulative[i] == cumulative[i - 1])) --i;
  return i;
}

inline double smooth_bound(const Smooth& s, double lo, double hi) {
  if (s.bound) return *s.bound;
  double best = 0.0;
  constexpr int kGrid = 1024;
  for (int i = 0; i <= kGrid; ++i) {
    const double x = lo + (hi - lo) * i / kGrid;
    const double v = s.density(x);
    if (!std::isfinite(v)) fail(ErrorCode::ThinningBoundMissing, "density is unbounded on the sampling window");
    best = std::max(best, v);
  }
  return 1.25 * best;
}

}  // namespace detail

/// The effective sampling window of a model: the model's own domain when the
/// requested region is "everything".
inline Region effective_window(const IntensityModel& model, const Region& window) {
  if (!std::holds_alternative<std::monostate>(window)) return window;
  switch (model.kind()) {
    case ModelKind::Discrete: {
      AtomSet all;
      for (const auto& a : model.discrete().atoms) all.ids.push_back(a.id);
      return all;
    }
    case ModelKind::Grid: return Box{model.grid().geometry.lower, model.grid().geometry.upper};
    case ModelKind::Smooth: return interval(model.smooth().lower, model.smooth().upper);
  }
  return window;
}

/// lambda(window).
inline ExtendedValue mass_on(const IntensityModel& model, const Region& window) {
  const Region w = effective_window(model, window);
  switch (model.kind()) {
    case ModelKind::Discrete: {
      const auto* set = std::get_if<AtomSet>(&w);
      if (!set) fail(ErrorCode::DomainMismatch, "discrete models take atom-set windows");
      double s = 0.0;
      for (const auto& a : model.discrete().atoms) {
        if (set->contains(a.id)) s += a.weight;
      }
      return ExtendedValue(s);
    }
    case ModelKind::Grid: {
      const auto* box = std::get_if<Box>(&w);
      const auto& g = model.grid();
      if (!box || box->lower.size() != g.geometry.dim()) fail(ErrorCode::DomainMismatch, "grid window must be a box");
      double s = 0.0;
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        auto lo = g.geometry.cell_lower(i), hi = g.geometry.cell_upper(i);
        if (!detail::clip_box(lo, hi, *box)) continue;
        double vol = 1.0;
        for (std::size_t k = 0; k < lo.size(); ++k) vol *= hi[k] - lo[k];
        s += g.values[i] * vol;
      }
      return ExtendedValue(s);
    }
    case ModelKind::Smooth: {
      const auto* box = std::get_if<Box>(&w);
      if (!box || box->lower.size() != 1) fail(ErrorCode::DomainMismatch, "smooth window must be an interval");
      const auto& s = model.smooth();
      const double lo = std::max(s.lower, box->lower[0]), hi = std::min(s.upper, box->upper[0]);
      if (!(lo < hi)) return ExtendedValue::zero();
      auto r = integrate([&](double x) { return detail::checked_density(s.density, x); }, lo, hi, s.quadrature);
      if (!r.converged) {
        if (std::isinf(hi)) return ExtendedValue::infinity();
        fail(ErrorCode::QuadratureFailure, "window mass did not converge");
      }
      return ExtendedValue::clamped(r.value);
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown model kind");
}

/// Draws a Poisson process restricted to window. Discrete and grid models:
/// N ~ Poisson(lambda(window)) followed by N iid locations from the
/// normalised restriction (atom, or cell then uniform within the cell).
/// Smooth models: thinning of a homogeneous process at the density bound.
inline PointPattern sample_pp(const IntensityModel& model, const Region& window, Rng& rng) {
  const Region w = effective_window(model, window);
  PointPattern out;
  out.window = w;
  switch (model.kind()) {
    case ModelKind::Discrete: {
      const auto* set = std::get_if<AtomSet>(&w);
      if (!set) fail(ErrorCode::DomainMismatch, "discrete models take atom-set windows");
      std::vector<const Atom*> atoms;
      std::vector<double> cumulative;
      double total = 0.0;
      for (const auto& a : model.discrete().atoms) {
        if (!set->contains(a.id) || a.weight == 0.0) continue;
        total += a.weight;
        atoms.push_back(&a);
        cumulative.push_back(total);
      }
      const std::uint64_t n = rng.poisson(total);
      std::vector<std::uint64_t> counts(atoms.size(), 0);
      for (std::uint64_t i = 0; i < n; ++i) ++counts[detail::draw_categorical(cumulative, rng)];
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (counts[i] > 0) out.points.push_back({{}, atoms[i]->id, std::nullopt, counts[i]});
      }
      return out;
    }
    case ModelKind::Grid: {
      const auto* box = std::get_if<Box>(&w);
      const auto& g = model.grid();
      if (!box || box->lower.size() != g.geometry.dim()) fail(ErrorCode::DomainMismatch, "grid window must be a box");
      std::vector<std::pair<std::vector<double>, std::vector<double>>> parts;
      std::vector<double> cumulative;
      double total = 0.0;
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        auto lo = g.geometry.cell_lower(i), hi = g.geometry.cell_upper(i);
        if (g.values[i] == 0.0 || !detail::clip_box(lo, hi, *box)) continue;
        double vol = 1.0;
        for (std::size_t k = 0; k < lo.size(); ++k) vol *= hi[k] - lo[k];
        total += g.values[i] * vol;
        cumulative.push_back(total);
        parts.emplace_back(std::move(lo), std::move(hi));
      }
      if (!std::isfinite(total)) fail(ErrorCode::InfiniteWindowMass, "window mass is not finite");
      const std::uint64_t n = rng.poisson(total);
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto& [lo, hi] = parts[detail::draw_categorical(cumulative, rng)];
        Point p;
        for (std::size_t k = 0; k < lo.size(); ++k) p.coords.push_back(lo[k] + rng.uniform() * (hi[k] - lo[k]));
        out.points.push_back(std::move(p));
      }
      return out;
    }
    case ModelKind::Smooth: {
      const auto* box = std::get_if<Box>(&w);
      if (!box || box->lower.size() != 1) fail(ErrorCode::DomainMismatch, "smooth window must be an interval");
      const auto& s = model.smooth();
      const double lo = std::max(s.lower, box->lower[0]), hi = std::min(s.upper, box->upper[0]);
      if (!(lo < hi)) return out;
      if (std::isinf(hi)) fail(ErrorCode::InfiniteWindowMass, "sampling window must be bounded");
      const double bound = detail::smooth_bound(s, lo, hi);
      if (!std::isfinite(bound)) fail(ErrorCode::ThinningBoundMissing, "no finite density bound");
      const std::uint64_t n = rng.poisson(bound * (hi - lo));
      std::vector<double> xs;
      for (std::uint64_t i = 0; i < n; ++i) {
        const double x = lo + rng.uniform() * (hi - lo);
        const double v = detail::checked_density(s.density, x);
        if (v > bound * (1.0 + 1e-12)) {
          fail(ErrorCode::ThinningBoundMissing, "density exceeds the thinning bound at x=" + detail::format_double(x));
        }
        if (rng.uniform() * bound < v) xs.push_back(x);
      }
      for (double x : xs) out.points.push_back({{x}, {}, std::nullopt, 1});
      return out;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown model kind");
}

/// Marked Poisson process: base pattern from sample_pp, then one mark per
/// point drawn independently from K_t at the point's location.
inline PointPattern sample_marked(const MarkedModel& model, const Region& window, Rng& rng) {
  auto base = sample_pp(model.base, window, rng);
  const auto& ref = model.kernel.reference;
  PointPattern out;
  out.window = base.window;
  std::vector<double> cumulative(ref.size());
  for (const auto& p : base.points) {
    const auto loc = p.location();
    double total = 0.0;
    for (std::size_t j = 0; j < ref.size(); ++j) {
      total += model.kernel.density(loc, j) * ref.weight(j);
      cumulative[j] = total;
    }
    if (!(total > 0.0)) fail(ErrorCode::InvalidKernel, "mark kernel has no mass at a sampled location");
    std::map<std::size_t, std::uint64_t> drawn;
    std::vector<double> continuous;
    for (std::uint64_t m = 0; m < p.multiplicity; ++m) {
      const std::size_t j = detail::draw_categorical(cumulative, rng);
      if (ref.kind == MarkReference::Kind::Discrete) ++drawn[j];
      else continuous.push_back(ref.cell_lower(j) + rng.uniform() * ref.weight(j));
    }
    for (auto [j, n] : drawn) out.points.push_back({p.coords, p.atom, ref.values[j], n});
    for (double x : continuous) out.points.push_back({p.coords, p.atom, x, 1});
  }
  return out;
}

/// Right-continuous piecewise-constant path t -> value, with value 0 before
/// the first jump.
struct StepPath {
  std::vector<double> times;   // strictly increasing jump times
  std::vector<double> values;  // path value from times[i] on

  double operator()(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0.0;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }
  std::size_t jumps() const noexcept { return times.size(); }
};

namespace detail {

template <class Increment>
StepPath cumulative_path(const PointPattern& eta, Increment increment) {
  std::vector<std::pair<double, double>> events;
  for (const auto& p : eta.points) {
    if (p.coords.size() != 1) fail(ErrorCode::InvalidArgument, "paths need a 1-d temporal pattern");
    events.emplace_back(p.coords[0], increment(p));
  }
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  StepPath path;
  double level = 0.0;
  for (const auto& [t, dx] : events) {
    level += dx;
    if (!path.times.empty() && path.times.back() == t) path.values.back() = level;
    else {
      path.times.push_back(t);
      path.values.push_back(level);
    }
  }
  return path;
}

}  // namespace detail

/// Counting process t -> eta([0, t]).
inline StepPath counting_path(const PointPattern& eta) {
  return detail::cumulative_path(eta, [](const Point& p) { return static_cast<double>(p.multiplicity); });
}

/// Compound process t -> sum of the marks of points at times <= t.
inline StepPath compound_path(const PointPattern& eta) {
  return detail::cumulative_path(eta, [](const Point& p) {
    if (!p.mark) fail(ErrorCode::InvalidArgument, "compound path needs marked points");
    return *p.mark * static_cast<double>(p.multiplicity);
  });
}

}  // namespace ppdiv
