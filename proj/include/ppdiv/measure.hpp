#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "ppdiv/error.hpp"
#include "ppdiv/expression.hpp"
#include "ppdiv/extended_value.hpp"
#include "ppdiv/quadrature.hpp"

namespace ppdiv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Grid geometry
// ---------------------------------------------------------------------------

/// Regular partition of an axis-aligned box into cells, indexed row-major
/// (last axis fastest).
struct GridGeometry {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> cells;

  std::size_t dim() const noexcept { return cells.size(); }

  std::size_t cell_count() const noexcept {
    return std::accumulate(cells.begin(), cells.end(), std::size_t{1}, std::multiplies<>());
  }

  double width(std::size_t axis) const { return (upper[axis] - lower[axis]) / static_cast<double>(cells[axis]); }

  double cell_volume() const {
    double v = 1.0;
    for (std::size_t k = 0; k < dim(); ++k) v *= width(k);
    return v;
  }

  std::vector<std::size_t> unravel(std::size_t index) const {
    std::vector<std::size_t> multi(dim());
    for (std::size_t k = dim(); k-- > 0;) {
      multi[k] = index % cells[k];
      index /= cells[k];
    }
    return multi;
  }

  std::vector<double> cell_lower(std::size_t index) const {
    auto multi = unravel(index);
    std::vector<double> out(dim());
    for (std::size_t k = 0; k < dim(); ++k) out[k] = lower[k] + static_cast<double>(multi[k]) * width(k);
    return out;
  }

  std::vector<double> cell_upper(std::size_t index) const {
    auto lo = cell_lower(index);
    for (std::size_t k = 0; k < dim(); ++k) lo[k] += width(k);
    return lo;
  }

  std::vector<double> cell_center(std::size_t index) const {
    auto lo = cell_lower(index);
    for (std::size_t k = 0; k < dim(); ++k) lo[k] += 0.5 * width(k);
    return lo;
  }

  bool contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t k = 0; k < dim(); ++k) {
      if (!(x[k] >= lower[k] && x[k] <= upper[k])) return false;
    }
    return true;
  }

  /// Cell holding x. Points on a shared cell boundary go to the lower-index
  /// cell along that axis.
  std::optional<std::size_t> locate(std::span<const double> x) const {
    if (!contains(x)) return std::nullopt;
    std::size_t index = 0;
    for (std::size_t k = 0; k < dim(); ++k) {
      const double pos = (x[k] - lower[k]) / width(k);
      auto c = static_cast<std::ptrdiff_t>(std::ceil(pos)) - 1;
      c = std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(cells[k]) - 1);
      index = index * cells[k] + static_cast<std::size_t>(c);
    }
    return index;
  }

  void validate() const {
    if (lower.size() != upper.size() || lower.size() != cells.size() || cells.empty()) {
      fail(ErrorCode::InvalidArgument, "grid lower/upper/cells must have equal nonzero length");
    }
    for (std::size_t k = 0; k < dim(); ++k) {
      if (!(std::isfinite(lower[k]) && std::isfinite(upper[k]) && lower[k] < upper[k])) {
        fail(ErrorCode::InvalidArgument, "grid box must be finite with lower < upper");
      }
      if (cells[k] == 0) fail(ErrorCode::InvalidArgument, "grid needs at least one cell per axis");
    }
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

namespace detail {

/// Best rational approximation p/q of x with q <= max_den, by continued
/// fractions. Returns nullopt when no such fraction is within rel_tol.
inline std::optional<std::pair<std::uint64_t, std::uint64_t>> rational_approx(double x, double rel_tol = 1e-12,
                                                                               std::uint64_t max_den = 10'000) {
  if (!(x > 0.0) || !std::isfinite(x)) return std::nullopt;
  double h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(r);
    const double h2 = a * h1 + h0, k2 = a * k1 + k0;
    if (k2 > static_cast<double>(max_den)) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    if (std::abs(h1 / k1 - x) <= rel_tol * x) {
      return std::make_pair(static_cast<std::uint64_t>(h1), static_cast<std::uint64_t>(k1));
    }
    const double frac = r - a;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

inline bool near_integer(double v, double tol = 1e-7) { return std::abs(v - std::round(v)) <= tol * std::max(1.0, std::abs(v)); }

}  // namespace detail

/// Common refinement of two grids: per axis the finest regular partition of
/// the union box whose edges include the edges of both inputs. Fails with
/// DomainMismatch for disjoint boxes or incommensurable cell widths.
inline GridGeometry common_refinement(const GridGeometry& a, const GridGeometry& b) {
  if (a.dim() != b.dim()) fail(ErrorCode::DomainMismatch, "grids of different dimension");
  GridGeometry out;
  bool overlap = true;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    if (!(std::max(a.lower[k], b.lower[k]) < std::min(a.upper[k], b.upper[k]))) overlap = false;
    const double wa = a.width(k), wb = b.width(k);
    const auto ratio = detail::rational_approx(wa / wb);
    if (!ratio) fail(ErrorCode::DomainMismatch, "grid cell widths have no common refinement");
    const double w = wa / static_cast<double>(ratio->first);
    const double lo = std::min(a.lower[k], b.lower[k]);
    const double hi = std::max(a.upper[k], b.upper[k]);
    const double n = (hi - lo) / w;
    if (!detail::near_integer(n) || !detail::near_integer((a.lower[k] - lo) / w) ||
        !detail::near_integer((b.lower[k] - lo) / w)) {
      fail(ErrorCode::DomainMismatch, "grid edges are not aligned on a common lattice");
    }
    out.lower.push_back(lo);
    out.upper.push_back(hi);
    out.cells.push_back(static_cast<std::size_t>(std::llround(n)));
  }
  if (!overlap) fail(ErrorCode::DomainMismatch, "grid boxes are disjoint");
  return out;
}

// ---------------------------------------------------------------------------
// Intensity models
// ---------------------------------------------------------------------------

struct Atom {
  std::string id;
  double weight = 0.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite sum of weighted point masses.
struct Discrete {
  std::vector<Atom> atoms;
  friend bool operator==(const Discrete&, const Discrete&) = default;
};

/// Piecewise-constant Lebesgue density on a regular grid.
struct Grid {
  GridGeometry geometry;
  std::vector<double> values;
  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Lebesgue density on an interval [lower, upper]; upper may be +inf, in
/// which case the model may be sigma-finite with truncations [lower, lower+n].
struct Smooth {
  double lower = 0.0;
  double upper = kInf;
  std::function<double(double)> density;
  /// Source text when the density came from an expression; required for
  /// serialisation.
  std::string expression;
  QuadratureSpec quadrature;
  /// Upper bound on the density, used for thinning.
  std::optional<double> bound;

  static Smooth from_expression(double lower, double upper, const std::string& source,
                                QuadratureSpec quad = {}, std::optional<double> bound = std::nullopt) {
    Expression expr(source, {"x"});
    return Smooth{lower, upper, [expr](double x) { return expr(x); }, source, quad, bound};
  }

  friend bool operator==(const Smooth& a, const Smooth& b) {
    return a.lower == b.lower && a.upper == b.upper && !a.expression.empty() && a.expression == b.expression &&
           a.quadrature == b.quadrature && a.bound == b.bound;
  }
};

enum class ModelKind { Discrete, Grid, Smooth };

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Discrete: return "discrete";
    case ModelKind::Grid: return "grid";
    case ModelKind::Smooth: return "smooth";
  }
  return "?";
}

/// An intensity measure in one of three concrete representations. Immutable
/// after construction; the constructor validates the representation.
class IntensityModel {
 public:
  using Rep = std::variant<Discrete, Grid, Smooth>;

  IntensityModel(Discrete d) : rep_(std::move(d)) { validate(); }
  IntensityModel(Grid g) : rep_(std::move(g)) { validate(); }
  IntensityModel(Smooth s) : rep_(std::move(s)) { validate(); }

  ModelKind kind() const noexcept { return static_cast<ModelKind>(rep_.index()); }
  const Rep& rep() const noexcept { return rep_; }
  const Discrete& discrete() const { return std::get<Discrete>(rep_); }
  const Grid& grid() const { return std::get<Grid>(rep_); }
  const Smooth& smooth() const { return std::get<Smooth>(rep_); }

  friend bool operator==(const IntensityModel&, const IntensityModel&) = default;

 private:
  void validate() const {
    if (auto* d = std::get_if<Discrete>(&rep_)) {
      std::unordered_map<std::string, int> seen;
      for (const auto& a : d->atoms) {
        if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) {
          fail(ErrorCode::InvalidArgument, "atom weight must be finite and >= 0");
        }
        if (seen[a.id]++) fail(ErrorCode::InvalidArgument, "duplicate atom id '" + a.id + "'");
      }
    } else if (auto* g = std::get_if<Grid>(&rep_)) {
      g->geometry.validate();
      if (g->values.size() != g->geometry.cell_count()) {
        fail(ErrorCode::InvalidArgument, "grid value count does not match cell count");
      }
      for (double v : g->values) {
        if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "grid values must be finite and >= 0");
      }
    } else {
      const auto& s = std::get<Smooth>(rep_);
      if (!s.density) fail(ErrorCode::InvalidArgument, "smooth model without density");
      if (!(std::isfinite(s.lower) && s.lower < s.upper)) {
        fail(ErrorCode::InvalidArgument, "smooth domain must be [lower, upper] with finite lower < upper");
      }
      if (s.bound && !(*s.bound >= 0.0)) fail(ErrorCode::InvalidArgument, "density bound must be >= 0");
    }
  }

  Rep rep_;
};

namespace detail {

inline double checked_density(const std::function<double(double)>& fn, double x) {
  const double v = fn(x);
  if (!(v >= 0.0) || std::isinf(v)) {
    fail(ErrorCode::InvalidArgument, "density must be finite and >= 0 (got " + detail::format_double(v) + " at x=" +
                                         detail::format_double(x) + ")");
  }
  return v;
}

/// Values of a grid model resampled onto a refinement of its geometry;
/// cells outside the source box get density zero.
inline std::vector<double> resample(const Grid& grid, const GridGeometry& target) {
  std::vector<double> out(target.cell_count(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto c = target.cell_center(i);
    if (auto src = grid.geometry.locate(c)) out[i] = grid.values[*src];
  }
  return out;
}

}  // namespace detail

/// c * m for finite c >= 0.
inline IntensityModel scale(double c, const IntensityModel& m) {
  if (!(c >= 0.0) || !std::isfinite(c)) fail(ErrorCode::InvalidArgument, "scale factor must be finite and >= 0");
  switch (m.kind()) {
    case ModelKind::Discrete: {
      auto d = m.discrete();
      for (auto& a : d.atoms) a.weight *= c;
      return d;
    }
    case ModelKind::Grid: {
      auto g = m.grid();
      for (auto& v : g.values) v *= c;
      return g;
    }
    case ModelKind::Smooth: {
      auto s = m.smooth();
      auto inner = s.density;
      s.density = [inner, c](double x) { return c * inner(x); };
      if (!s.expression.empty()) s.expression = detail::format_double(c) + " * (" + s.expression + ")";
      if (s.bound) *s.bound *= c;
      return s;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown model kind");
}

/// Sum of models of one class. Grids are summed on their common refinement;
/// smooth models on the union of their domains (zero outside each).
inline IntensityModel sum(std::span<const IntensityModel> models) {
  if (models.empty()) fail(ErrorCode::InvalidArgument, "sum of zero models");
  const ModelKind kind = models.front().kind();
  for (const auto& m : models) {
    if (m.kind() != kind) fail(ErrorCode::DomainMismatch, "sum of models of different classes");
  }
  switch (kind) {
    case ModelKind::Discrete: {
      Discrete out;
      std::unordered_map<std::string, std::size_t> where;
      for (const auto& m : models) {
        for (const auto& a : m.discrete().atoms) {
          auto [it, fresh] = where.emplace(a.id, out.atoms.size());
          if (fresh) out.atoms.push_back(a);
          else out.atoms[it->second].weight += a.weight;
        }
      }
      return out;
    }
    case ModelKind::Grid: {
      GridGeometry geom = models.front().grid().geometry;
      for (const auto& m : models.subspan(1)) geom = common_refinement(geom, m.grid().geometry);
      std::vector<double> values(geom.cell_count(), 0.0);
      for (const auto& m : models) {
        const auto part = detail::resample(m.grid(), geom);
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += part[i];
      }
      return Grid{std::move(geom), std::move(values)};
    }
    case ModelKind::Smooth: {
      std::vector<Smooth> parts;
      double lo = kInf, hi = -kInf;
      bool all_expr = true, all_bound = true;
      double bound = 0.0;
      QuadratureSpec quad = models.front().smooth().quadrature;
      std::string expr;
      for (const auto& m : models) {
        const auto& s = m.smooth();
        parts.push_back(s);
        lo = std::min(lo, s.lower);
        hi = std::max(hi, s.upper);
        all_expr = all_expr && !s.expression.empty();
        all_bound = all_bound && s.bound.has_value();
        if (s.bound) bound += *s.bound;
        quad.abs_tol = std::min(quad.abs_tol, s.quadrature.abs_tol);
        quad.rel_tol = std::min(quad.rel_tol, s.quadrature.rel_tol);
        quad.max_subdivisions = std::max(quad.max_subdivisions, s.quadrature.max_subdivisions);
      }
      bool same_domain = true;
      for (const auto& s : parts) same_domain = same_domain && s.lower == lo && s.upper == hi;
      Smooth out;
      out.lower = lo;
      out.upper = hi;
      out.quadrature = quad;
      if (all_bound) out.bound = bound;
      out.density = [parts](double x) {
        double total = 0.0;
        for (const auto& s : parts) {
          if (x >= s.lower && x <= s.upper) total += s.density(x);
        }
        return total;
      };
      if (all_expr && same_domain) {
        for (std::size_t i = 0; i < parts.size(); ++i) {
          expr += (i ? " + (" : "(") + parts[i].expression + ")";
        }
        out.expression = expr;
      }
      return out;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown model kind");
}

inline IntensityModel sum(const IntensityModel& a, const IntensityModel& b) {
  const IntensityModel both[] = {a, b};
  return sum(std::span<const IntensityModel>(both));
}

/// Total mass lambda(S). For smooth models on a half-line a non-convergent
/// integral is reported as +inf (sigma-finite: every truncation
/// [lower, lower+n] still has finite mass).
inline ExtendedValue total_mass(const IntensityModel& m) {
  switch (m.kind()) {
    case ModelKind::Discrete: {
      double s = 0.0;
      for (const auto& a : m.discrete().atoms) s += a.weight;
      return ExtendedValue(s);
    }
    case ModelKind::Grid: {
      const auto& g = m.grid();
      double s = 0.0;
      for (double v : g.values) s += v;
      return ExtendedValue(s * g.geometry.cell_volume());
    }
    case ModelKind::Smooth: {
      const auto& s = m.smooth();
      auto r = integrate([&](double x) { return detail::checked_density(s.density, x); }, s.lower, s.upper,
                         s.quadrature);
      if (r.converged) return ExtendedValue::clamped(r.value);
      if (std::isinf(s.upper)) return ExtendedValue::infinity();
      fail(ErrorCode::QuadratureFailure, "mass of smooth model did not converge");
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown model kind");
}

/// Infinite total mass with finite mass on every truncation window.
inline bool is_sigma_finite(const IntensityModel& m) {
  return m.kind() == ModelKind::Smooth && std::isinf(m.smooth().upper) && total_mass(m).is_infinite();
}

// ---------------------------------------------------------------------------
// Regions and point patterns
// ---------------------------------------------------------------------------

/// Closed axis-aligned box; upper bounds may be +inf.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  bool contains(std::span<const double> x) const {
    if (x.size() != lower.size()) return false;
    for (std::size_t k = 0; k < lower.size(); ++k) {
      if (!(x[k] >= lower[k] && x[k] <= upper[k])) return false;
    }
    return true;
  }
  bool contains(const Box& other) const {
    if (other.lower.size() != lower.size()) return false;
    for (std::size_t k = 0; k < lower.size(); ++k) {
      if (other.lower[k] < lower[k] || other.upper[k] > upper[k]) return false;
    }
    return true;
  }
  friend bool operator==(const Box&, const Box&) = default;
};

struct AtomSet {
  std::vector<std::string> ids;
  bool contains(const std::string& id) const { return std::find(ids.begin(), ids.end(), id) != ids.end(); }
  friend bool operator==(const AtomSet&, const AtomSet&) = default;
};

/// A sub-domain: everything (monostate), a box, or a set of atoms.
using Region = std::variant<std::monostate, Box, AtomSet>;

inline Region interval(double lo, double hi) { return Box{{lo}, {hi}}; }

inline bool region_within(const Region& inner, const Region& outer) {
  if (std::holds_alternative<std::monostate>(outer)) return true;
  if (std::holds_alternative<std::monostate>(inner)) return false;
  if (auto* ob = std::get_if<Box>(&outer)) {
    auto* ib = std::get_if<Box>(&inner);
    return ib && ob->contains(*ib);
  }
  const auto& oa = std::get<AtomSet>(outer);
  auto* ia = std::get_if<AtomSet>(&inner);
  if (!ia) return false;
  return std::all_of(ia->ids.begin(), ia->ids.end(), [&](const auto& id) { return oa.contains(id); });
}

/// Where a point or mark kernel lives: coordinates for grid and smooth
/// models, an atom id for discrete ones.
struct Location {
  std::vector<double> coords;
  std::string atom;
};

struct Point {
  std::vector<double> coords;
  std::string atom;
  std::optional<double> mark;
  std::uint64_t multiplicity = 1;

  Location location() const { return {coords, atom}; }
  friend bool operator==(const Point&, const Point&) = default;
};

inline bool region_contains(const Region& r, const Point& p) {
  if (std::holds_alternative<std::monostate>(r)) return true;
  if (auto* b = std::get_if<Box>(&r)) return p.atom.empty() && b->contains(p.coords);
  return !p.atom.empty() && std::get<AtomSet>(r).contains(p.atom);
}

/// Finite multiset of points, optionally with the window it was observed in.
struct PointPattern {
  std::vector<Point> points;
  std::optional<Region> window;

  std::uint64_t size() const {
    std::uint64_t n = 0;
    for (const auto& p : points) n += p.multiplicity;
    return n;
  }

  void validate() const {
    for (const auto& p : points) {
      if (p.multiplicity < 1) fail(ErrorCode::InvalidArgument, "multiplicity must be >= 1");
      if (window && !region_contains(*window, p)) fail(ErrorCode::OutOfWindow, "point outside pattern window");
    }
  }
  friend bool operator==(const PointPattern&, const PointPattern&) = default;
};

/// eta(region): summed multiplicities of the points in region.
inline std::uint64_t count(const PointPattern& pattern, const Region& region) {
  if (pattern.window && !region_within(region, *pattern.window)) {
    fail(ErrorCode::OutOfWindow, "count region exceeds the observation window");
  }
  std::uint64_t n = 0;
  for (const auto& p : pattern.points) {
    if (region_contains(region, p)) n += p.multiplicity;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Density pairs
// ---------------------------------------------------------------------------

/// Two intensities as densities f, g against a reference measure that is a
/// finite weighted sum over entries (atoms or grid cells).
struct TabulatedPair {
  enum class Support { Atoms, Cells };
  Support support = Support::Atoms;
  std::vector<std::string> ids;           // Atoms: atom id per entry
  std::optional<GridGeometry> grid;       // Cells: geometry
  std::vector<std::size_t> cell_index;    // Cells: grid cell per entry, ascending
  std::vector<double> weight;             // reference mass per entry
  std::vector<double> f;
  std::vector<double> g;

  std::size_t size() const noexcept { return weight.size(); }

  std::optional<std::size_t> locate(const Point& p) const {
    if (support == Support::Atoms) {
      if (p.atom.empty()) return std::nullopt;
      auto it = std::find(ids.begin(), ids.end(), p.atom);
      if (it == ids.end()) return std::nullopt;
      return static_cast<std::size_t>(it - ids.begin());
    }
    if (!p.atom.empty()) return std::nullopt;
    auto cell = grid->locate(p.coords);
    if (!cell) return std::nullopt;
    auto it = std::lower_bound(cell_index.begin(), cell_index.end(), *cell);
    if (it == cell_index.end() || *it != *cell) return std::nullopt;
    return static_cast<std::size_t>(it - cell_index.begin());
  }

  Location location(std::size_t i) const {
    if (support == Support::Atoms) return {{}, ids[i]};
    return {grid->cell_center(cell_index[i]), {}};
  }
};

/// Two Lebesgue densities on a common interval; the reference is
/// reference_scale times Lebesgue measure.
struct SmoothPair {
  double lower = 0.0;
  double upper = kInf;
  std::function<double(double)> f;
  std::function<double(double)> g;
  double reference_scale = 1.0;
  QuadratureSpec quadrature;
  std::optional<double> f_bound;
  std::optional<double> g_bound;
};

/// The canonical input of every divergence formula: f = d(lambda)/d(nu) and
/// g = d(mu)/d(nu) against one shared reference nu.
class DensityPair {
 public:
  using Rep = std::variant<TabulatedPair, SmoothPair>;

  DensityPair(TabulatedPair t) : rep_(std::move(t)) { validate(); }
  DensityPair(SmoothPair s) : rep_(std::move(s)) { validate(); }

  bool is_tabulated() const noexcept { return rep_.index() == 0; }
  const TabulatedPair& tabulated() const { return std::get<TabulatedPair>(rep_); }
  const SmoothPair& smooth() const { return std::get<SmoothPair>(rep_); }
  const Rep& rep() const noexcept { return rep_; }

  /// (g, f): the pair for mu against lambda.
  DensityPair swapped() const {
    if (is_tabulated()) {
      auto t = tabulated();
      std::swap(t.f, t.g);
      return t;
    }
    auto s = smooth();
    std::swap(s.f, s.g);
    std::swap(s.f_bound, s.g_bound);
    return s;
  }

  /// The same two measures expressed against c * nu (densities divided by c).
  DensityPair rescaled_reference(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorCode::InvalidArgument, "reference scale must be > 0");
    if (is_tabulated()) {
      auto t = tabulated();
      for (std::size_t i = 0; i < t.size(); ++i) {
        t.weight[i] *= c;
        t.f[i] /= c;
        t.g[i] /= c;
      }
      return t;
    }
    auto s = smooth();
    auto f = s.f, g = s.g;
    s.f = [f, c](double x) { return f(x) / c; };
    s.g = [g, c](double x) { return g(x) / c; };
    s.reference_scale *= c;
    if (s.f_bound) *s.f_bound /= c;
    if (s.g_bound) *s.g_bound /= c;
    return s;
  }

  /// Restriction of both measures to a subset of the tabulated entries.
  DensityPair restricted(std::span<const std::size_t> entries) const {
    const auto& t = tabulated();
    std::vector<std::size_t> idx(entries.begin(), entries.end());
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    TabulatedPair out;
    out.support = t.support;
    out.grid = t.grid;
    for (std::size_t i : idx) {
      if (i >= t.size()) fail(ErrorCode::InvalidArgument, "restriction index out of range");
      if (t.support == TabulatedPair::Support::Atoms) out.ids.push_back(t.ids[i]);
      else out.cell_index.push_back(t.cell_index[i]);
      out.weight.push_back(t.weight[i]);
      out.f.push_back(t.f[i]);
      out.g.push_back(t.g[i]);
    }
    return out;
  }

  /// Restriction of a smooth pair to [lo, hi] intersected with its domain.
  DensityPair restricted(double lo, double hi) const {
    auto s = smooth();
    s.lower = std::max(s.lower, lo);
    s.upper = std::min(s.upper, hi);
    if (!(s.lower < s.upper)) fail(ErrorCode::DomainMismatch, "restriction interval misses the domain");
    return s;
  }

  /// lambda as an intensity model.
  IntensityModel lambda_model() const { return model_of(false); }
  /// mu as an intensity model.
  IntensityModel mu_model() const { return model_of(true); }

 private:
  IntensityModel model_of(bool second) const {
    if (is_tabulated()) {
      const auto& t = tabulated();
      const auto& d = second ? t.g : t.f;
      if (t.support == TabulatedPair::Support::Atoms) {
        Discrete out;
        for (std::size_t i = 0; i < t.size(); ++i) out.atoms.push_back({t.ids[i], t.weight[i] * d[i]});
        return out;
      }
      Grid out{*t.grid, std::vector<double>(t.grid->cell_count(), 0.0)};
      const double vol = t.grid->cell_volume();
      for (std::size_t i = 0; i < t.size(); ++i) out.values[t.cell_index[i]] = d[i] * t.weight[i] / vol;
      return out;
    }
    const auto& s = smooth();
    const auto fn = second ? s.g : s.f;
    const double c = s.reference_scale;
    Smooth out;
    out.lower = s.lower;
    out.upper = s.upper;
    out.density = [fn, c](double x) { return c * fn(x); };
    out.quadrature = s.quadrature;
    const auto& b = second ? s.g_bound : s.f_bound;
    if (b) out.bound = c * *b;
    return out;
  }

  void validate() const {
    if (is_tabulated()) {
      const auto& t = tabulated();
      const std::size_t n = t.weight.size();
      if (t.f.size() != n || t.g.size() != n) fail(ErrorCode::InvalidArgument, "density table sizes differ");
      if (t.support == TabulatedPair::Support::Atoms && t.ids.size() != n) {
        fail(ErrorCode::InvalidArgument, "atom id count differs from density table size");
      }
      if (t.support == TabulatedPair::Support::Cells && (!t.grid || t.cell_index.size() != n)) {
        fail(ErrorCode::InvalidArgument, "cell pair without geometry");
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (double v : {t.weight[i], t.f[i], t.g[i]}) {
          if (!(v >= 0.0) || std::isinf(v)) fail(ErrorCode::InvalidArgument, "densities must be finite and >= 0");
        }
      }
    } else {
      const auto& s = smooth();
      if (!s.f || !s.g) fail(ErrorCode::InvalidArgument, "smooth pair without densities");
      if (!(s.lower < s.upper) || !std::isfinite(s.lower)) fail(ErrorCode::InvalidArgument, "bad smooth domain");
    }
  }

  Rep rep_;
};

/// Reduces two intensities of one class to densities against a common
/// reference: counting measure on the union of atoms, Lebesgue on the common
/// grid refinement, or Lebesgue on the union interval.
inline DensityPair common_reference(const IntensityModel& a, const IntensityModel& b) {
  if (a.kind() != b.kind()) {
    fail(ErrorCode::DomainMismatch, std::string("cannot compare ") + std::string(to_string(a.kind())) +
                                        " and " + std::string(to_string(b.kind())) + " models");
  }
  switch (a.kind()) {
    case ModelKind::Discrete: {
      TabulatedPair t;
      t.support = TabulatedPair::Support::Atoms;
      std::unordered_map<std::string, std::size_t> where;
      auto slot = [&](const std::string& id) {
        auto [it, fresh] = where.emplace(id, t.ids.size());
        if (fresh) {
          t.ids.push_back(id);
          t.weight.push_back(1.0);
          t.f.push_back(0.0);
          t.g.push_back(0.0);
        }
        return it->second;
      };
      for (const auto& at : a.discrete().atoms) t.f[slot(at.id)] += at.weight;
      for (const auto& at : b.discrete().atoms) t.g[slot(at.id)] += at.weight;
      return t;
    }
    case ModelKind::Grid: {
      const auto geom = common_refinement(a.grid().geometry, b.grid().geometry);
      TabulatedPair t;
      t.support = TabulatedPair::Support::Cells;
      t.grid = geom;
      t.f = detail::resample(a.grid(), geom);
      t.g = detail::resample(b.grid(), geom);
      t.cell_index.resize(geom.cell_count());
      std::iota(t.cell_index.begin(), t.cell_index.end(), std::size_t{0});
      t.weight.assign(geom.cell_count(), geom.cell_volume());
      return t;
    }
    case ModelKind::Smooth: {
      const auto& sa = a.smooth();
      const auto& sb = b.smooth();
      if (!(std::max(sa.lower, sb.lower) < std::min(sa.upper, sb.upper))) {
        fail(ErrorCode::DomainMismatch, "smooth domains are disjoint");
      }
      SmoothPair s;
      s.lower = std::min(sa.lower, sb.lower);
      s.upper = std::max(sa.upper, sb.upper);
      auto wrap = [](const Smooth& m) {
        return [fn = m.density, lo = m.lower, hi = m.upper](double x) {
          if (x < lo || x > hi) return 0.0;
          return detail::checked_density(fn, x);
        };
      };
      s.f = wrap(sa);
      s.g = wrap(sb);
      s.quadrature.abs_tol = std::min(sa.quadrature.abs_tol, sb.quadrature.abs_tol);
      s.quadrature.rel_tol = std::min(sa.quadrature.rel_tol, sb.quadrature.rel_tol);
      s.quadrature.max_subdivisions = std::max(sa.quadrature.max_subdivisions, sb.quadrature.max_subdivisions);
      s.f_bound = sa.bound;
      s.g_bound = sb.bound;
      return s;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown model kind");
}

// ---------------------------------------------------------------------------
// Mark kernels
// ---------------------------------------------------------------------------

/// Shared reference measure M for marks: counting measure on a finite list
/// of real mark values, or Lebesgue measure on a regular 1-d grid.
struct MarkReference {
  enum class Kind { Discrete, Grid };
  Kind kind = Kind::Discrete;
  std::vector<double> values;  // Discrete
  double lower = 0.0, upper = 1.0;
  std::size_t cells = 0;  // Grid

  static MarkReference discrete(std::vector<double> v) { return {Kind::Discrete, std::move(v), 0.0, 1.0, 0}; }
  static MarkReference grid(double lo, double hi, std::size_t n) { return {Kind::Grid, {}, lo, hi, n}; }

  std::size_t size() const noexcept { return kind == Kind::Discrete ? values.size() : cells; }
  double weight(std::size_t) const { return kind == Kind::Discrete ? 1.0 : (upper - lower) / static_cast<double>(cells); }
  double cell_lower(std::size_t j) const { return lower + static_cast<double>(j) * weight(j); }
  /// Representative mark value of reference entry j.
  double value(std::size_t j) const { return kind == Kind::Discrete ? values[j] : cell_lower(j) + 0.5 * weight(j); }

  friend bool operator==(const MarkReference&, const MarkReference&) = default;
};

/// Probability kernel K_t(dx) = k_t(x) M(dx): density per location and mark
/// reference entry.
struct MarkKernel {
  MarkReference reference;
  std::function<double(const Location&, std::size_t)> density;
  /// One expression in x (first location coordinate) per reference entry,
  /// when the kernel came from a model file.
  std::vector<std::string> expressions;
};

/// A base intensity together with a mark kernel.
struct MarkedModel {
  IntensityModel base;
  MarkKernel kernel;
};

inline constexpr double kKernelTolerance = 1e-10;

/// Locations at which a model is represented: atoms, cell centres, or probe
/// points of a smooth domain.
inline std::vector<Location> representative_locations(const IntensityModel& m) {
  std::vector<Location> out;
  switch (m.kind()) {
    case ModelKind::Discrete:
      for (const auto& a : m.discrete().atoms) out.push_back({{}, a.id});
      break;
    case ModelKind::Grid: {
      const auto& geom = m.grid().geometry;
      for (std::size_t i = 0; i < geom.cell_count(); ++i) out.push_back({geom.cell_center(i), {}});
      break;
    }
    case ModelKind::Smooth: {
      const auto& s = m.smooth();
      for (double x : probe_points(s.lower, s.upper, 33)) out.push_back({{x}, {}});
      break;
    }
  }
  return out;
}

/// Checks the kernel is a probability kernel at every represented location.
inline void validate_kernel(const MarkKernel& k, std::span<const Location> where) {
  if (!k.density) fail(ErrorCode::InvalidKernel, "mark kernel without density");
  if (k.reference.size() == 0) fail(ErrorCode::InvalidKernel, "empty mark reference");
  if (k.reference.kind == MarkReference::Kind::Grid && !(k.reference.lower < k.reference.upper)) {
    fail(ErrorCode::InvalidKernel, "mark grid needs lower < upper");
  }
  for (const auto& loc : where) {
    double total = 0.0;
    for (std::size_t j = 0; j < k.reference.size(); ++j) {
      const double v = k.density(loc, j);
      if (!(v >= 0.0) || std::isinf(v)) fail(ErrorCode::InvalidKernel, "mark density must be finite and >= 0");
      total += v * k.reference.weight(j);
    }
    if (std::abs(total - 1.0) > kKernelTolerance) {
      fail(ErrorCode::InvalidKernel, "mark kernel integrates to " + detail::format_double(total) + ", not 1");
    }
  }
}

inline MarkedModel make_marked(IntensityModel base, MarkKernel kernel) {
  const auto where = representative_locations(base);
  validate_kernel(kernel, where);
  return {std::move(base), std::move(kernel)};
}

/// Kernel whose pmf over a discrete mark reference does not depend on the
/// location.
inline MarkKernel constant_kernel(MarkReference ref, std::vector<double> density) {
  if (density.size() != ref.size()) fail(ErrorCode::InvalidKernel, "kernel density size mismatch");
  MarkKernel k;
  k.reference = std::move(ref);
  for (double v : density) k.expressions.push_back(detail::format_double(v));
  k.density = [d = std::move(density)](const Location&, std::size_t j) { return d[j]; };
  return k;
}

}  // namespace ppdiv
