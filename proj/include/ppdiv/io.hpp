#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppdiv/error.hpp"
#include "ppdiv/expression.hpp"
#include "ppdiv/extended_value.hpp"
#include "ppdiv/measure.hpp"
#include "ppdiv/sampler.hpp"

namespace ppdiv::io {

using nlohmann::json;

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& msg) { fail(ErrorCode::ParseError, msg); }

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_fail(std::string("missing field '") + key + "'");
  return j.at(key);
}

/// A real number, or one of the strings "inf" and "-inf".
inline double real(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  parse_fail("expected a number or \"inf\", got " + j.dump());
}

inline json real_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline std::vector<double> reals(const json& j) {
  if (!j.is_array()) return {real(j)};
  std::vector<double> out;
  for (const auto& v : j) out.push_back(real(v));
  return out;
}

inline std::size_t count_of(const json& j) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 1) parse_fail("cell counts must be positive integers");
  return j.get<std::size_t>();
}

/// A density written either as an expression string or a plain number.
inline std::string expression_text(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return ppdiv::detail::format_double(j.get<double>());
  parse_fail("expected an expression string or number, got " + j.dump());
}

inline QuadratureSpec quadrature(const json& j) {
  QuadratureSpec q;
  if (j.contains("abs_tol")) q.abs_tol = real(j.at("abs_tol"));
  if (j.contains("rel_tol")) q.rel_tol = real(j.at("rel_tol"));
  if (j.contains("max_subdivisions")) q.max_subdivisions = j.at("max_subdivisions").get<std::size_t>();
  if (!(q.abs_tol > 0.0) || !(q.rel_tol >= 0.0) || q.max_subdivisions < 1) parse_fail("invalid quadrature settings");
  return q;
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    parse_fail(e.what());
  }
}

}  // namespace detail

/// Model files: {"type": "discrete" | "grid" | "smooth" | "scale" | "sum", ...}.
/// Combinators are flattened while parsing.
inline IntensityModel parse_model(const json& j) {
  return detail::guarded([&]() -> IntensityModel {
    const auto type = detail::field(j, "type").get<std::string>();
    if (type == "discrete") {
      Discrete d;
      for (const auto& a : detail::field(j, "atoms")) {
        d.atoms.push_back({detail::field(a, "id").get<std::string>(), detail::real(detail::field(a, "weight"))});
      }
      return d;
    }
    if (type == "grid") {
      Grid g;
      g.geometry.lower = detail::reals(detail::field(j, "lower"));
      g.geometry.upper = detail::reals(detail::field(j, "upper"));
      const auto& cells = detail::field(j, "cells");
      if (cells.is_array()) {
        for (const auto& c : cells) g.geometry.cells.push_back(detail::count_of(c));
      } else {
        g.geometry.cells.push_back(detail::count_of(cells));
      }
      g.values = detail::reals(detail::field(j, "values"));
      return g;
    }
    if (type == "smooth") {
      const double lower = j.contains("lower") ? detail::real(j.at("lower")) : 0.0;
      const double upper = j.contains("upper") ? detail::real(j.at("upper")) : kInf;
      std::optional<double> bound;
      if (j.contains("bound")) bound = detail::real(j.at("bound"));
      const QuadratureSpec q = j.contains("quadrature") ? detail::quadrature(j.at("quadrature")) : QuadratureSpec{};
      return Smooth::from_expression(lower, upper, detail::expression_text(detail::field(j, "density")), q, bound);
    }
    if (type == "scale") {
      return scale(detail::real(detail::field(j, "factor")), parse_model(detail::field(j, "model")));
    }
    if (type == "sum") {
      std::vector<IntensityModel> parts;
      for (const auto& m : detail::field(j, "models")) parts.push_back(parse_model(m));
      return sum(std::span<const IntensityModel>(parts));
    }
    detail::parse_fail("unknown model type '" + type + "'");
  });
}

inline bool is_marked(const json& j) { return j.is_object() && j.value("type", "") == "marked"; }

/// {"type": "marked", "base": model, "marks": kernel}. The kernel is
///   {"type": "discrete", "values": [...], "pmf": [expr, ...]} or
///   {"type": "grid", "lower": a, "upper": b, "cells": n, "density": [expr, ...]}
/// with one expression in x (the first location coordinate, 0 at atoms) per
/// mark reference entry.
inline MarkedModel parse_marked(const json& j) {
  return detail::guarded([&]() -> MarkedModel {
    if (!is_marked(j)) detail::parse_fail("expected a marked model");
    auto base = parse_model(detail::field(j, "base"));
    const auto& m = detail::field(j, "marks");
    const auto type = detail::field(m, "type").get<std::string>();
    MarkKernel k;
    const json* entries = nullptr;
    if (type == "discrete") {
      k.reference = MarkReference::discrete(detail::reals(detail::field(m, "values")));
      entries = &detail::field(m, "pmf");
    } else if (type == "grid") {
      k.reference = MarkReference::grid(detail::real(detail::field(m, "lower")), detail::real(detail::field(m, "upper")),
                                        detail::count_of(detail::field(m, "cells")));
      entries = &detail::field(m, "density");
    } else {
      detail::parse_fail("unknown mark type '" + type + "'");
    }
    if (!entries->is_array() || entries->size() != k.reference.size()) {
      detail::parse_fail("need one kernel density per mark reference entry");
    }
    std::vector<Expression> exprs;
    for (const auto& e : *entries) {
      k.expressions.push_back(detail::expression_text(e));
      exprs.emplace_back(k.expressions.back(), std::vector<std::string>{"x"});
    }
    k.density = [exprs](const Location& where, std::size_t i) {
      return exprs[i](where.coords.empty() ? 0.0 : where.coords[0]);
    };
    return make_marked(std::move(base), std::move(k));
  });
}

inline json to_json(const QuadratureSpec& q) {
  return {{"abs_tol", q.abs_tol}, {"rel_tol", q.rel_tol}, {"max_subdivisions", q.max_subdivisions}};
}

inline json to_json(const IntensityModel& m) {
  switch (m.kind()) {
    case ModelKind::Discrete: {
      json atoms = json::array();
      for (const auto& a : m.discrete().atoms) atoms.push_back({{"id", a.id}, {"weight", a.weight}});
      return {{"type", "discrete"}, {"atoms", atoms}};
    }
    case ModelKind::Grid: {
      const auto& g = m.grid();
      return {{"type", "grid"},
              {"lower", g.geometry.lower},
              {"upper", g.geometry.upper},
              {"cells", g.geometry.cells},
              {"values", g.values}};
    }
    case ModelKind::Smooth: {
      const auto& s = m.smooth();
      if (s.expression.empty()) fail(ErrorCode::InvalidArgument, "smooth model without an expression is not serialisable");
      json out = {{"type", "smooth"},
                  {"lower", detail::real_json(s.lower)},
                  {"upper", detail::real_json(s.upper)},
                  {"density", s.expression},
                  {"quadrature", to_json(s.quadrature)}};
      if (s.bound) out["bound"] = *s.bound;
      return out;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown model kind");
}

inline json to_json(const MarkedModel& m) {
  const auto& ref = m.kernel.reference;
  if (m.kernel.expressions.size() != ref.size()) {
    fail(ErrorCode::InvalidArgument, "mark kernel without expressions is not serialisable");
  }
  json marks;
  if (ref.kind == MarkReference::Kind::Discrete) {
    marks = {{"type", "discrete"}, {"values", ref.values}, {"pmf", m.kernel.expressions}};
  } else {
    marks = {{"type", "grid"},
             {"lower", ref.lower},
             {"upper", ref.upper},
             {"cells", ref.cells},
             {"density", m.kernel.expressions}};
  }
  return {{"type", "marked"}, {"base", to_json(m.base)}, {"marks", marks}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path + ": " + e.what());
  }
}

inline IntensityModel read_model(const std::string& path) { return parse_model(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Point pattern CSV: header "[replicate,]loc_1,...,loc_d[,mark][,multiplicity]".
// A non-numeric loc_1 is an atom label. One row per point.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::optional<double> number(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Patterns keyed by replicate id (0 when the column is absent).
inline std::map<std::uint64_t, PointPattern> parse_patterns(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = detail::split(line);
  std::optional<std::size_t> replicate, mark, multiplicity;
  std::vector<std::size_t> locs;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h == "replicate") replicate = c;
    else if (h == "mark") mark = c;
    else if (h == "multiplicity") multiplicity = c;
    else if (h.rfind("loc_", 0) == 0) {
      const auto k = detail::number(h.substr(4));
      if (!k || *k != static_cast<double>(locs.size() + 1)) detail::parse_fail("location columns must be loc_1..loc_d in order");
      locs.push_back(c);
    } else {
      detail::parse_fail("unknown pattern column '" + h + "'");
    }
  }
  if (locs.empty()) detail::parse_fail("pattern CSV needs loc_1");
  std::map<std::uint64_t, PointPattern> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split(line);
    if (cells.size() != header.size()) detail::parse_fail("row " + std::to_string(row) + ": wrong number of columns");
    const auto where = " at row " + std::to_string(row);
    Point p;
    const auto first = detail::number(cells[locs[0]]);
    if (!first) {
      if (locs.size() != 1) detail::parse_fail("atom labels need a single location column" + where);
      p.atom = cells[locs[0]];
    } else {
      for (auto c : locs) {
        const auto v = detail::number(cells[c]);
        if (!v || !std::isfinite(*v)) detail::parse_fail("bad coordinate '" + cells[c] + "'" + where);
        p.coords.push_back(*v);
      }
    }
    if (mark) {
      const auto v = detail::number(cells[*mark]);
      if (!v) detail::parse_fail("bad mark '" + cells[*mark] + "'" + where);
      p.mark = *v;
    }
    if (multiplicity) {
      const auto v = detail::number(cells[*multiplicity]);
      if (!v || *v < 1 || *v != std::floor(*v)) detail::parse_fail("multiplicity must be a positive integer" + where);
      p.multiplicity = static_cast<std::uint64_t>(*v);
    }
    std::uint64_t id = 0;
    if (replicate) {
      const auto v = detail::number(cells[*replicate]);
      if (!v || *v < 0 || *v != std::floor(*v)) detail::parse_fail("bad replicate id" + where);
      id = static_cast<std::uint64_t>(*v);
    }
    out[id].points.push_back(std::move(p));
  }
  return out;
}

inline PointPattern parse_pattern(std::istream& in) {
  auto all = parse_patterns(in);
  if (all.size() > 1) detail::parse_fail("expected a single pattern, found " + std::to_string(all.size()) + " replicates");
  return all.empty() ? PointPattern{} : std::move(all.begin()->second);
}

inline PointPattern read_pattern(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open '" + path + "'");
  return parse_pattern(in);
}

/// Writes the header for patterns of dimension dim (1 for atom patterns).
inline void write_pattern_header(std::ostream& out, std::size_t dim, bool marked) {
  out << "replicate";
  for (std::size_t k = 1; k <= dim; ++k) out << ",loc_" << k;
  if (marked) out << ",mark";
  out << ",multiplicity\n";
}

inline void write_pattern_rows(std::ostream& out, const PointPattern& eta, std::uint64_t replicate, bool marked) {
  using ppdiv::detail::format_double;
  for (const auto& p : eta.points) {
    out << replicate;
    if (!p.atom.empty()) out << ',' << p.atom;
    for (double x : p.coords) out << ',' << format_double(x);
    if (marked) out << ',' << (p.mark ? format_double(*p.mark) : "");
    out << ',' << p.multiplicity << '\n';
  }
}

inline void write_path(std::ostream& out, const StepPath& path) {
  out << "t,value\n";
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    out << ppdiv::detail::format_double(path.times[i]) << ',' << ppdiv::detail::format_double(path.values[i]) << '\n';
  }
}

}  // namespace ppdiv::io
