#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ppdiv/io.hpp"
#include "ppdiv/ppdiv.hpp"

namespace {

using nlohmann::json;
using ppdiv::io::detail::real_json;

json extended(ppdiv::ExtendedValue v) { return real_json(v.value()); }

std::string joined(const std::vector<std::string>& notes) {
  std::string out;
  for (const auto& n : notes) out += (out.empty() ? "" : "; ") + n;
  return out;
}

/// "lo,hi" for an interval, "lo1,hi1;lo2,hi2" for a box, "atoms:a,b" for atoms.
ppdiv::Region parse_window(const std::string& text) {
  if (text.empty()) return {};
  if (text.rfind("atoms:", 0) == 0) {
    ppdiv::AtomSet set;
    set.ids = ppdiv::io::detail::split(text.substr(6));
    return set;
  }
  ppdiv::Box box;
  for (const auto& side : ppdiv::io::detail::split(text, ';')) {
    const auto ends = ppdiv::io::detail::split(side);
    if (ends.size() != 2) ppdiv::fail(ppdiv::ErrorCode::ParseError, "window sides are written lo,hi");
    const auto lo = ppdiv::io::detail::number(ends[0]), hi = ppdiv::io::detail::number(ends[1]);
    if (!lo || !hi || !(*lo <= *hi)) ppdiv::fail(ppdiv::ErrorCode::ParseError, "bad window '" + text + "'");
    box.lower.push_back(*lo);
    box.upper.push_back(*hi);
  }
  return box;
}

ppdiv::DensityPair read_pair(const std::string& a, const std::string& b) {
  return ppdiv::common_reference(ppdiv::io::read_model(a), ppdiv::io::read_model(b));
}

struct DivergenceArgs {
  std::string a, b, kind = "tsallis", format = "json";
  std::vector<double> alphas{1.0};
};

void run_divergence(const DivergenceArgs& args) {
  const auto pair = read_pair(args.a, args.b);
  json rows = json::array();
  auto add = [&](std::optional<double> alpha, ppdiv::ExtendedValue v, double err, const std::vector<std::string>& notes) {
    rows.push_back({{"alpha", alpha ? json(*alpha) : json(nullptr)},
                    {"value", extended(v)},
                    {"error_estimate", err},
                    {"notes", joined(notes)}});
  };
  if (args.kind == "tsallis" || args.kind == "renyi") {
    for (double alpha : args.alphas) {
      const auto r = args.kind == "tsallis" ? ppdiv::tsallis(pair, alpha) : ppdiv::renyi_pp(pair, alpha);
      add(alpha, r.value, r.quadrature_error_estimate, r.notes);
    }
  } else if (args.kind == "kl") {
    const auto r = ppdiv::kl_pp(pair);
    add(1.0, r.value, r.quadrature_error_estimate, r.notes);
  } else if (args.kind == "hellinger") {
    add(std::nullopt, ppdiv::hellinger_measures(pair), 0.0, {});
  } else if (args.kind == "hellinger_pp") {
    add(std::nullopt, ppdiv::hellinger_pp(pair), 0.0, {});
  } else {
    ppdiv::fail(ppdiv::ErrorCode::InvalidArgument, "unknown divergence kind '" + args.kind + "'");
  }
  if (args.format == "csv") {
    std::cout << "alpha,value,error_estimate,notes\n";
    for (const auto& r : rows) {
      std::cout << (r["alpha"].is_null() ? "" : ppdiv::detail::format_double(r["alpha"].get<double>())) << ','
                << (r["value"].is_string() ? r["value"].get<std::string>()
                                           : ppdiv::detail::format_double(r["value"].get<double>()))
                << ',' << ppdiv::detail::format_double(r["error_estimate"].get<double>()) << ",\""
                << r["notes"].get<std::string>() << "\"\n";
    }
    return;
  }
  std::cout << json{{"kind", args.kind}, {"rows", rows}}.dump(2) << '\n';
}

struct LoglrArgs {
  std::string a, b, pattern, window;
  bool sigma_finite = false;
  std::uint64_t n_max = 100;
  double tol = 1e-8;
};

void run_loglr(const LoglrArgs& args) {
  const auto pair = read_pair(args.a, args.b);
  auto eta = ppdiv::io::read_pattern(args.pattern);
  if (!args.window.empty()) {
    eta.window = parse_window(args.window);
    eta.validate();
  }
  const auto r = args.sigma_finite ? ppdiv::log_lr_sigma_finite(pair, eta, args.n_max, args.tol)
                                   : ppdiv::log_lr_finite(pair, eta);
  json trace = json::array();
  for (const auto& [n, v] : r.truncation_trace) trace.push_back({{"n", n}, {"log_lr", real_json(v)}});
  std::cout << json{{"in_support", r.in_support},
                    {"log_lr", real_json(r.log_lr)},
                    {"converged", r.converged},
                    {"trace", trace},
                    {"notes", joined(r.notes)}}
                   .dump(2)
            << '\n';
}

struct SampleArgs {
  std::string model, window;
  std::uint64_t seed = 0, count = 1;
  bool marked = false;
};

void run_sample(const SampleArgs& args) {
  const auto doc = ppdiv::io::read_json_file(args.model);
  const auto window = parse_window(args.window);
  const bool marked = args.marked || ppdiv::io::is_marked(doc);
  std::optional<ppdiv::MarkedModel> mm;
  std::optional<ppdiv::IntensityModel> plain;
  if (marked) mm = ppdiv::io::parse_marked(doc);
  else plain = ppdiv::io::parse_model(doc);
  const auto& base = marked ? mm->base : *plain;
  const std::size_t dim = base.kind() == ppdiv::ModelKind::Grid ? base.grid().geometry.dim() : 1;
  std::ostringstream out;
  ppdiv::io::write_pattern_header(out, dim, marked);
  for (std::uint64_t r = 0; r < args.count; ++r) {
    auto rng = ppdiv::Rng::stream(args.seed, r);
    const auto eta = marked ? ppdiv::sample_marked(*mm, window, rng) : ppdiv::sample_pp(*plain, window, rng);
    ppdiv::io::write_pattern_rows(out, eta, r, marked);
  }
  std::cout << out.str();
}

struct ChernoffArgs {
  std::string a, b;
  bool simulate = false;
  std::uint64_t n = 10, trials = 100000, seed = 0;
  double prior0 = 0.5;
};

void run_chernoff(const ChernoffArgs& args) {
  const auto pair = read_pair(args.a, args.b);
  const auto c = ppdiv::chernoff_info(pair);
  json out = {{"C", extended(c.value)},
              {"alpha_star", c.argmax_alpha},
              {"iterations", c.iterations},
              {"bracket_width", c.bracket_width},
              {"notes", joined(c.notes)}};
  if (args.simulate) {
    const auto r = ppdiv::bayes_risk_sim(pair, args.prior0, args.n, args.trials, args.seed);
    out["risk"] = r.risk;
    out["se"] = r.std_error;
  }
  std::cout << out.dump(2) << '\n';
}

struct PathArgs {
  std::string pattern;
  bool compound = false;
};

void run_path(const PathArgs& args) {
  const auto eta = ppdiv::io::read_pattern(args.pattern);
  ppdiv::io::write_path(std::cout, args.compound ? ppdiv::compound_path(eta) : ppdiv::counting_path(eta));
}

void run_model(const std::string& path) {
  const auto doc = ppdiv::io::read_json_file(path);
  if (ppdiv::io::is_marked(doc)) std::cout << ppdiv::io::to_json(ppdiv::io::parse_marked(doc)).dump(2) << '\n';
  else std::cout << ppdiv::io::to_json(ppdiv::io::parse_model(doc)).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divergences, likelihood ratios and sampling for Poisson point processes"};
  app.require_subcommand(1);

  DivergenceArgs div;
  auto* cmd_div = app.add_subcommand("divergence", "Divergence table for two intensity models");
  cmd_div->add_option("model_a", div.a, "lambda model (JSON)")->required()->check(CLI::ExistingFile);
  cmd_div->add_option("model_b", div.b, "mu model (JSON)")->required()->check(CLI::ExistingFile);
  cmd_div->add_option("--alphas", div.alphas, "orders")->delimiter(',');
  cmd_div->add_option("--kind", div.kind, "tsallis|renyi|kl|hellinger|hellinger_pp")
      ->check(CLI::IsMember({"tsallis", "renyi", "kl", "hellinger", "hellinger_pp"}));
  cmd_div->add_option("--format", div.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

  LoglrArgs lr;
  auto* cmd_lr = app.add_subcommand("loglr", "Log-likelihood ratio log dP_lambda/dP_mu of a pattern");
  cmd_lr->add_option("model_a", lr.a)->required()->check(CLI::ExistingFile);
  cmd_lr->add_option("model_b", lr.b)->required()->check(CLI::ExistingFile);
  cmd_lr->add_option("pattern", lr.pattern, "pattern CSV")->required()->check(CLI::ExistingFile);
  cmd_lr->add_flag("--sigma-finite", lr.sigma_finite, "compensated evaluation over truncations");
  cmd_lr->add_option("--n-max", lr.n_max)->check(CLI::PositiveNumber);
  cmd_lr->add_option("--tol", lr.tol)->check(CLI::NonNegativeNumber);
  cmd_lr->add_option("--window", lr.window, "observation window, e.g. 0,30");

  SampleArgs smp;
  auto* cmd_smp = app.add_subcommand("sample", "Sample Poisson patterns as CSV");
  cmd_smp->add_option("model", smp.model)->required()->check(CLI::ExistingFile);
  cmd_smp->add_option("--window", smp.window, "lo,hi | lo1,hi1;lo2,hi2 | atoms:a,b");
  cmd_smp->add_option("--seed", smp.seed);
  cmd_smp->add_option("--count", smp.count)->check(CLI::PositiveNumber);
  cmd_smp->add_flag("--marked", smp.marked, "model file is a marked model");

  ChernoffArgs ch;
  auto* cmd_ch = app.add_subcommand("chernoff", "Chernoff information and simulated Bayes risk");
  cmd_ch->add_option("model_a", ch.a)->required()->check(CLI::ExistingFile);
  cmd_ch->add_option("model_b", ch.b)->required()->check(CLI::ExistingFile);
  cmd_ch->add_flag("--simulate", ch.simulate);
  cmd_ch->add_option("--n", ch.n)->check(CLI::PositiveNumber);
  cmd_ch->add_option("--trials", ch.trials)->check(CLI::PositiveNumber);
  cmd_ch->add_option("--seed", ch.seed);
  cmd_ch->add_option("--prior0", ch.prior0)->check(CLI::Range(0.0, 1.0));

  PathArgs path;
  auto* cmd_path = app.add_subcommand("path", "Counting or compound path of a 1-d pattern as CSV");
  cmd_path->add_option("pattern", path.pattern)->required()->check(CLI::ExistingFile);
  cmd_path->add_flag("--compound", path.compound, "sum marks instead of counting points");

  std::string model_path;
  auto* cmd_model = app.add_subcommand("model", "Parse a model file and print it in canonical form");
  cmd_model->add_option("model", model_path)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*cmd_div) run_divergence(div);
    else if (*cmd_lr) run_loglr(lr);
    else if (*cmd_smp) run_sample(smp);
    else if (*cmd_ch) run_chernoff(ch);
    else if (*cmd_path) run_path(path);
    else if (*cmd_model) run_model(model_path);
  } catch (const ppdiv::Error& e) {
    std::cerr << "error: " << ppdiv::to_string(e.code()) << ": " << e.what() << '\n';
    return e.is_numeric() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
