#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PPDIV_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string model(const char* name) { return std::string(PPDIV_SOURCE_DIR) + "/docs/models/" + name; }

fs::path scratch(const std::string& name, const std::string& content) {
  const auto dir = fs::temp_directory_path() / "ppdiv_cli_test";
  fs::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p) << content;
  return p;
}

const json& schema() {
  static const json s = [] {
    std::ifstream in(std::string(PPDIV_SOURCE_DIR) + "/docs/schema.json");
    return json::parse(in);
  }();
  return s;
}

/// Validator for the subset of JSON Schema used in docs/schema.json.
bool conforms(const json& v, const json& s) {
  if (s.contains("$ref")) {
    const auto ref = s["$ref"].get<std::string>();
    return conforms(v, schema()["definitions"][ref.substr(ref.rfind('/') + 1)]);
  }
  if (s.contains("anyOf")) {
    bool any = false;
    for (const auto& alt : s["anyOf"]) any = any || conforms(v, alt);
    if (!any) return false;
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == v;
    if (!found) return false;
  }
  if (s.contains("type")) {
    auto is = [&](const std::string& t) {
      if (t == "object") return v.is_object();
      if (t == "array") return v.is_array();
      if (t == "string") return v.is_string();
      if (t == "number") return v.is_number();
      if (t == "integer") return v.is_number_integer();
      if (t == "boolean") return v.is_boolean();
      if (t == "null") return v.is_null();
      return false;
    };
    bool ok = false;
    if (s["type"].is_array()) {
      for (const auto& t : s["type"]) ok = ok || is(t.get<std::string>());
    } else {
      ok = is(s["type"].get<std::string>());
    }
    if (!ok) return false;
  }
  if (s.contains("required")) {
    for (const auto& k : s["required"]) {
      if (!v.contains(k.get<std::string>())) return false;
    }
  }
  if (s.contains("properties") && v.is_object()) {
    for (const auto& [k, sub] : s["properties"].items()) {
      if (v.contains(k) && !conforms(v[k], sub)) return false;
    }
  }
  if (s.contains("items") && v.is_array()) {
    for (const auto& item : v) {
      if (!conforms(item, s["items"])) return false;
    }
  }
  return true;
}

bool conforms_to(const json& v, const char* definition) {
  return conforms(v, schema()["definitions"][definition]);
}

}  // namespace

TEST(Cli, KlTable) {
  const auto r = run("divergence " + model("unit_double.json") + " " + model("unit_lebesgue.json") + " --kind kl");
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_TRUE(conforms_to(j, "divergence_output"));
  ASSERT_EQ(j["rows"].size(), 1u);
  EXPECT_EQ(j["rows"][0]["alpha"], 1.0);
  EXPECT_NEAR(j["rows"][0]["value"].get<double>(), 2 * std::log(2.0) - 1, 1e-12);
  EXPECT_EQ(j["rows"][0]["notes"].get<std::string>().find("quadrature"), std::string::npos);
}

TEST(Cli, IdenticalFilesGiveZero) {
  const auto r = run("divergence " + model("grid_step.json") + " " + model("grid_step.json") + " --alphas 0,0.5,1,2");
  ASSERT_EQ(r.status, 0);
  for (const auto& row : json::parse(r.out)["rows"]) EXPECT_EQ(row["value"], 0.0);
}

TEST(Cli, SingularPairWritesInf) {
  const auto r = run("divergence " + model("singular_x.json") + " " + model("singular_y.json") +
                     " --alphas 0,0.5,1,2 --kind renyi");
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_TRUE(conforms_to(j, "divergence_output"));
  EXPECT_EQ(j["rows"][0]["value"], 1.0);
  EXPECT_EQ(j["rows"][1]["value"], 2.0);  // alpha s / (1 - alpha) + t at alpha 1/2
  EXPECT_EQ(j["rows"][2]["value"], "inf");
  EXPECT_EQ(j["rows"][3]["value"], "inf");
}

TEST(Cli, CsvTable) {
  const auto r = run("divergence " + model("atom_1.json") + " " + model("atom_4.json") + " --alphas 0.5 --format csv");
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "alpha,value,error_estimate,notes\n0.5,1,0,\"\"\n");
}

TEST(Cli, LogLr) {
  const auto pat = scratch("three.csv", "loc_1\n0.1\n0.5\n0.9\n");
  auto r = run("loglr " + model("unit_double.json") + " " + model("unit_lebesgue.json") + " " + pat.string());
  ASSERT_EQ(r.status, 0);
  auto j = json::parse(r.out);
  EXPECT_TRUE(conforms_to(j, "loglr_output"));
  EXPECT_NEAR(j["log_lr"].get<double>(), -1 + 3 * std::log(2.0), 1e-12);
  r = run("loglr " + model("unit_lebesgue.json") + " " + model("unit_lebesgue.json") + " " + pat.string());
  EXPECT_EQ(json::parse(r.out)["log_lr"], 0.0);
  const auto bad = scratch("zero.csv", "loc_1\n0.5\n");
  r = run("loglr " + model("grid_step.json") + " " + model("grid_flat.json") + " " + bad.string());
  ASSERT_EQ(r.status, 0);
  j = json::parse(r.out);
  EXPECT_EQ(j["in_support"], false);
  EXPECT_EQ(j["log_lr"], "-inf");
  EXPECT_TRUE(conforms_to(j, "loglr_output"));
}

TEST(Cli, LogLrSigmaFinite) {
  const auto pat = scratch("sigma.csv", "loc_1\n0.5\n2.5\n");
  const auto r = run("loglr " + model("half_line_decay.json") + " " + model("half_line_lebesgue.json") + " " +
                     pat.string() + " --sigma-finite --n-max 30 --tol 0");
  ASSERT_EQ(r.status, 0);
  const auto j = json::parse(r.out);
  EXPECT_TRUE(conforms_to(j, "loglr_output"));
  EXPECT_EQ(j["trace"].size(), 30u);
  const auto plain = run("loglr " + model("half_line_decay.json") + " " + model("half_line_lebesgue.json") + " " +
                         pat.string());
  EXPECT_EQ(plain.status, 1);  // infinite mass needs the sigma-finite evaluator
}

TEST(Cli, SampleDeterministicAndReplicated) {
  const auto heavy = scratch("heavy.json", R"({"type":"discrete","atoms":[{"id":"a","weight":40}]})");
  const auto args = "sample " + heavy.string() + " --seed 5 --count 3";
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  const auto file = scratch("samples.csv", a.out);
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "replicate,loc_1,multiplicity");
  const auto grid = run("sample " + model("unit_double.json") + " --seed 5 --count 3");
  EXPECT_EQ(grid.out.substr(0, grid.out.find('\n')), "replicate,loc_1,multiplicity");
  std::set<int> ids;
  while (std::getline(in, line)) ids.insert(std::stoi(line.substr(0, line.find(','))));
  EXPECT_EQ(ids, (std::set<int>{0, 1, 2}));
}

TEST(Cli, SampleZeroModelHasEmptyBody) {
  const auto zero = scratch("zero.json", R"({"type":"discrete","atoms":[{"id":"a","weight":0}]})");
  const auto r = run("sample " + zero.string() + " --seed 1 --count 4");
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "replicate,loc_1,multiplicity\n");
}

TEST(Cli, SampleMarked) {
  const auto r = run("sample " + model("compound_jumps.json") + " --seed 2");
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "replicate,loc_1,mark,multiplicity");
  const auto file = scratch("marked.csv", r.out);
  const auto path = run("path " + file.string() + " --compound");
  ASSERT_EQ(path.status, 0);
  EXPECT_EQ(path.out.substr(0, 8), "t,value\n");
}

TEST(Cli, Chernoff) {
  auto r = run("chernoff " + model("atom_1.json") + " " + model("atom_4.json"));
  ASSERT_EQ(r.status, 0);
  auto j = json::parse(r.out);
  EXPECT_TRUE(conforms_to(j, "chernoff_output"));
  EXPECT_NEAR(j["C"].get<double>(), 0.5065507, 1e-6);
  EXPECT_NEAR(j["alpha_star"].get<double>(), 0.443136, 1e-5);
  EXPECT_FALSE(j.contains("risk"));
  r = run("chernoff " + model("atom_1.json") + " " + model("atom_1.json"));
  EXPECT_EQ(json::parse(r.out)["C"], 0.0);
  r = run("chernoff " + model("atom_1.json") + " " + model("atom_4.json") + " --simulate --n 5 --trials 2000 --seed 3");
  j = json::parse(r.out);
  EXPECT_TRUE(conforms_to(j, "chernoff_output"));
  EXPECT_TRUE(j.contains("risk"));
  EXPECT_TRUE(j.contains("se"));
}

TEST(Cli, ModelRoundTrip) {
  for (const auto& entry : fs::directory_iterator(std::string(PPDIV_SOURCE_DIR) + "/docs/models")) {
    const auto first = run("model " + entry.path().string());
    ASSERT_EQ(first.status, 0) << entry.path();
    const auto j = json::parse(first.out);
    EXPECT_TRUE(conforms_to(j, "model") || conforms_to(j, "marked")) << entry.path();
    const auto again = run("model " + scratch("again.json", first.out).string());
    EXPECT_EQ(first.out, again.out) << entry.path();
  }
}

TEST(Cli, ExampleModelsConformToSchema) {
  for (const auto& entry : fs::directory_iterator(std::string(PPDIV_SOURCE_DIR) + "/docs/models")) {
    std::ifstream in(entry.path());
    const auto j = json::parse(in);
    EXPECT_TRUE(conforms_to(j, "model") || conforms_to(j, "marked")) << entry.path();
  }
}

TEST(Cli, ExitCodes) {
  const auto broken = scratch("broken.json", "{not json");
  EXPECT_EQ(run("divergence " + broken.string() + " " + model("atom_1.json")).status, 1);
  EXPECT_EQ(run("divergence " + model("atom_1.json") + " " + model("grid_flat.json")).status, 1);
  EXPECT_EQ(run("nonsense").status, 1);
  const auto tough = scratch("tough.json", R"({"type":"smooth","lower":0,"upper":1,"density":"sin(1/x)^2 / x",
      "quadrature":{"abs_tol":1e-14,"rel_tol":0,"max_subdivisions":20}})");
  EXPECT_EQ(run("divergence " + tough.string() + " " + model("unit_lebesgue.json")).status, 2);
}
