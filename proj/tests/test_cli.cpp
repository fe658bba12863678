#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "options.hpp"

using namespace tetstress;
using namespace tetstress::suites;

namespace {

std::string conf(const std::string& name) { return std::string(TETSTRESS_CONFIG_DIR) + "/" + name; }

std::string temp_file(const std::string& name, const std::string& body) {
  std::string p = testing::TempDir() + name;
  std::ofstream(p) << body;
  return p;
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string file = testing::TempDir() + "cli_out.txt";
  const std::string cmd = std::string(TETSTRESS_BIN) + " " + args + " > " + file + " 2>&1";
  const int st = std::system(cmd.c_str());
  if (out) {
    std::ifstream f(file);
    std::stringstream ss;
    ss << f.rdbuf();
    *out = ss.str();
  }
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

ConvergenceConfig small(const std::string& solution, std::vector<int> levels) {
  ConvergenceConfig c;
  c.solution = solution;
  c.levels = std::move(levels);
  return c;
}

}  // namespace

TEST(Config, ShippedFilesParse) {
  ConvergenceConfig c;
  load_converge_config(conf("converge_k1.conf"), c);
  EXPECT_EQ(c.levels, (std::vector<int>{2, 4, 8}));
  EXPECT_EQ(c.solution, "trig");
  ASSERT_TRUE(c.rate_S_min && c.rate_u_min && c.rate_div_min);
  EXPECT_DOUBLE_EQ(*c.rate_S_min, 2.6);
  EXPECT_FALSE(c.rate_S_max);

  ConvergenceConfig s;
  load_converge_config(conf("converge_k1_small.conf"), s);
  EXPECT_EQ(s.levels, (std::vector<int>{1, 2, 4}));
  // the coarse study lowers each bound by exactly 0.2
  EXPECT_NEAR(*c.rate_S_min - *s.rate_S_min, 0.2, 1e-12);
  EXPECT_NEAR(*c.rate_u_min - *s.rate_u_min, 0.2, 1e-12);
  EXPECT_NEAR(*c.rate_div_min - *s.rate_div_min, 0.2, 1e-12);

  ConvergenceConfig t;
  load_converge_config(conf("converge_tilde.conf"), t);
  EXPECT_TRUE(t.tilde);
  ASSERT_TRUE(t.rate_S_max);
  EXPECT_DOUBLE_EQ(*t.rate_S_max, 2.3);
}

TEST(Config, UnknownKeyAndMissingFileAreErrors) {
  ConvergenceConfig c;
  EXPECT_THROW(load_converge_config(temp_file("bad.conf", "levls = [1]\n"), c), CLI::Error);
  EXPECT_THROW(load_converge_config(testing::TempDir() + "no_such.conf", c), CLI::Error);
}

TEST(Config, MaterialAndFlags) {
  ConvergenceConfig c;
  load_converge_config(temp_file("m.conf", "lambda = 2.5\nmu = 0.5\nserial = true\nmesh-file = a.msh\n"), c);
  EXPECT_DOUBLE_EQ(c.material.lambda, 2.5);
  EXPECT_DOUBLE_EQ(c.material.mu, 0.5);
  EXPECT_FALSE(c.parallel);
  EXPECT_EQ(c.mesh_file, "a.msh");
}

TEST(Validate, RejectsBadConfigs) {
  auto bad = [](auto edit) {
    ConvergenceConfig c;
    edit(c);
    return c;
  };
  EXPECT_NO_THROW(validate(ConvergenceConfig{}));
  EXPECT_THROW(validate(bad([](auto& c) { c.levels = {2, 2}; })), std::invalid_argument);
  EXPECT_THROW(validate(bad([](auto& c) { c.levels = {4, 2}; })), std::invalid_argument);
  EXPECT_THROW(validate(bad([](auto& c) { c.levels = {0, 1}; })), std::invalid_argument);
  EXPECT_THROW(validate(bad([](auto& c) { c.levels = {}; })), std::invalid_argument);
  EXPECT_THROW(validate(bad([](auto& c) { c.k = 3; })), std::invalid_argument);
  EXPECT_THROW(validate(bad([](auto& c) { c.k = 0; })), std::invalid_argument);
  EXPECT_THROW(validate(bad([](auto& c) {
                 c.tilde = true;
                 c.k = 2;
               })),
               std::invalid_argument);
  EXPECT_THROW(validate(bad([](auto& c) { c.solution = "cubic"; })), std::invalid_argument);
  EXPECT_THROW(validate(bad([](auto& c) { c.material.mu = 0; })), std::invalid_argument);
}

TEST(Converge, PatchHasNoRates) {
  auto r = converge(small("patch", {1, 2}));
  EXPECT_TRUE(r.exact_reproduction);
  EXPECT_TRUE(r.passed());
  for (const auto& row : r.rows) EXPECT_FALSE(row.rate_S || row.rate_u || row.rate_div);
}

TEST(Converge, RatesFromErrorsAndMeshSize) {
  auto r = converge(small("trig", {1, 2}));
  ASSERT_EQ(r.rows.size(), 2u);
  const auto& a = r.rows[0];
  const auto& b = r.rows[1];
  EXPECT_NEAR(a.h / b.h, 2.0, 1e-12);
  ASSERT_TRUE(b.rate_S && b.rate_u && b.rate_div);
  EXPECT_NEAR(*b.rate_S, std::log2(a.err.e_S / b.err.e_S), 1e-12);
  EXPECT_NEAR(*b.rate_div, std::log2(a.err.e_div / b.err.e_div), 1e-12);
  EXPECT_FALSE(a.rate_S);
  EXPECT_TRUE(r.monotone);
  EXPECT_TRUE(r.residual_ok);
  EXPECT_FALSE(r.exact_reproduction);
}

TEST(Converge, ThresholdsAreEnforced) {
  auto c = small("trig", {1, 2});
  c.rate_S_min = 10.0;
  c.rate_S_max = 0.5;
  auto r = converge(c);
  EXPECT_EQ(r.threshold_failures.size(), 2u);
  EXPECT_FALSE(r.passed());
}

TEST(Reports, ReproducibleAndSchema) {
  auto c = small("trig", {1});
  const std::string j1 = converge(c).to_json().dump();
  const std::string j2 = converge(c).to_json().dump();
  EXPECT_EQ(j1, j2);
  auto j = nlohmann::ordered_json::parse(j1);
  EXPECT_EQ(j["suite"], "converge");
  for (const auto& cs : j["cases"]) {
    EXPECT_TRUE(cs.contains("name") && cs.contains("status") && cs.contains("data"));
    EXPECT_FALSE(cs["data"].contains("solve_seconds"));
  }
  EXPECT_TRUE(converge(c).to_json(true)["cases"][0]["data"].contains("solve_seconds"));
}

TEST(Reports, CsvColumns) {
  auto r = converge(small("trig", {1, 2}));
  std::istringstream in(r.to_csv());
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header, "level,h,e_S,rate_S,e_u,rate_u,e_div,rate_div");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
    ++rows;
  }
  EXPECT_EQ(rows, 2);
}

TEST(Reports, SuiteCountsFailures) {
  SuiteReport r;
  r.suite = "x";
  EXPECT_FALSE(r.passed());  // empty suites never pass
  r.cases.push_back({"a", true, {}, 0});
  r.cases.push_back({"b", false, {{"why", 1}}, 0});
  EXPECT_EQ(r.failures(), 1);
  EXPECT_FALSE(r.passed());
  auto j = r.to_json();
  EXPECT_EQ(j["cases"][1]["status"], "fail");
  EXPECT_NE(r.to_text().find("1 of 2 cases fail"), std::string::npos);
}

TEST(Suites, MembershipCases) {
  auto r = membership(42);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.cases.size(), 5u);
}

TEST(Suites, DimsReportsEveryListedSpace) {
  auto r = dims();
  int n_fail = 0;
  for (const auto& c : r.cases) {
    EXPECT_TRUE(c.data.contains("computed") && c.data.contains("formula")) << c.name;
    if (!c.pass) {
      ++n_fail;
      EXPECT_EQ(c.name, "N k=3");
    }
  }
  EXPECT_LE(n_fail, 1);
}

TEST(Binary, ExitCodes) {
  std::string out;
  EXPECT_EQ(run_cli("verify --suite membership --format json", &out), 0);
  EXPECT_EQ(nlohmann::ordered_json::parse(out)["suite"], "membership");
  EXPECT_EQ(run_cli("converge --levels 2,1", &out), 2);
  EXPECT_NE(out.find("levels must increase"), std::string::npos);
  EXPECT_EQ(run_cli("converge --config " + temp_file("b.conf", "bogus = 1\n")), 2);
  EXPECT_NE(run_cli("nosuchcommand"), 0);
  // a failing threshold gives a nonzero status
  EXPECT_EQ(run_cli("converge --levels 1,2 --rate-s-min 9"), 1);
}

TEST(Binary, FlagsOverrideConfig) {
  std::string out;
  const std::string cfg = temp_file("o.conf", "solution = patch\nlevels = [1, 2]\n");
  ASSERT_EQ(run_cli("converge --config " + cfg + " --levels 1 --format csv", &out), 0);
  std::istringstream in(out);
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 1);
  EXPECT_EQ(run_cli("converge --config " + cfg + " --levels 1", &out), 0);
  EXPECT_NE(out.find("solution=patch"), std::string::npos);
}

TEST(Binary, OutFileAndDualDump) {
  const std::string path = testing::TempDir() + "dims.json";
  EXPECT_EQ(run_cli("dims --format json --out " + path), 1);  // N_3 mismatch
  std::ifstream f(path);
  auto j = nlohmann::ordered_json::parse(f);
  EXPECT_EQ(j["suite"], "dims");
  std::string out;
  EXPECT_EQ(run_cli("unisolvence --dump-dual 1", &out), 0);
  EXPECT_NE(out.find("dual 161 "), std::string::npos);
  EXPECT_EQ(out.find("dual 162 "), std::string::npos);
}
