// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// criteria whose outcome differs from expectation: every criterion is expected to
// pass unless listed with --known-fail, in which case it must fail (a fixed known
// failure is reported too, so the list cannot go stale).

#include <chrono>
#include <iostream>
#include <set>
#include <iomanip>
#include <sstream>

#include "options.hpp"

using namespace tetstress;
using namespace tetstress::suites;

namespace {

struct Outcome {
  int id;
  bool pass;
  std::string summary;
  double seconds;
};

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string failed_cases(const SuiteReport& r) {
  std::ostringstream os;
  for (const auto& c : r.cases)
    if (!c.pass) os << "; " << c.name << " " << c.data.dump();
  return os.str();
}

std::string suite_summary(const SuiteReport& r) {
  return std::to_string(r.cases.size() - r.failures()) + "/" + std::to_string(r.cases.size()) + " cases" +
         failed_cases(r);
}

std::string rate_summary(const ConvergenceReport& r) {
  std::ostringstream os;
  os.precision(3);
  os << "levels";
  for (const auto& row : r.rows) os << " " << row.level;
  const auto& last = r.rows.back();
  auto put = [&](const char* n, const std::optional<double>& v) {
    os << ", " << n << " ";
    if (v)
      os << *v;
    else
      os << "-";
  };
  put("rate_S", last.rate_S);
  put("rate_u", last.rate_u);
  put("rate_div", last.rate_div);
  double res = 0;
  for (const auto& row : r.rows) res = std::max(res, row.residual);
  os << ", max residual " << res;
  if (!r.monotone) os << ", errors not monotone";
  for (const auto& f : r.threshold_failures) os << ", " << f;
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("acceptance criteria");
  std::string config_dir = TETSTRESS_CONFIG_DIR;
  std::vector<int> known_fail;
  std::vector<int> only;
  std::uint64_t seed = 42;
  app.add_option("--config-dir", config_dir)->capture_default_str();
  app.add_option("--known-fail", known_fail, "criteria expected to fail")->delimiter(',');
  app.add_option("--only", only, "run just these criteria")->delimiter(',');
  app.add_option("--seed", seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const std::set<int> expected_fail(known_fail.begin(), known_fail.end());
  const std::set<int> selected(only.begin(), only.end());
  std::vector<Outcome> outcomes;

  auto run = [&](int id, auto&& body) {
    if (!selected.empty() && !selected.count(id)) return;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o{id, false, "", 0};
    try {
      body(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("error: ") + e.what();
    }
    o.seconds = since(t0);
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << o.summary << " [" << std::fixed
              << std::setprecision(1) << o.seconds << " s]" << std::defaultfloat << std::endl;
    outcomes.push_back(o);
  };
  auto load = [&](const std::string& name) {
    ConvergenceConfig c;
    load_converge_config(config_dir + "/" + name, c);
    return c;
  };

  run(1, [&](Outcome& o) {
    auto t0 = std::chrono::steady_clock::now();
    auto r = dims();
    const double s = since(t0);
    o.pass = r.passed() && s < 300;
    o.summary = "dimensions: " + suite_summary(r);
  });
  run(2, [&](Outcome& o) {
    UnisolvenceOptions u;
    u.seed = seed;
    auto r = unisolvence(u);
    o.pass = r.passed();
    o.summary = "unisolvence: " + suite_summary(r);
  });
  run(3, [&](Outcome& o) {
    auto r = complexes();
    o.pass = r.passed();
    o.summary = "exact sequences: " + suite_summary(r);
  });
  run(4, [&](Outcome& o) {
    auto r = identities(20, seed);
    o.pass = r.passed();
    o.summary = "identities, 20 trials each: " + suite_summary(r);
  });
  run(5, [&](Outcome& o) {
    auto r = commutativity(50, seed);
    o.pass = r.passed();
    o.summary = "commutativity, 50 fields per k: " + suite_summary(r);
  });
  run(6, [&](Outcome& o) {
    auto t0 = std::chrono::steady_clock::now();
    auto r = converge(load("patch.conf"));
    const double s = since(t0);
    double worst = 0;
    for (const auto& row : r.rows) worst = std::max({worst, row.err.e_S, row.err.e_u, row.err.e_div});
    o.pass = r.exact_reproduction && r.residual_ok && s < 60;
    std::ostringstream os;
    os << "patch test: largest error " << worst << ", residual ok " << r.residual_ok;
    o.summary = os.str();
  });

  // The finest level of the full study is run only when the sparse LU fits in memory.
  std::string k1_conf = "converge_k1.conf", tilde_conf = "converge_tilde.conf", level_note;
  if ((selected.empty() || selected.count(7) || selected.count(8))) {
    const ConvergenceConfig full = load(k1_conf);
    const int finest = full.levels.back();
    const FactorEstimate est = factor_estimate(finest, {full.k, false});
    const double mem = physical_memory_bytes();
    std::ostringstream os;
    os.precision(3);
    os << "n=" << finest << " LU estimate " << est.peak_bytes / 1e9 << " GB vs " << mem / 1e9 << " GB";
    if (est.peak_bytes > mem) {
      k1_conf = "converge_k1_small.conf";
      tilde_conf = "converge_tilde_small.conf";
      os << ", coarser levels";
    }
    level_note = os.str();
  }
  run(7, [&](Outcome& o) {
    auto t0 = std::chrono::steady_clock::now();
    auto r = converge(load(k1_conf));
    o.pass = r.passed() && since(t0) < 1800;
    o.summary = "rates k=1 (" + level_note + "): " + rate_summary(r);
  });
  run(8, [&](Outcome& o) {
    auto r = converge(load(tilde_conf));
    o.pass = r.passed();
    o.summary = "simplified element: " + rate_summary(r);
  });
  run(9, [&](Outcome& o) {
    auto r = membership(seed);
    o.pass = r.passed();
    o.summary = "membership: " + suite_summary(r);
  });

  int unexpected = 0;
  for (const auto& o : outcomes) {
    const bool expect_pass = !expected_fail.count(o.id);
    if (o.pass != expect_pass) {
      ++unexpected;
      std::cout << "unexpected: criterion " << o.id << (o.pass ? " passed but is listed as known failure" : " failed")
                << "\n";
    }
  }
  int passed = 0;
  for (const auto& o : outcomes) passed += o.pass;
  std::cout << passed << " of " << outcomes.size() << " criteria pass";
  if (!expected_fail.empty()) std::cout << ", " << expected_fail.size() << " listed as known failures";
  std::cout << "\n";
  return unexpected;
}
