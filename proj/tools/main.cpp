#include <fstream>
#include <iostream>

#include "options.hpp"

using namespace tetstress;
using namespace tetstress::suites;

namespace {

struct Output {
  std::string format = "text";
  std::string path;
  bool timings = false;

  void write(const std::string& s) const {
    if (path.empty()) {
      std::cout << s;
      return;
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << s;
  }
  void emit(const SuiteReport& r) const {
    if (format == "json")
      write(r.to_json(timings).dump(2) + "\n");
    else if (format == "csv")
      write(r.to_csv());
    else
      write(r.to_text(timings));
  }
  void emit_all(const std::vector<SuiteReport>& rs) const {
    if (rs.size() == 1) return emit(rs[0]);
    if (format == "json") {
      auto a = nlohmann::ordered_json::array();
      for (const auto& r : rs) a.push_back(r.to_json(timings));
      write(a.dump(2) + "\n");
    } else {
      std::string s;
      for (const auto& r : rs) s += format == "csv" ? r.to_csv() : r.to_text(timings);
      write(s);
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Exact and numerical checks for a conforming symmetric stress element on tetrahedra");
  app.require_subcommand(1);
  app.fallthrough();

  Output out;
  app.add_option("--format", out.format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}))
      ->capture_default_str();
  app.add_option("--out", out.path, "write the report here instead of stdout");
  app.add_flag("--timings", out.timings, "include wall times (reports are no longer reproducible)");
  std::uint64_t seed = 42;
  app.add_option("--seed", seed, "random seed")->capture_default_str();

  auto* dims_cmd = app.add_subcommand("dims", "computed vs closed-form space dimensions");

  auto* uni_cmd = app.add_subcommand("unisolvence", "exact DOF matrix certificates");
  UnisolvenceOptions uopt;
  int dump_k = 0;
  bool dump_tilde = false;
  uni_cmd->add_option("--random", uopt.n_random, "random tets besides the reference one")->capture_default_str();
  uni_cmd->add_option("--dump-dual", dump_k, "print the exact dual basis of Sigma_K for this k and stop");
  uni_cmd->add_flag("--dual-tilde", dump_tilde, "dump the simplified element instead");

  auto* ver_cmd = app.add_subcommand("verify", "exact identity, complex, membership and commutativity suites");
  std::string suite = "all";
  int trials = 20, fields = 50;
  ver_cmd->add_option("--suite", suite)
      ->check(CLI::IsMember({"identities", "complexes", "membership", "commutativity", "all"}))
      ->capture_default_str();
  ver_cmd->add_option("--trials", trials, "random fields per identity")->capture_default_str();
  ver_cmd->add_option("--fields", fields, "random fields per k for commutativity")->capture_default_str();

  auto* conv_cmd = app.add_subcommand("converge", "manufactured solution study with observed rates");
  ConvergenceConfig cfg;
  add_converge_options(*conv_cmd, cfg);
  std::string config_path;
  conv_cmd->add_option("--config", config_path, "key = value file with the options above; flags override it");

  // the file sets the defaults, so it is read before the flags are parsed
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) config_path = argv[i + 1];
    if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
  }
  if (!config_path.empty()) {
    try {
      load_converge_config(config_path, cfg);
    } catch (const CLI::Error& e) {
      std::cerr << "error: " << config_path << ": " << e.what() << "\n";
      return 2;
    }
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dims_cmd) {
      auto r = dims();
      out.emit(r);
      return r.passed() ? 0 : 1;
    }
    if (*uni_cmd) {
      if (dump_k > 0) {
        out.write(dump_dual(dump_k, dump_tilde));
        return 0;
      }
      uopt.seed = seed;
      auto r = unisolvence(uopt);
      out.emit(r);
      return r.passed() ? 0 : 1;
    }
    if (*ver_cmd) {
      std::vector<SuiteReport> rs;
      const bool all = suite == "all";
      if (all || suite == "identities") rs.push_back(identities(trials, seed));
      if (all || suite == "complexes") rs.push_back(complexes());
      if (all || suite == "membership") rs.push_back(membership(seed));
      if (all || suite == "commutativity") rs.push_back(commutativity(fields, seed));
      out.emit_all(rs);
      bool ok = true;
      for (const auto& r : rs) ok = ok && r.passed();
      return ok ? 0 : 1;
    }
    if (*conv_cmd) {
      auto r = converge(cfg);
      if (out.format == "json")
        out.write(r.to_json(out.timings).dump(2) + "\n");
      else if (out.format == "csv")
        out.write(r.to_csv());
      else
        out.write(r.to_text(out.timings));
      return r.passed() ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
