#pragma once

#include <CLI11.hpp>

#include "suites.hpp"

namespace tetstress::suites {

// Binds the convergence options to app; shared by the CLI and the acceptance runner
// so config files mean the same thing in both.
inline void add_converge_options(CLI::App& app, ConvergenceConfig& cfg) {
  app.add_option("--k", cfg.k, "polynomial degree (1 or 2; 1 for --tilde)")->capture_default_str();
  app.add_flag("--tilde", cfg.tilde, "simplified element with rigid displacements");
  app.add_option("--levels", cfg.levels, "box mesh levels n, strictly increasing")->delimiter(',')->capture_default_str();
  app.add_option("--lambda", cfg.material.lambda, "Lame lambda")->capture_default_str();
  app.add_option("--mu", cfg.material.mu, "Lame mu")->capture_default_str();
  app.add_option("--solution", cfg.solution, "manufactured solution: zero, patch, trig")->capture_default_str();
  app.add_option("--mesh-file", cfg.mesh_file, "ASCII tet mesh used instead of the box levels");
  app.add_option("--rate-s-min", cfg.rate_S_min, "minimum stress rate on the last pair of levels");
  app.add_option("--rate-u-min", cfg.rate_u_min, "minimum displacement rate");
  app.add_option("--rate-div-min", cfg.rate_div_min, "minimum divergence rate");
  app.add_option("--rate-s-max", cfg.rate_S_max, "maximum stress rate");
  app.add_option("--exact-tol", cfg.exact_tol, "errors below this count as exact")->capture_default_str();
  app.add_flag("--serial,!--parallel", [&cfg](std::int64_t n) { cfg.parallel = n <= 0; },
               "serial reference kernels instead of OpenMP");
}

// Reads a key = value file into cfg. Unknown keys are errors.
inline void load_converge_config(const std::string& path, ConvergenceConfig& cfg) {
  CLI::App app("converge config");
  add_converge_options(app, cfg);
  app.set_config("--config", path, "", true);
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.parse(std::vector<std::string>{});
}

}  // namespace tetstress::suites
