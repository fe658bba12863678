#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tetstress/solver.hpp"
#include "tetstress/verify.hpp"

namespace tetstress::suites {

struct Case {
  std::string name;
  bool pass = false;
  nlohmann::ordered_json data;
  double seconds = 0;  // reported only on request, so reports stay reproducible
};

struct SuiteReport {
  std::string suite;
  std::vector<Case> cases;
  double seconds = 0;
  bool passed() const;
  int failures() const;
  nlohmann::ordered_json to_json(bool timings = false) const;
  std::string to_text(bool timings = false) const;
  std::string to_csv() const;
};

// Computed vs closed-form dimensions.
SuiteReport dims();

// DOF matrices of every element on the reference tet and n_random random tets.
struct UnisolvenceOptions {
  int n_random = 5;
  std::uint64_t seed = 1;
  std::vector<int> sigma_k = {1, 2, 3};
  std::vector<int> v_k = {0, 1, 2, 3};
  bool theta_w = true;
};
SuiteReport unisolvence(const UnisolvenceOptions& opt);
// Dual basis of Sigma_K on the reference tet, one "dual i" block per function.
std::string dump_dual(int k, bool tilde);

SuiteReport complexes();
SuiteReport identities(int trials, std::uint64_t seed);
SuiteReport membership(std::uint64_t seed);
// div Pi0 T = P_V div T on random members of Sigma_K.
SuiteReport commutativity(int fields, std::uint64_t seed, const std::vector<int>& ks = {1, 2, 3});

// Random tet with small integer coordinates, not flat.
SimplexGeom random_tet(std::mt19937_64& rng);

// ---- convergence -----------------------------------------------------------------

struct ConvergenceConfig {
  int k = 1;
  bool tilde = false;
  std::vector<int> levels = {2, 4, 8};
  Material material;
  std::string solution = "trig";
  std::string mesh_file;  // replaces the box levels by a single mesh
  // checked on the last pair of levels when set
  std::optional<double> rate_S_min, rate_u_min, rate_div_min, rate_S_max;
  // errors below this count as reproduced exactly; rates are not defined there
  double exact_tol = 1e-8;
  bool parallel = true;
};

struct LevelResult {
  int level = 0;
  double h = 0;
  int tets = 0;
  int n_stress = 0;
  int n_disp = 0;
  long nnz = 0;
  double residual = 0;
  double max_block_condition = 0;
  ErrorNorms err;
  std::optional<double> rate_S, rate_u, rate_div;  // against the previous level
  double assemble_seconds = 0, solve_seconds = 0;
};

struct ConvergenceReport {
  ConvergenceConfig config;
  std::vector<LevelResult> rows;
  bool monotone = true;
  bool residual_ok = true;
  bool exact_reproduction = false;  // every error below exact_tol
  std::vector<std::string> threshold_failures;
  bool passed() const { return monotone && residual_ok && threshold_failures.empty(); }
  nlohmann::ordered_json to_json(bool timings = false) const;
  std::string to_text(bool timings = false) const;
  std::string to_csv() const;
};

void validate(const ConvergenceConfig& cfg);  // throws std::invalid_argument
ConvergenceReport converge(const ConvergenceConfig& cfg);

// Sparse LU cost of one box level, from the symbolic analysis only.
FactorEstimate factor_estimate(int level, const StressElementSpec& spec);
// Physical memory in bytes (from sysconf).
double physical_memory_bytes();

}  // namespace tetstress::suites
