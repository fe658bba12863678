#include "suites.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace tetstress::suites {

using json = nlohmann::ordered_json;

namespace {

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
Case timed(std::string name, F&& body) {
  auto t0 = std::chrono::steady_clock::now();
  Case c;
  c.name = std::move(name);
  try {
    body(c);
  } catch (const std::exception& e) {
    c.pass = false;
    c.data["error"] = e.what();
  }
  c.seconds = since(t0);
  return c;
}

SuiteReport finish(std::string name, std::vector<Case> cases, std::chrono::steady_clock::time_point t0) {
  SuiteReport r;
  r.suite = std::move(name);
  r.cases = std::move(cases);
  r.seconds = since(t0);
  return r;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(prec) << v;
  return os.str();
}

SimplexGeom skewed_tet() { return SimplexGeom({vec3(0, 0, 0), vec3(3, 1, 0), vec3(-1, 2, 1), vec3(1, 1, 4)}); }

}  // namespace

bool SuiteReport::passed() const { return failures() == 0 && !cases.empty(); }

int SuiteReport::failures() const {
  int n = 0;
  for (const auto& c : cases) n += !c.pass;
  return n;
}

json SuiteReport::to_json(bool timings) const {
  json j;
  j["suite"] = suite;
  j["cases"] = json::array();
  for (const auto& c : cases) {
    json cj;
    cj["name"] = c.name;
    cj["status"] = c.pass ? "pass" : "fail";
    cj["data"] = c.data.is_null() ? json::object() : c.data;
    if (timings) cj["seconds"] = c.seconds;
    j["cases"].push_back(cj);
  }
  return j;
}

std::string SuiteReport::to_text(bool timings) const {
  std::size_t w = 4;
  for (const auto& c : cases) w = std::max(w, c.name.size());
  std::ostringstream os;
  os << "suite " << suite << "\n";
  for (const auto& c : cases) {
    os << "  " << std::left << std::setw(static_cast<int>(w)) << c.name << "  " << (c.pass ? "pass" : "FAIL");
    if (timings) os << "  " << std::fixed << std::setprecision(2) << c.seconds << "s";
    if (!c.data.is_null() && !c.data.empty()) os << "  " << c.data.dump();
    os << "\n";
  }
  os << (passed() ? "all " + std::to_string(cases.size()) + " cases pass"
                  : std::to_string(failures()) + " of " + std::to_string(cases.size()) + " cases fail")
     << "\n";
  return os.str();
}

std::string SuiteReport::to_csv() const {
  std::ostringstream os;
  os << "suite,name,status\n";
  for (const auto& c : cases) os << suite << ',' << c.name << ',' << (c.pass ? "pass" : "fail") << "\n";
  return os.str();
}

SimplexGeom random_tet(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(-3, 3);
  for (;;) {
    std::array<Vec3Q, 4> v;
    for (auto& p : v) p = vec3(u(rng), u(rng), u(rng));
    try {
      SimplexGeom g(v);
      if (shape_quality(g) > 0.2) return g;
    } catch (const GeometryError&) {
    }
  }
}

// ---- exact suites ----------------------------------------------------------------

SuiteReport dims() {
  auto t0 = std::chrono::steady_clock::now();
  const SimplexGeom K = reference_tet();
  struct Item {
    SpaceTag tag;
    std::vector<int> ks;
  };
  const std::vector<Item> items = {{SpaceTag::Sigma, {1, 2, 3}}, {SpaceTag::SigmaTilde, {1}},
                                   {SpaceTag::V, {1, 2, 3}},     {SpaceTag::M, {2, 3, 4, 5, 6}},
                                   {SpaceTag::N, {3, 4, 5, 6}},  {SpaceTag::N0, {1, 2, 3, 4}},
                                   {SpaceTag::NboundaryK, {4, 5, 6}}, {SpaceTag::EpsP0, {1, 2, 3}}};
  std::vector<Case> cases;
  for (const auto& it : items)
    for (int k : it.ks)
      cases.push_back(timed(std::string(space_name(it.tag)) + " k=" + std::to_string(k), [&](Case& c) {
        const long computed = cached_space(it.tag, k, K)->dim();
        const long formula = formula_dim(it.tag, k);
        c.data["space"] = space_name(it.tag);
        c.data["k"] = k;
        c.data["computed"] = computed;
        c.data["formula"] = formula;
        c.pass = computed == formula;
      }));
  return finish("dims", std::move(cases), t0);
}

SuiteReport unisolvence(const UnisolvenceOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(opt.seed);
  std::vector<std::pair<std::string, SimplexGeom>> tets = {{"reference", reference_tet()}};
  for (int i = 0; i < opt.n_random; ++i) tets.emplace_back("random" + std::to_string(i + 1), random_tet(rng));
  std::vector<Case> cases;
  auto run = [&](ElementTag tag, int k, const std::string& tname, const SimplexGeom& g) {
    cases.push_back(timed(std::string(element_name(tag)) + " k=" + std::to_string(k) + " " + tname, [&](Case& c) {
      auto cert = unisolvence_certificate(build_dofset(tag, k, g), target_space(tag, k, g));
      c.data["size"] = cert.size;
      c.data["rank"] = cert.rank;
      c.data["prime"] = cert.prime;
      c.pass = cert.nonsingular;
    }));
  };
  for (const auto& [name, g] : tets) {
    for (int k : opt.sigma_k) run(ElementTag::SigmaK, k, name, g);
    run(ElementTag::SigmaTildeK, 1, name, g);
    for (int k : opt.v_k) run(ElementTag::VK, k, name, g);
  }
  if (opt.theta_w) {
    run(ElementTag::ThetaK, 6, "reference", reference_tet());
    run(ElementTag::WK, 7, "reference", reference_tet());
  }
  return finish("unisolvence", std::move(cases), t0);
}

std::string dump_dual(int k, bool tilde) {
  const ElementTag tag = tilde ? ElementTag::SigmaTildeK : ElementTag::SigmaK;
  const SimplexGeom K = reference_tet();
  DofSet ds = build_dofset(tag, k, K);
  DualBasis db = dual_basis(ds, target_space(tag, k, K));
  auto fn = ds.functionals();
  std::ostringstream os;
  for (std::size_t i = 0; i < db.elements.size(); ++i) {
    os << "dual " << i << " set " << fn[i].set << " " << dof_kind_name(fn[i].kind) << "\n";
    os << db.elements[i].dump() << "\n";
  }
  return os.str();
}

SuiteReport complexes() {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<Case> cases;
  auto run = [&](ComplexTag tag, int k, const SimplexGeom& g, const std::string& where, int face) {
    std::string name = std::string(complex_name(tag)) + " k=" + std::to_string(k) + where;
    cases.push_back(timed(name, [&](Case& c) {
      auto r = check_complex(tag, k, g, face);
      c.data["dims"] = r.dims;
      c.data["alternating_sum"] = r.alternating_sum;
      bool links = true;
      for (const auto& l : r.links) links = links && l.composes_to_zero && l.image_in_target;
      c.pass = r.exact && links && r.alternating_sum == 0;
    }));
  };
  const SimplexGeom K = reference_tet();
  for (int k = 0; k <= 3; ++k) run(ComplexTag::deRham, k, K, "", 0);
  for (int k = -3; k <= 3; ++k) run(ComplexTag::cd1, k, K, "", 0);
  for (auto tag : {ComplexTag::elas2d1, ComplexTag::elas2d2})
    for (int k = 0; k <= 3; ++k)
      for (int f = 0; f < 4; ++f) run(tag, k, K, " face=" + std::to_string(f), f);
  for (int k = 1; k <= 3; ++k) run(ComplexTag::ses, k, K, "", 0);
  for (int k = 4; k <= 5; ++k) run(ComplexTag::ses2, k, K, "", 0);
  return finish("complexes", std::move(cases), t0);
}

SuiteReport identities(int trials, std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<Case> cases;
  for (auto tag : all_identities())
    cases.push_back(timed(identity_name(tag), [&](Case& c) {
      auto r = check_identity(tag, trials, seed);
      c.data["trials"] = r.trials;
      c.data["failures"] = r.failures;
      if (!r.passed()) {
        c.data["first_failure"] = r.first_failure;
        c.data["counterexample"] = r.counterexample;
      }
      c.pass = r.passed();
    }));
  return finish("identities", std::move(cases), t0);
}

SuiteReport membership(std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<Case> cases;
  auto [K1, K2] = two_tet_pair();
  std::mt19937_64 rng(seed);
  auto record = [&](const std::string& name, const ExactPoly& S1, const ExactPoly& S2, bool expect) {
    cases.push_back(timed(name, [&](Case& c) {
      auto r = check_h_curlcurl_membership(S1, K1, S2, K2);
      bool oracle_zero = true;
      for (const auto& d : distributional_defect(S1, K1, S2, K2)) oracle_zero = oracle_zero && sgn(d) == 0;
      c.data["expected_member"] = expect;
      c.data["member"] = r.member;
      c.data["qsq_continuous"] = r.qsq_continuous;
      c.data["lambda_continuous"] = r.lambda_continuous;
      c.data["distributional_oracle_member"] = oracle_zero;
      c.pass = r.member == expect && oracle_zero == expect;
    }));
  };
  ExactPoly S = random_poly(Shape::sym3, 3, rng);
  record("smooth field", S, S, true);
  record("tangential jump", S, S + ExactPoly::sym_unit(0, 1, ScalarPoly(rat(1))), false);
  record("normal-normal jump", S, S + ExactPoly::sym_unit(2, 2, ScalarPoly(rat(1))), true);
  ExactPoly v1 = random_poly(Shape::vec3, 3, rng);
  ExactPoly v2 = v1 + ScalarPoly::coordinate(2) * random_poly(Shape::vec3, 1, rng);
  record("strain of kinked displacement", op::eps(v1), op::eps(v2), true);
  cases.push_back(timed("matched theta DOFs", [&](Case& c) {
    auto pr = matched_theta_pair(seed);
    auto r = check_h_curlcurl_membership(pr.first, K1, pr.second, K2);
    c.data["member"] = r.member;
    c.data["fields_differ"] = !(pr.first == pr.second);
    c.pass = r.member && !(pr.first == pr.second);
  }));
  return finish("membership", std::move(cases), t0);
}

SuiteReport commutativity(int fields, std::uint64_t seed, const std::vector<int>& ks) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<Case> cases;
  std::mt19937_64 rng(seed);
  for (const auto& [tname, g] : {std::pair<std::string, SimplexGeom>{"reference", reference_tet()},
                                 std::pair<std::string, SimplexGeom>{"skewed", skewed_tet()}})
    for (int k : ks)
      cases.push_back(timed("div Pi0 = P_V div k=" + std::to_string(k) + " " + tname, [&](Case& c) {
        auto dofs = build_dofset(ElementTag::SigmaK, k, g);
        auto basis = target_space(ElementTag::SigmaK, k, g);
        std::uniform_int_distribution<int> u(-5, 5);
        std::vector<ExactPoly> Ts;
        for (int t = 0; t < fields; ++t) {
          std::vector<Rational> coef(basis.dim());
          for (auto& x : coef) x = u(rng);
          Ts.push_back(combine(basis.elements, coef));
        }
        auto Ps = interpolate_pi0(Ts, dofs, basis);
        int bad = 0;
        for (int t = 0; t < fields; ++t) bad += !(op::div(Ps[t]) == l2_project_V(op::div(Ts[t]), k, g));
        c.data["fields"] = fields;
        c.data["failures"] = bad;
        c.pass = bad == 0;
      }));
  return finish("commutativity", std::move(cases), t0);
}

// ---- convergence -----------------------------------------------------------------

void validate(const ConvergenceConfig& cfg) {
  if (cfg.tilde ? cfg.k != 1 : (cfg.k < 1 || cfg.k > 2))
    throw std::invalid_argument("converge: k must be 1 or 2 (1 for the tilde element)");
  cfg.material.validate();
  if (cfg.mesh_file.empty()) {
    if (cfg.levels.empty()) throw std::invalid_argument("converge: no levels");
    for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
      if (cfg.levels[i] < 1) throw std::invalid_argument("converge: levels must be positive");
      if (i && cfg.levels[i] <= cfg.levels[i - 1]) throw std::invalid_argument("converge: levels must increase");
    }
  }
  const auto ids = manufactured_ids();
  if (std::find(ids.begin(), ids.end(), cfg.solution) == ids.end())
    throw std::invalid_argument("converge: unknown solution '" + cfg.solution + "'");
}

ConvergenceReport converge(const ConvergenceConfig& cfg) {
  validate(cfg);
  ConvergenceReport rep;
  rep.config = cfg;
  const ExactSolution ex = manufactured_solution(cfg.solution, cfg.material);
  std::vector<std::pair<int, MeshTopology>> meshes;
  if (!cfg.mesh_file.empty()) {
    meshes.emplace_back(0, read_mesh_file(cfg.mesh_file));
  } else {
    for (int n : cfg.levels) meshes.emplace_back(n, build_box_mesh(n));
  }
  AssemblyOptions opt;
  opt.parallel = cfg.parallel;
  rep.exact_reproduction = true;
  for (auto& [n, m] : meshes) {
    LevelResult r;
    r.level = n;
    r.h = m.max_edge_length();
    r.tets = m.num_tets();
    SaddleSystem sys = assemble(m, {cfg.k, cfg.tilde}, cfg.material, ex.data, opt);
    r.assemble_seconds = sys.seconds;
    r.n_stress = sys.map.n_stress;
    r.n_disp = sys.map.n_disp;
    r.max_block_condition = sys.max_block_condition;
    Solution sol = solve(sys);
    r.solve_seconds = sol.seconds;
    r.nnz = sol.nnz;
    r.residual = sol.residual;
    r.err = error_norms(m, sys, sol, ex, -1, cfg.parallel);
    rep.residual_ok = rep.residual_ok && sol.residual <= 1e-10;
    rep.exact_reproduction = rep.exact_reproduction && r.err.e_S <= cfg.exact_tol && r.err.e_u <= cfg.exact_tol &&
                             r.err.e_div <= cfg.exact_tol;
    rep.rows.push_back(r);
  }
  // rates need errors above the exactness floor; a reproduced solution has no rate
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    auto& a = rep.rows[i - 1];
    auto& b = rep.rows[i];
    auto rate = [&](double ea, double eb, std::optional<double>& out) {
      if (ea <= cfg.exact_tol && eb <= cfg.exact_tol) return;
      if (eb >= ea) rep.monotone = false;
      out = std::log(ea / eb) / std::log(a.h / b.h);
    };
    rate(a.err.e_S, b.err.e_S, b.rate_S);
    rate(a.err.e_u, b.err.e_u, b.rate_u);
    rate(a.err.e_div, b.err.e_div, b.rate_div);
  }
  if (rep.rows.size() >= 2) {
    const auto& last = rep.rows.back();
    auto check_min = [&](const char* what, const std::optional<double>& r, const std::optional<double>& lim) {
      if (!lim) return;
      if (!r || *r < *lim) rep.threshold_failures.push_back(std::string(what) + " rate below " + fmt(*lim, 2));
    };
    check_min("e_S", last.rate_S, cfg.rate_S_min);
    check_min("e_u", last.rate_u, cfg.rate_u_min);
    check_min("e_div", last.rate_div, cfg.rate_div_min);
    if (cfg.rate_S_max && (!last.rate_S || *last.rate_S > *cfg.rate_S_max))
      rep.threshold_failures.push_back("e_S rate above " + fmt(*cfg.rate_S_max, 2));
  }
  return rep;
}

namespace {
json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::string opt_csv(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(6) << *v;
  return os.str();
}
}  // namespace

json ConvergenceReport::to_json(bool timings) const {
  json j;
  j["suite"] = "converge";
  j["cases"] = json::array();
  for (const auto& r : rows) {
    json d;
    d["level"] = r.level;
    d["h"] = r.h;
    d["tets"] = r.tets;
    d["n_stress"] = r.n_stress;
    d["n_disp"] = r.n_disp;
    d["nnz"] = r.nnz;
    d["residual"] = r.residual;
    d["max_block_condition"] = r.max_block_condition;
    d["e_S"] = r.err.e_S;
    d["rate_S"] = opt_json(r.rate_S);
    d["e_u"] = r.err.e_u;
    d["rate_u"] = opt_json(r.rate_u);
    d["e_div"] = r.err.e_div;
    d["rate_div"] = opt_json(r.rate_div);
    if (timings) {
      d["assemble_seconds"] = r.assemble_seconds;
      d["solve_seconds"] = r.solve_seconds;
    }
    json c;
    c["name"] = "level " + std::to_string(r.level);
    c["status"] = r.residual <= 1e-10 ? "pass" : "fail";
    c["data"] = d;
    j["cases"].push_back(c);
  }
  json s;
  s["name"] = "summary";
  s["status"] = passed() ? "pass" : "fail";
  s["data"] = {{"k", config.k},
               {"tilde", config.tilde},
               {"solution", config.solution},
               {"lambda", config.material.lambda},
               {"mu", config.material.mu},
               {"monotone", monotone},
               {"residual_ok", residual_ok},
               {"exact_reproduction", exact_reproduction},
               {"threshold_failures", threshold_failures}};
  j["cases"].push_back(s);
  return j;
}

std::string ConvergenceReport::to_csv() const {
  std::ostringstream os;
  os << "level,h,e_S,rate_S,e_u,rate_u,e_div,rate_div\n";
  os << std::setprecision(10);
  for (const auto& r : rows)
    os << r.level << ',' << r.h << ',' << r.err.e_S << ',' << opt_csv(r.rate_S) << ',' << r.err.e_u << ','
       << opt_csv(r.rate_u) << ',' << r.err.e_div << ',' << opt_csv(r.rate_div) << "\n";
  return os.str();
}

std::string ConvergenceReport::to_text(bool timings) const {
  std::ostringstream os;
  os << "converge k=" << config.k << (config.tilde ? " (tilde)" : "") << " solution=" << config.solution
     << " lambda=" << config.material.lambda << " mu=" << config.material.mu << "\n";
  os << std::setw(6) << "level" << std::setw(10) << "h" << std::setw(9) << "dofs" << std::setw(13) << "e_S"
     << std::setw(7) << "rate" << std::setw(13) << "e_u" << std::setw(7) << "rate" << std::setw(13) << "e_div"
     << std::setw(7) << "rate" << std::setw(10) << "residual";
  if (timings) os << std::setw(9) << "asm s" << std::setw(9) << "solve s";
  os << "\n";
  auto rate = [](const std::optional<double>& r) {
    std::ostringstream s;
    if (r)
      s << std::fixed << std::setprecision(2) << *r;
    else
      s << "-";
    return s.str();
  };
  for (const auto& r : rows) {
    os << std::setw(6) << r.level << std::setw(10) << std::setprecision(4) << r.h << std::setw(9)
       << r.n_stress + r.n_disp << std::setw(13) << fmt(r.err.e_S, 3) << std::setw(7) << rate(r.rate_S)
       << std::setw(13) << fmt(r.err.e_u, 3) << std::setw(7) << rate(r.rate_u) << std::setw(13)
       << fmt(r.err.e_div, 3) << std::setw(7) << rate(r.rate_div) << std::setw(10) << fmt(r.residual, 1);
    if (timings)
      os << std::setw(9) << std::fixed << std::setprecision(2) << r.assemble_seconds << std::setw(9) << r.solve_seconds
         << std::defaultfloat;
    os << "\n";
  }
  if (exact_reproduction) os << "exact solution reproduced at every level\n";
  if (!monotone) os << "errors are not monotone\n";
  if (!residual_ok) os << "solver residual above 1e-10\n";
  for (const auto& f : threshold_failures) os << "threshold: " << f << "\n";
  os << (passed() ? "pass" : "FAIL") << "\n";
  return os.str();
}

FactorEstimate factor_estimate(int level, const StressElementSpec& spec) {
  MeshTopology m = build_box_mesh(level);
  return estimate_factorization(saddle_pattern(m, build_dof_map(m, spec)));
}

double physical_memory_bytes() {
  return static_cast<double>(sysconf(_SC_PHYS_PAGES)) * static_cast<double>(sysconf(_SC_PAGESIZE));
}

}  // namespace tetstress::suites
