// OpenMP kernels against their serial references. Arg 1 = parallel, 0 = serial.

#include <benchmark/benchmark.h>

#include "tetstress/solver.hpp"
#include "tetstress/verify.hpp"

using namespace tetstress;

namespace {

struct Fixture {
  MeshTopology mesh;
  Material mat{1, 1};
  ExactSolution ex;
  SaddleSystem sys;
  Solution sol;
  explicit Fixture(int n) : mesh(build_box_mesh(n)), ex(manufactured_solution("trig", mat)) {
    sys = assemble(mesh, {1, false}, mat, ex.data);
    sol = solve(sys);
  }
};

const Fixture& fixture() {
  static const Fixture f(2);
  return f;
}

void BM_ElementMatrices(benchmark::State& st) {
  const auto& f = fixture();
  const auto& ref = reference_element({1, false});
  const int nt = f.mesh.num_tets();
  const bool par = st.range(0);
  std::vector<ElementMatrices> out(nt);
  for (auto _ : st) {
#pragma omp parallel for schedule(dynamic) if (par)
    for (int t = 0; t < nt; ++t)
      out[t] = element_matrices(ref, f.sys.geoms[t], f.mat, f.sys.transforms[t], f.sys.disp_bases[t]);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * nt);
}

void BM_Assemble(benchmark::State& st) {
  const auto& f = fixture();
  AssemblyOptions opt;
  opt.parallel = st.range(0);
  for (auto _ : st) benchmark::DoNotOptimize(assemble(f.mesh, {1, false}, f.mat, f.ex.data, opt).rhs.data());
}

void BM_Load(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(element_loads(f.mesh, f.sys, f.ex.data, st.range(0)).data());
  st.SetItemsProcessed(st.iterations() * f.mesh.num_tets());
}

void BM_ErrorNorms(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(error_norms(f.mesh, f.sys, f.sol, f.ex, -1, st.range(0)).e_S);
  st.SetItemsProcessed(st.iterations() * f.mesh.num_tets());
}

void BM_IdentityTrials(benchmark::State& st) {
  const int trials = 8;
  for (auto _ : st) {
    auto r = st.range(0) ? check_identity(IdentityTag::rel12, trials, 42)
                         : check_identity_serial(IdentityTag::rel12, trials, 42);
    benchmark::DoNotOptimize(r.failures);
  }
  st.SetItemsProcessed(st.iterations() * trials);
}

}  // namespace

BENCHMARK(BM_ElementMatrices)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Assemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Load)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErrorNorms)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IdentityTrials)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
