#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <random>

#include "tetstress/solver.hpp"

using namespace tetstress;

namespace {

// Exact shared-DOF values of the Piola images of the reference dual basis on
// tet t, using the mesh frames.
Eigen::MatrixXd exact_piola_dofs(const MeshTopology& m, int t, const ReferenceElement& ref) {
  SimplexGeom K = m.geom(t);
  FrameOverride fr = m.frames(t);
  DofSet ds = build_dofset(ref.spec.tag(), ref.spec.k, K, &fr);
  Eigen::MatrixXd D(ds.size(), ref.nloc);
  for (int j = 0; j < ref.nloc; ++j) {
    auto v = ds.evaluate(piola_map(ref.dual[j], K.B(), K.b()));
    for (int i = 0; i < ds.size(); ++i) D(i, j) = v[i].get_d();
  }
  return D;
}

MeshTopology skewed_mesh() {
  // unit cube mesh with an interior vertex pushed off center
  MeshTopology box = build_box_mesh(2);
  auto v = box.xq;
  v[13] = {Rational(11, 20), Rational(9, 20), Rational(1, 2)};
  return mesh_from_tets(v, box.tets);
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

Vec3d to_ref(const ElementGeometry& g, const Vec3d& x) {
  Eigen::Matrix3d B;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) B(i, j) = g.B[i][j];
  Eigen::Vector3d r = B.inverse() * Eigen::Vector3d(x[0] - g.b[0], x[1] - g.b[1], x[2] - g.b[2]);
  return {r(0), r(1), r(2)};
}

Vec3d to_d(const Vec3Q& v) { return {v[0].get_d(), v[1].get_d(), v[2].get_d()}; }

Vec3d point_on(const std::vector<Vec3d>& verts, const std::array<double, 4>& lam) {
  Vec3d x{};
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (int c = 0; c < 3; ++c) x[c] += lam[i] * verts[i][c];
  return x;
}

Vec3d mat_vec(const Mat3d& a, const Vec3d& v) {
  Vec3d r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i] += a[i][j] * v[j];
  return r;
}

double vdot(const Vec3d& a, const Vec3d& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Eigen::VectorXd random_stress_vector(const SaddleSystem& sys, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.map.size());
  for (int i = 0; i < sys.map.n_stress; ++i) x(i) = u(rng);
  return x;
}

}  // namespace

TEST(Quadrature, ExactForMonomialsUpToDegree) {
  for (int dim = 1; dim <= 3; ++dim) {
    std::vector<Vec3Q> verts;
    verts.push_back(vec3(0, 0, 0));
    for (int i = 0; i < dim; ++i) {
      Vec3Q e = vec3(0, 0, 0);
      e[i] = 1;
      verts.push_back(e);
    }
    for (int deg = 0; deg <= 9; ++deg) {
      const QuadratureRule& q = simplex_rule(dim, deg);
      EXPECT_GE(q.degree, deg);
      MomentTable mt(verts, deg);
      for (MonoKey k : monomials_upto(deg)) {
        bool in_dim = true;
        for (int a = dim; a < 3; ++a) in_dim = in_dim && mono_exp(k, a) == 0;
        if (!in_dim) continue;
        double s = 0;
        for (int p = 0; p < q.size(); ++p) {
          double v = 1;
          for (int a = 0; a < dim; ++a) v *= std::pow(q.bary[p][a + 1], mono_exp(k, a));
          s += q.weight[p] * v;
        }
        EXPECT_NEAR(s, mt.mean(k).get_d(), 1e-13) << "dim " << dim << " deg " << deg;
      }
    }
  }
}

TEST(Quadrature, RejectsBadArguments) {
  EXPECT_THROW(simplex_rule(0, 2), std::invalid_argument);
  EXPECT_THROW(simplex_rule(3, -1), std::invalid_argument);
}

TEST(Material, ComplianceInvertsElasticity) {
  Material mat{2.5, 0.7};
  Mat3d E = {{{1, 0.2, -0.3}, {0.2, -2, 0.5}, {-0.3, 0.5, 0.8}}};
  Mat3d r = mat.compliance(mat.elasticity(E));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(r[i][j], E[i][j], 1e-14);
  EXPECT_THROW((Material{-1, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((Material{1, 0}.validate()), std::invalid_argument);
}

TEST(Reference, CountsAndTables) {
  const auto& r = reference_element({1, false});
  EXPECT_EQ(r.nloc, 162);
  EXPECT_EQ(r.nshared, 150);
  EXPECT_EQ(r.nweights_edge, 3);
  EXPECT_EQ(r.nweights_face, 3);
  const auto& rt = reference_element({1, true});
  EXPECT_EQ(rt.nloc, 156);
  EXPECT_EQ(rt.nloc - rt.nshared, 6);
  EXPECT_THROW(reference_element({4, false}), std::invalid_argument);
  EXPECT_THROW(reference_element({2, true}), std::invalid_argument);
}

class TransformOracle : public ::testing::TestWithParam<bool> {};

TEST_P(TransformOracle, MatchesExactDofsOnMeshTets) {
  StressElementSpec spec{1, GetParam()};
  const auto& ref = reference_element(spec);
  MeshTopology m = skewed_mesh();
  for (int t : {0, 22, 47}) {
    ElementGeometry g = element_geometry(m, t);
    Eigen::MatrixXd T = dof_transform(ref, g);
    Eigen::MatrixXd P = exact_piola_dofs(m, t, ref) * T;
    Eigen::MatrixXd expect = Eigen::MatrixXd::Identity(ref.nshared, ref.nloc);
    EXPECT_LT(rel_diff(P.topRows(ref.nshared), expect), 1e-11) << "tet " << t;
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, TransformOracle, ::testing::Values(false, true));

TEST(Kernels, ContractionMatchesQuadrature) {
  Material mat{1.7, 0.6};
  MeshTopology m = skewed_mesh();
  for (bool tilde : {false, true}) {
    const auto& ref = reference_element({1, tilde});
    for (int t : {3, 19, 40}) {
      ElementGeometry g = element_geometry(m, t);
      auto T = dof_transform(ref, g);
      auto Psi = displacement_basis(ref, g);
      auto a = element_matrices(ref, g, mat, T, Psi);
      auto b = element_matrices_quadrature(ref, g, mat, T, Psi, 10);
      EXPECT_LT(rel_diff(a.A, b.A), 1e-10);
      EXPECT_LT(rel_diff(a.B, b.B), 1e-10);
    }
  }
}

TEST(Kernels, ElementMatrixProperties) {
  Material mat{1, 1};
  MeshTopology m = skewed_mesh();
  const auto& ref = reference_element({1, false});
  ElementGeometry g = element_geometry(m, 5);
  auto T = dof_transform(ref, g);
  auto Psi = displacement_basis(ref, g);
  auto em = element_matrices(ref, g, mat, T, Psi);
  EXPECT_LT((em.A - em.A.transpose()).norm(), 1e-12 * em.A.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(em.A);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(em.B);
  lu.setThreshold(1e-10);
  EXPECT_EQ(lu.rank(), 12);
  // the last interior block (div-free bubbles) has zero divergence
  const int nm = ref.group_size.back();
  EXPECT_LT(em.B.rightCols(nm).norm(), 1e-12 * em.B.norm());
}

TEST(Assembly, ZeroDataGivesZeroSolution) {
  MeshTopology m = build_box_mesh(1);
  Material mat{1, 1};
  auto ex = manufactured_solution("zero", mat);
  auto sys = assemble(m, {1, false}, mat, ex.data);
  auto sol = solve(sys);
  EXPECT_EQ(sol.x.norm(), 0.0);
}

TEST(Assembly, SymmetricAndDeterministic) {
  MeshTopology m = skewed_mesh();
  Material mat{1, 1};
  auto ex = manufactured_solution("trig", mat);
  AssemblyOptions par, ser;
  ser.parallel = false;
  par.chunk = 7;
  auto a = assemble(m, {1, false}, mat, ex.data, par);
  auto b = assemble(m, {1, false}, mat, ex.data, ser);
  Eigen::SparseMatrix<double> d = a.K - Eigen::SparseMatrix<double>(a.K.transpose());
  EXPECT_LT(d.norm(), 1e-12 * a.K.norm());
  ASSERT_EQ(a.K.nonZeros(), b.K.nonZeros());
  for (long i = 0; i < a.K.nonZeros(); ++i) ASSERT_EQ(a.K.valuePtr()[i], b.K.valuePtr()[i]);
  for (int i = 0; i < a.rhs.size(); ++i) ASSERT_EQ(a.rhs(i), b.rhs(i));
}

TEST(Assembly, QuadratureDegreeTooLowIsRejected) {
  MeshTopology m = build_box_mesh(1);
  Material mat{1, 1};
  auto ex = manufactured_solution("patch", mat);
  AssemblyOptions opt;
  opt.quad_degree = 4;
  EXPECT_THROW(assemble(m, {1, false}, mat, ex.data, opt), std::invalid_argument);
}

class PatchTest : public ::testing::TestWithParam<int> {};

TEST_P(PatchTest, ReproducesQuadraticStress) {
  MeshTopology m = GetParam() == 0 ? skewed_mesh() : build_box_mesh(GetParam());
  Material mat{1.3, 0.8};
  auto ex = manufactured_solution("patch", mat);
  auto sys = assemble(m, {1, false}, mat, ex.data);
  auto sol = solve(sys);
  EXPECT_LT(sol.residual, 1e-10);
  auto e = error_norms(m, sys, sol, ex);
  EXPECT_LT(e.e_S, 1e-8);
  EXPECT_LT(e.e_u, 1e-8);
  EXPECT_LT(e.e_div, 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Meshes, PatchTest, ::testing::Values(1, 2, 0));

TEST(Convergence, TrigErrorsDecrease) {
  Material mat{1, 1};
  auto ex = manufactured_solution("trig", mat);
  double prev_s = 1e300, prev_u = 1e300;
  for (int n : {1, 2}) {
    MeshTopology m = build_box_mesh(n);
    auto sys = assemble(m, {1, false}, mat, ex.data);
    auto sol = solve(sys);
    auto e = error_norms(m, sys, sol, ex);
    EXPECT_LT(e.e_S, prev_s);
    EXPECT_LT(e.e_u, prev_u);
    prev_s = e.e_S;
    prev_u = e.e_u;
  }
}

TEST(Errors, SerialMatchesParallel) {
  MeshTopology m = build_box_mesh(1);
  Material mat{1, 1};
  auto ex = manufactured_solution("trig", mat);
  auto sys = assemble(m, {1, false}, mat, ex.data);
  auto sol = solve(sys);
  auto a = error_norms(m, sys, sol, ex, -1, true);
  auto b = error_norms(m, sys, sol, ex, -1, false);
  EXPECT_EQ(a.e_S, b.e_S);
  EXPECT_EQ(a.e_u, b.e_u);
  EXPECT_EQ(a.e_div, b.e_div);
}

TEST(Load, SerialMatchesParallelAndAssembledRhs) {
  MeshTopology m = build_box_mesh(1);
  Material mat{1, 1};
  auto ex = manufactured_solution("trig", mat);
  auto sys = assemble(m, {1, false}, mat, ex.data);
  auto a = element_loads(m, sys, ex.data, true);
  auto b = element_loads(m, sys, ex.data, false);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sys.map.size());
  for (int t = 0; t < m.num_tets(); ++t) {
    EXPECT_EQ(a[t].stress, b[t].stress);
    EXPECT_EQ(a[t].disp, b[t].disp);
    for (int i = 0; i < a[t].stress.size(); ++i) rhs(sys.map.stress_l2g[t][i]) += a[t].stress(i);
    rhs.segment(sys.map.disp_offset[t], sys.map.per_tet_disp) += a[t].disp;
  }
  EXPECT_EQ(rhs, sys.rhs);
}

TEST(Manufactured, UnknownIdThrows) {
  EXPECT_THROW(manufactured_solution("nope", Material{}), std::invalid_argument);
}

TEST(Space, DivergenceLiesInDisplacementSpace) {
  for (int k = 1; k <= 3; ++k) {
    const auto& ref = reference_element({k, false});
    double worst = 0;
    for (std::size_t p = 0; p < ref.div_monos.size(); ++p)
      if (mono_deg(ref.div_monos[p]) > k)
        for (int c = 0; c < 3; ++c) worst = std::max(worst, ref.div_coef[c].row(p).cwiseAbs().maxCoeff());
    EXPECT_LT(worst, 1e-10) << "k = " << k;
  }
}

TEST(Space, FloatConformityOnSkewedMesh) {
  MeshTopology m = skewed_mesh();
  Material mat{1, 1};
  auto sys = assemble(m, {1, false}, mat, manufactured_solution("zero", mat).data);
  const auto& ref = reference_element({1, false});
  Eigen::VectorXd x = random_stress_vector(sys, 3);
  const QuadratureRule& q = simplex_rule(2, 6);
  double worst = 0;
  for (int f = 0; f < m.num_faces(); ++f) {
    if (m.boundary_face(f)) continue;
    std::vector<Vec3d> verts;
    for (int v : m.faces[f]) verts.push_back(m.x[v]);
    const Vec3d n = to_d(m.face_normal[f]);
    for (int p = 0; p < q.size(); ++p) {
      const Vec3d xp = point_on(verts, q.bary[p]);
      std::array<Vec3d, 2> tn;
      for (int s = 0; s < 2; ++s) {
        int t = m.face_tets[f][s];
        tn[s] = mat_vec(stress_value(ref, sys.geoms[t], local_piola_coeffs(sys, x, t), to_ref(sys.geoms[t], xp)), n);
      }
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(tn[0][c] - tn[1][c]));
    }
  }
  EXPECT_LT(worst, 1e-10);
}

// int S : eps(phi) + int div S . phi = int_boundary S n . phi for polynomial phi.
double divergence_defect(const MeshTopology& m, const SaddleSystem& sys, const Eigen::VectorXd& x, bool conforming_only) {
  const auto& ref = reference_element(sys.spec);
  auto phi = [](const Vec3d& p) { return Vec3d{p[0] * p[1] + 1, p[2] * p[2] - p[0], p[1] * p[2] + 2 * p[0]}; };
  auto grad = [](const Vec3d& p) {
    Mat3d g = {{{p[1], p[0], 0}, {-1, 0, 2 * p[2]}, {2, p[2], p[1]}}};
    return g;
  };
  const QuadratureRule& q3 = simplex_rule(3, 8);
  const QuadratureRule& q2 = simplex_rule(2, 8);
  double lhs = 0, rhs = 0, scale = 0;
  for (int t = 0; t < m.num_tets(); ++t) {
    const auto& g = sys.geoms[t];
    Eigen::VectorXd pc = local_piola_coeffs(sys, x, t);
    if (!conforming_only) pc = sys.transforms[t] * Eigen::VectorXd::Random(ref.nloc);
    std::vector<Vec3d> tv;
    for (int v : m.tets[t]) tv.push_back(m.x[v]);
    for (int p = 0; p < q3.size(); ++p) {
      const Vec3d xp = point_on(tv, q3.bary[p]);
      const Vec3d xh = to_ref(g, xp);
      const Mat3d S = stress_value(ref, g, pc, xh), G = grad(xp);
      const Vec3d d = stress_divergence(ref, g, pc, xh), f = phi(xp);
      double a = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a += S[i][j] * G[i][j];
      lhs += q3.weight[p] * g.volume * (a + vdot(d, f));
      scale += q3.weight[p] * g.volume * std::abs(a);
    }
    for (int lf = 0; lf < 4; ++lf) {
      const int f = m.tet_faces[t][lf];
      if (!m.boundary_face(f)) continue;
      std::vector<Vec3d> fv;
      for (int v : m.faces[f]) fv.push_back(m.x[v]);
      const Vec3d n = to_d(m.face_normal[f]);
      for (int p = 0; p < q2.size(); ++p) {
        const Vec3d xp = point_on(fv, q2.bary[p]);
        rhs += q2.weight[p] / 2 * vdot(mat_vec(stress_value(ref, g, pc, to_ref(g, xp)), n), phi(xp));
      }
    }
  }
  return std::abs(lhs - rhs) / scale;
}

TEST(Space, DistributionalDivergenceMatches) {
  MeshTopology m = skewed_mesh();
  Material mat{1, 1};
  for (bool tilde : {false, true}) {
    auto sys = assemble(m, {1, tilde}, mat, manufactured_solution("zero", mat).data);
    Eigen::VectorXd x = random_stress_vector(sys, 11);
    EXPECT_LT(divergence_defect(m, sys, x, true), 1e-10);
    // independent coefficients per tet break the normal continuity
    EXPECT_GT(divergence_defect(m, sys, x, false), 1e-3);
  }
}

TEST(Space, CommutingInterpolationInFloats) {
  // the canonical interpolant of a quartic T satisfies div(Pi T) = P_V div T tetwise
  MeshTopology m = build_box_mesh(1);
  Material mat{1, 1};
  auto sys = assemble(m, {1, false}, mat, manufactured_solution("zero", mat).data);
  const auto& ref = reference_element({1, false});
  std::mt19937_64 rng(23);
  ExactPoly T = random_poly(Shape::sym3, 4, rng);
  ExactPoly divT = op::div(T);
  std::vector<std::optional<Rational>> global(sys.map.n_stress);
  for (int t = 0; t < m.num_tets(); ++t) {
    SimplexGeom K = m.geom(t);
    FrameOverride fr = m.frames(t);
    auto v = build_dofset(ElementTag::SigmaK, 1, K, &fr).evaluate(T);
    for (int i = 0; i < ref.nloc; ++i) {
      auto& slot = global[sys.map.stress_l2g[t][i]];
      if (slot) ASSERT_EQ(*slot, v[i]);  // shared DOFs agree exactly
      slot = v[i];
    }
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.map.size());
  for (int i = 0; i < sys.map.n_stress; ++i) x(i) = global[i]->get_d();
  // interior coefficients are reference DOFs of the pulled-back field
  DofSet ref_dofs = build_dofset(ElementTag::SigmaK, 1, reference_tet());
  for (int t = 0; t < m.num_tets(); ++t) {
    SimplexGeom K = m.geom(t);
    ExactPoly Bi = ExactPoly::constant_matrix(inverse(K.B()));
    ExactPoly BiT = ExactPoly::constant_matrix(transpose(inverse(K.B())));
    ExactPoly That = (Bi * pull_back(T, K.B(), K.b()) * BiT).as(Shape::sym3);
    auto v = ref_dofs.evaluate(That);
    for (int i = ref.nshared; i < ref.nloc; ++i) x(sys.map.stress_l2g[t][i]) = v[i].get_d();
  }
  const QuadratureRule& q = simplex_rule(3, 8);
  for (int t = 0; t < m.num_tets(); ++t) {
    const auto& g = sys.geoms[t];
    Eigen::VectorXd pc = local_piola_coeffs(sys, x, t);
    Eigen::VectorXd mom = Eigen::VectorXd::Zero(3 * ref.nmono_disp);
    double scale = 0;
    for (int p = 0; p < q.size(); ++p) {
      Vec3d xh = {q.bary[p][1], q.bary[p][2], q.bary[p][3]};
      Vec3d xp{};
      for (int i = 0; i < 3; ++i) {
        xp[i] = g.b[i];
        for (int j = 0; j < 3; ++j) xp[i] += g.B[i][j] * xh[j];
      }
      Vec3Q xq = {Rational(xp[0]), Rational(xp[1]), Rational(xp[2])};
      Vec3d dh = stress_divergence(ref, g, pc, xh);
      Eigen::VectorXd mv = monomial_values(ref.disp_monos, xh);
      for (int c = 0; c < 3; ++c) {
        double e = dh[c] - divT[c].eval(xq).get_d();
        mom.segment(c * ref.nmono_disp, ref.nmono_disp) += q.weight[p] * e * mv;
        scale += q.weight[p] * std::abs(dh[c]);
      }
    }
    EXPECT_LT(mom.norm(), 1e-10 * std::max(1.0, scale)) << "tet " << t;
  }
}
