#include <gtest/gtest.h>

#include <random>

#include "quadrature_oracle.hpp"
#include "tetstress/exactpoly.hpp"

using namespace tetstress;

namespace {

ScalarPoly x(int i) { return ScalarPoly::coordinate(i); }

std::vector<Vec3Q> ref_tet() { return {vec3(0, 0, 0), vec3(1, 0, 0), vec3(0, 1, 0), vec3(0, 0, 1)}; }

double eval_d(const ScalarPoly& p, const oracle::P3& pt) {
  double s = 0;
  for (const auto& [k, c] : p.terms())
    s += c.get_d() * std::pow(pt[0], mono_exp(k, 0)) * std::pow(pt[1], mono_exp(k, 1)) *
         std::pow(pt[2], mono_exp(k, 2));
  return s;
}

std::vector<oracle::P3> to_d(const std::vector<Vec3Q>& v) {
  std::vector<oracle::P3> r;
  for (const auto& p : v) r.push_back({p[0].get_d(), p[1].get_d(), p[2].get_d()});
  return r;
}

}  // namespace

TEST(ExactPoly, AdditiveInverseIsEmpty) {
  ScalarPoly p = x(0);
  p -= x(0);
  EXPECT_TRUE(p.is_zero());
  EXPECT_TRUE(p.terms().empty());
}

TEST(ExactPoly, ProductOfAffine) {
  ScalarPoly l = ScalarPoly::affine(1, {rat(-1), rat(-1), rat(-1)});
  ScalarPoly q = l * l;
  EXPECT_EQ(q.degree(), 2);
  EXPECT_EQ(q.coeff(mono_key(1, 1, 0)), 2);
  EXPECT_EQ(q.coeff(mono_key(0, 0, 0)), 1);
  EXPECT_EQ(q.coeff(mono_key(0, 2, 0)), 1);
}

TEST(ExactPoly, XiInverse) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 5; ++t) {
    ExactPoly T = random_poly(Shape::mat3, 2, rng);
    EXPECT_EQ(op::Xi_inv(op::Xi(T)), T);
    ExactPoly S = random_poly(Shape::sym3, 2, rng);
    EXPECT_EQ(op::Xi_inv(op::Xi(S)), S);
  }
}

TEST(ExactPoly, Derivative) {
  ScalarPoly p = ScalarPoly::monomial(2, 1, 0);
  EXPECT_EQ(p.derivative(0), ScalarPoly::monomial(1, 1, 0, 2));
  EXPECT_EQ(p.derivative(2), ScalarPoly());
  EXPECT_EQ(ExactPoly::scalar(ScalarPoly(rat(3))).degree_bound(), 0);
}

TEST(ExactPoly, ShapeErrors) {
  ExactPoly v = ExactPoly::constant_vector(vec3(1, 2, 3));
  ExactPoly s = ExactPoly::scalar(x(0));
  EXPECT_THROW(v + s, ShapeError);
  EXPECT_THROW(op::vect(v), ShapeError);
  EXPECT_THROW(op::div(s), ShapeError);
  Mat3Q m = zero3();
  m[0][1] = 1;
  EXPECT_THROW(ExactPoly::constant_matrix(m, Shape::sym3), ShapeError);
}

TEST(ExactPoly, CurlGradAndDivCurlVanish) {
  std::mt19937_64 rng(11);
  for (int d = 1; d <= 6; ++d) {
    ExactPoly u = random_poly(Shape::scalar, d, rng);
    EXPECT_TRUE(op::curl(op::grad(u)).is_zero());
    ExactPoly v = random_poly(Shape::vec3, d, rng);
    EXPECT_TRUE(op::div(op::curl(v)).is_zero());
    ExactPoly T = random_poly(Shape::mat3, d, rng);
    EXPECT_TRUE(op::div(op::curl(T)).is_zero());
    EXPECT_TRUE(op::curl(op::grad(v)).is_zero());
  }
}

TEST(ExactPoly, PaperCurlSign) {
  // curl v = -2 vect skw grad v
  std::mt19937_64 rng(3);
  ExactPoly v = random_poly(Shape::vec3, 3, rng);
  EXPECT_EQ(op::curl(v), Rational(-2) * op::vect(op::skw(op::grad(v))));
}

TEST(ExactPoly, SkewcurlAndTracecurl) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    ExactPoly T = random_poly(Shape::mat3, 3, rng);
    EXPECT_TRUE((op::vect(op::skw(op::curl(T))) + Rational(1, 2) * op::div(op::Xi(T))).is_zero());
    EXPECT_TRUE((op::trace(op::curl(T)) + Rational(2) * op::div(op::vect(op::skw(T)))).is_zero());
  }
}

TEST(ExactPoly, CurlcurlStarKeepsSymmetry) {
  std::mt19937_64 rng(9);
  ExactPoly S = random_poly(Shape::sym3, 4, rng);
  ExactPoly R = op::curlcurl_star(S);
  EXPECT_EQ(R.shape(), Shape::sym3);
  EXPECT_TRUE(op::div(R).is_zero());
}

TEST(ExactPoly, LambdaOfConstantVanishes) {
  std::mt19937_64 rng(1);
  ExactPoly S = random_poly(Shape::sym3, 0, rng);
  FrameVector n(vec3(1, 1, 1));
  EXPECT_TRUE(face::Lambda_f(S, n).is_zero());
  EXPECT_THROW(FrameVector(vec3(0, 0, 0)), GeometryError);
}

TEST(ExactPoly, Rel13Pointwise) {
  std::mt19937_64 rng(13);
  for (const Vec3Q& nv : {vec3(-1, 0, 0), vec3(0, -1, 0), vec3(0, 0, -1), vec3(1, 1, 1)}) {
    FrameVector n(nv);
    ExactPoly v = random_poly(Shape::vec3, 3, rng);
    ExactPoly lhs = face::Lambda_f(op::eps(v), n);
    ExactPoly rhs = face::grad_f_grad_f_star(ExactPoly::scalar(vdot(nv, v)), n);
    EXPECT_EQ(lhs, rhs);
  }
}

TEST(ExactPoly, DumpFormat) {
  ScalarPoly p = ScalarPoly::monomial(0, 1, 2, rat(-3, 2)) + ScalarPoly::monomial(1, 0, 0, rat(2));
  EXPECT_EQ(ExactPoly::scalar(p).dump(), "-3/2 · x1^0 x2^1 x3^2\n2 · x1^1 x2^0 x3^0\n");
}

TEST(ExactPoly, ComposeAffine) {
  ScalarPoly p = ScalarPoly::monomial(1, 1, 0);  // x1 x2
  Mat3Q m = identity3();
  m[0][2] = 2;
  ScalarPoly q = p.compose_affine(m, vec3(1, 0, 0));  // (x1 + 2 x3 + 1) x2
  EXPECT_EQ(q, ScalarPoly::monomial(1, 1, 0) + ScalarPoly::monomial(0, 1, 1, 2) +
                   ScalarPoly::monomial(0, 1, 0));
}

TEST(Integration, ReferenceTetValues) {
  auto K = ref_tet();
  EXPECT_EQ(integrate_simplex(ScalarPoly(rat(1)), K).value(), Rational(1, 6));
  ScalarPoly lam = ScalarPoly::affine(1, {rat(-1), rat(-1), rat(-1)});
  EXPECT_EQ(integrate_simplex(lam, K).value(), Rational(1, 24));
  EXPECT_EQ(integrate_simplex(lam * lam, K).value(), Rational(1, 60));
  // oracle agreement for the same integrands
  auto Kd = to_d(K);
  EXPECT_NEAR(oracle::simplex_mean(Kd, [&](const oracle::P3& p) { return eval_d(lam, p); }) / 6,
              1.0 / 24, 1e-12);
  EXPECT_NEAR(oracle::simplex_mean(Kd, [&](const oracle::P3& p) { return eval_d(lam * lam, p); }) / 6,
              1.0 / 60, 1e-12);
}

TEST(Integration, AgreesWithQuadratureOracle) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> c(-4, 4);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<Vec3Q> v(4);
    for (auto& p : v) p = vec3(c(rng), c(rng), c(rng));
    if (sgn(simplex_measure2(v)) == 0) continue;
    ScalarPoly p = random_scalar(6, rng);
    for (int m = 1; m <= 3; ++m) {
      std::vector<Vec3Q> g(v.begin(), v.begin() + m + 1);
      if (sgn(simplex_measure2(g)) == 0) continue;
      SimplexIntegral I = integrate_simplex(p, g);
      double ref = oracle::simplex_mean(to_d(g), [&](const oracle::P3& q) { return eval_d(p, q); });
      EXPECT_NEAR(I.mean.get_d(), ref, 1e-9 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST(Integration, DegenerateSimplexThrows) {
  std::vector<Vec3Q> g = {vec3(0, 0, 0), vec3(1, 1, 1), vec3(2, 2, 2)};
  EXPECT_THROW(integrate_simplex(ScalarPoly(rat(1)), g), GeometryError);
}

TEST(Integration, EdgeMeasureIrrational) {
  std::vector<Vec3Q> e = {vec3(1, 0, 0), vec3(0, 1, 0)};
  SimplexIntegral I = integrate_simplex(ScalarPoly::coordinate(0), e);
  EXPECT_EQ(I.mean, Rational(1, 2));
  EXPECT_EQ(I.measure2, 2);
  EXPECT_FALSE(I.rational_measure());
  EXPECT_NEAR(I.approx(), std::sqrt(2.0) / 2, 1e-15);
}
