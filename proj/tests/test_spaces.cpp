#include <gtest/gtest.h>

#include <random>

#include "tetstress/spaces.hpp"

using namespace tetstress;

namespace {

SimplexGeom skewed_tet() {
  return SimplexGeom({vec3(0, 0, 0), vec3(3, 1, 0), vec3(-1, 2, 1), vec3(1, 1, 4)});
}

bool same_span(const std::vector<ExactPoly>& a, const std::vector<ExactPoly>& b) {
  std::vector<ExactPoly> u = a;
  u.insert(u.end(), b.begin(), b.end());
  int r = field_rank(u);
  return r == field_rank(a) && r == field_rank(b);
}

}  // namespace

TEST(Spaces, PolynomialDims) {
  SimplexGeom K = reference_tet();
  EXPECT_EQ(basis_P(1, Shape::scalar, K).dim(), 4);
  EXPECT_EQ(basis_P(4, Shape::sym3, K).dim(), 210);
  EXPECT_EQ(basis_V(1, K).dim(), 12);
  EXPECT_EQ(field_rank(basis_P(3, Shape::skew3, K).elements), 60);
}

TEST(Spaces, SigmaDims) {
  SimplexGeom K = reference_tet();
  auto S1 = basis_Sigma(1, K);
  EXPECT_EQ(S1.dim(), 162);
  for (const auto& T : S1.elements) EXPECT_LE(op::div(T).degree(), 1);
  EXPECT_EQ(basis_Sigma(2, K).dim(), 261);
  EXPECT_EQ(basis_Sigma(1, K, SigmaVariant::tilde).dim(), 156);
}

TEST(Spaces, N0BothConstructions) {
  SimplexGeom K = skewed_tet();
  for (int k = 1; k <= 4; ++k) {
    auto a = basis_N0(k, K);
    auto b = basis_N0_nullspace(k, K);
    EXPECT_EQ(a.dim(), formula_dim(SpaceTag::N0, k)) << k;
    EXPECT_EQ(b.dim(), formula_dim(SpaceTag::N0, k)) << k;
    EXPECT_EQ(field_rank(a.elements), a.dim());
    EXPECT_TRUE(same_span(a.elements, b.elements)) << k;
  }
  for (const auto& S : basis_N0(3, K).elements)
    for (int f = 0; f < 4; ++f)
      for (const auto& c : tangential_trace(S, K, f)) EXPECT_TRUE(c.is_zero());
}

TEST(Spaces, NDims) {
  SimplexGeom K = reference_tet();
  for (int k = 4; k <= 5; ++k) EXPECT_EQ(basis_N(k, K).dim(), formula_dim(SpaceTag::N, k)) << k;
}

TEST(Spaces, NVanishesOnEdges) {
  SimplexGeom K = skewed_tet();
  for (const auto& S : basis_N(4, K).elements)
    for (int e = 0; e < 6; ++e)
      for (const auto& c : restrict_components(S, K.edge_vertices(e))) EXPECT_TRUE(c.is_zero());
}

TEST(Spaces, NboundaryKDims) {
  SimplexGeom K = skewed_tet();
  EXPECT_EQ(basis_NboundaryK(4, K).dim(), 12);
  EXPECT_EQ(basis_NboundaryK(5, K).dim(), 30);
}

TEST(Spaces, MDimsAndConstraints) {
  SimplexGeom K = reference_tet();
  EXPECT_EQ(basis_M(3, K).dim(), 0);
  auto M4 = basis_M(4, K);
  EXPECT_EQ(M4.dim(), 6);
  for (const auto& S : M4.elements) {
    EXPECT_TRUE(op::div(S).is_zero());
    for (int f = 0; f < 4; ++f)
      for (const auto& c : restrict_components(matvec(S, K.face(f).n.v()), K.face_vertices(f)))
        EXPECT_TRUE(c.is_zero());
  }
}

TEST(Spaces, MBubbleMethodSameSpan) {
  SimplexGeom K = skewed_tet();
  for (int k = 4; k <= 5; ++k) {
    auto a = basis_M(k, K);
    auto b = basis_M(k, K, MMethod::bubble_curlcurl);
    EXPECT_EQ(a.dim(), formula_dim(SpaceTag::M, k));
    EXPECT_EQ(b.dim(), a.dim());
    EXPECT_TRUE(same_span(a.elements, b.elements));
  }
  EXPECT_THROW(basis_M(6, K, MMethod::bubble_curlcurl), std::invalid_argument);
}

TEST(Spaces, N00InjectiveUnderCurlcurl) {
  SimplexGeom K = reference_tet();
  auto src = basis_N00_3(K);
  EXPECT_EQ(src.size(), 21u);
  std::vector<ExactPoly> img;
  for (const auto& S : src) img.push_back(op::curlcurl_star(K.bubble_K() * S));
  EXPECT_EQ(field_rank(img), 21);
}

TEST(Spaces, EpsImage) {
  SimplexGeom K = reference_tet();
  EXPECT_EQ(basis_eps_image(1, K, 0).dim(), 6);
  EXPECT_EQ(basis_eps_image(2, K, 0).dim(), 24);
  // eps of bubble fields lies in N_{k-1}
  auto E = basis_eps_image(6, K, 1);
  EXPECT_EQ(E.dim(), 30);
  auto N5 = basis_N(5, K);
  EXPECT_TRUE(same_span(N5.elements, [&] {
    auto u = N5.elements;
    u.insert(u.end(), E.elements.begin(), E.elements.end());
    return u;
  }()));
}

TEST(Spaces, PiolaPreservesSigmaAndM) {
  SimplexGeom R = reference_tet();
  SimplexGeom K = skewed_tet();
  auto push = [&](const std::vector<ExactPoly>& v) {
    std::vector<ExactPoly> out;
    for (const auto& T : v) out.push_back(piola_map(T, K.B(), K.b()));
    return out;
  };
  auto SR = push(basis_Sigma(1, R).elements);
  EXPECT_TRUE(same_span(SR, basis_Sigma(1, K).elements));
  auto MR = push(basis_M(4, R).elements);
  EXPECT_TRUE(same_span(MR, basis_M(4, K).elements));
}

TEST(Spaces, CacheReturnsSameObject) {
  SimplexGeom K = reference_tet();
  auto a = cached_space(SpaceTag::M, 4, K);
  auto b = cached_space(SpaceTag::M, 4, K);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(a->dim(), 6);
}

TEST(Spaces, Formulas) {
  EXPECT_EQ(formula_dim(SpaceTag::Sigma, 3), 396);
  EXPECT_EQ(formula_dim(SpaceTag::M, 6), 48);
  EXPECT_EQ(formula_dim(SpaceTag::N, 6), 66);
  EXPECT_EQ(formula_dim(SpaceTag::NboundaryK, 5), 30);
}
