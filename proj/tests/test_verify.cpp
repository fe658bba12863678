#include <gtest/gtest.h>

#include "tetstress/verify.hpp"

using namespace tetstress;

namespace {

void expect_exact(const ComplexReport& r) {
  EXPECT_TRUE(r.exact) << complex_name(r.tag) << " k=" << r.k << " face=" << r.face;
  for (std::size_t i = 0; i < r.links.size(); ++i) {
    EXPECT_TRUE(r.links[i].composes_to_zero) << r.links[i].op;
    EXPECT_TRUE(r.links[i].image_in_target) << r.links[i].op;
  }
  for (std::size_t i = 0; i < r.exact_at.size(); ++i) EXPECT_TRUE(r.exact_at[i]) << "at " << r.spaces[i + 1];
  EXPECT_EQ(r.alternating_sum, 0);
}

SimplexGeom skewed() { return SimplexGeom({vec3(0, 0, 0), vec3(3, 1, 0), vec3(-1, 2, 1), vec3(1, 1, 4)}); }

}  // namespace

TEST(Complex, NamesRoundTrip) {
  for (auto t : {ComplexTag::deRham, ComplexTag::cd1, ComplexTag::elas2d1, ComplexTag::elas2d2, ComplexTag::ses,
                 ComplexTag::ses2})
    EXPECT_EQ(complex_from_name(complex_name(t)), t);
  EXPECT_FALSE(complex_from_name("nope"));
}

TEST(Complex, DeRham) {
  for (int k = 0; k <= 3; ++k) expect_exact(check_complex(ComplexTag::deRham, k, reference_tet()));
}

TEST(Complex, Cd1IncludingNegativeK) {
  for (int k = -3; k <= 3; ++k) {
    auto r = check_complex(ComplexTag::cd1, k, reference_tet());
    expect_exact(r);
  }
}

TEST(Complex, Cd1DimensionsAtKZero) {
  auto r = check_complex(ComplexTag::cd1, 0, reference_tet());
  std::vector<int> want = {6, 105, 120, 24, 3};
  EXPECT_EQ(r.dims, want);
}

TEST(Complex, FaceSequencesOnEveryFace) {
  for (const auto& g : {reference_tet(), skewed()})
    for (int f = 0; f < 4; ++f)
      for (int k = 0; k <= 3; ++k) {
        expect_exact(check_complex(ComplexTag::elas2d1, k, g, f));
        expect_exact(check_complex(ComplexTag::elas2d2, k, g, f));
      }
}

TEST(Complex, ShortSequences) {
  for (int k = 1; k <= 3; ++k) expect_exact(check_complex(ComplexTag::ses, k, reference_tet()));
  for (int k = 4; k <= 5; ++k) expect_exact(check_complex(ComplexTag::ses2, k, reference_tet()));
}

TEST(Complex, BrokenSequenceIsReported) {
  // ses needs k >= 1; an out-of-range face is rejected
  EXPECT_THROW(check_complex(ComplexTag::ses, 0, reference_tet()), std::invalid_argument);
  EXPECT_THROW(check_complex(ComplexTag::deRham, 0, reference_tet(), 4), std::invalid_argument);
}

TEST(Identity, NamesRoundTrip) {
  EXPECT_EQ(all_identities().size(), 15u);
  for (auto t : all_identities()) EXPECT_EQ(identity_from_name(identity_name(t)), t);
}

class AllIdentities : public ::testing::TestWithParam<IdentityTag> {};

TEST_P(AllIdentities, TwentyTrials) {
  auto r = check_identity(GetParam(), 20, 17);
  EXPECT_TRUE(r.passed()) << identity_name(GetParam()) << " failed trial " << r.first_failure << "\n"
                          << r.counterexample;
}

INSTANTIATE_TEST_SUITE_P(Verify, AllIdentities, ::testing::ValuesIn(all_identities()),
                         [](const auto& info) {
                           std::string s = identity_name(info.param);
                           for (auto& c : s)
                             if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
                           return s;
                         });

TEST(Identity, SerialMatchesParallel) {
  for (auto t : {IdentityTag::rel05, IdentityTag::rel09, IdentityTag::rot_Lambda}) {
    auto a = check_identity(t, 8, 5), b = check_identity_serial(t, 8, 5);
    EXPECT_EQ(a.trials, b.trials);
    EXPECT_EQ(a.failures, b.failures);
    EXPECT_EQ(a.counterexample, b.counterexample);
  }
}

TEST(Identity, TrialsAreReproducible) {
  auto a = identity_trial(IdentityTag::rel07, 3, 99), b = identity_trial(IdentityTag::rel07, 3, 99);
  EXPECT_EQ(a.ok, b.ok);
  EXPECT_EQ(a.residual, b.residual);
}

// ---- membership ----------------------------------------------------------------

TEST(Membership, SmoothFieldIsMember) {
  auto [K1, K2] = two_tet_pair();
  std::mt19937_64 rng(3);
  ExactPoly S = random_poly(Shape::sym3, 3, rng);
  auto r = check_h_curlcurl_membership(S, K1, S, K2);
  EXPECT_TRUE(r.member);
  EXPECT_EQ(r.shared_face_1, 0);
  for (const auto& d : distributional_defect(S, K1, S, K2)) EXPECT_EQ(sgn(d), 0);
}

TEST(Membership, TangentialJumpIsNotMember) {
  auto [K1, K2] = two_tet_pair();
  std::mt19937_64 rng(4);
  ExactPoly S = random_poly(Shape::sym3, 2, rng);
  // face 0 lies in z = 0; a jump in the xy block has Q J Q != 0
  ExactPoly J = ExactPoly::sym_unit(0, 1, ScalarPoly(rat(1)));
  auto r = check_h_curlcurl_membership(S, K1, S + J, K2);
  EXPECT_FALSE(r.member);
  EXPECT_FALSE(r.qsq_continuous);
  bool nonzero = false;
  for (const auto& d : distributional_defect(S, K1, S + J, K2)) nonzero |= sgn(d) != 0;
  EXPECT_TRUE(nonzero);
}

TEST(Membership, NormalJumpIsMember) {
  // J = e3 e3': Q J Q = 0 and Lambda_f(J) = 0, so the pair stays in the space
  auto [K1, K2] = two_tet_pair();
  std::mt19937_64 rng(6);
  ExactPoly S = random_poly(Shape::sym3, 2, rng);
  ExactPoly J = ExactPoly::sym_unit(2, 2, ScalarPoly(rat(1)));
  EXPECT_TRUE(check_h_curlcurl_membership(S, K1, S + J, K2).member);
  for (const auto& d : distributional_defect(S, K1, S + J, K2)) EXPECT_EQ(sgn(d), 0);
}

TEST(Membership, StrainOfKinkedDisplacementIsMember) {
  auto [K1, K2] = two_tet_pair();
  std::mt19937_64 rng(5);
  ExactPoly v1 = random_poly(Shape::vec3, 3, rng);
  ExactPoly c = random_poly(Shape::vec3, 1, rng);
  ScalarPoly z = ScalarPoly::coordinate(2);  // vanishes on the shared face
  ExactPoly v2 = v1 + z * c;
  auto r = check_h_curlcurl_membership(op::eps(v1), K1, op::eps(v2), K2);
  EXPECT_TRUE(r.member);
  for (const auto& d : distributional_defect(op::eps(v1), K1, op::eps(v2), K2)) EXPECT_EQ(sgn(d), 0);
}

TEST(Membership, RejectsTetsWithoutSharedFace) {
  SimplexGeom K1 = reference_tet();
  SimplexGeom K2({vec3(5, 5, 5), vec3(6, 5, 5), vec3(5, 6, 5), vec3(5, 5, 6)});
  ExactPoly S(Shape::sym3);
  EXPECT_THROW(check_h_curlcurl_membership(S, K1, S, K2), GeometryError);
}

TEST(Membership, MatchedThetaPairIsConforming) {
  auto [K1, K2] = two_tet_pair();
  for (std::uint64_t seed : {1u, 2u}) {
    auto [S1, S2] = matched_theta_pair(seed);
    auto r = check_h_curlcurl_membership(S1, K1, S2, K2);
    EXPECT_TRUE(r.qsq_continuous) << seed;
    EXPECT_TRUE(r.lambda_continuous) << seed;
    EXPECT_FALSE(S1 == S2);
  }
}

TEST(Identity, CurlCurlByPartsFaceFormNeedsEdgeTerms) {
  std::mt19937_64 rng(8);
  for (const auto& g : {reference_tet(), skewed()}) {
    ExactPoly S = random_poly(Shape::sym3, 4, rng);
    // face bubbles vanish on all six edges
    ExactPoly T = g.bubble_face(0) * random_poly(Shape::mat3, 0, rng) + g.bubble_face(3) * random_poly(Shape::mat3, 1, rng);
    EXPECT_EQ(sgn(curlcurl_by_parts_residual(S, T, g, false)), 0);
    EXPECT_EQ(sgn(curlcurl_by_parts_residual(S, T, g, true)), 0);
    ExactPoly T3 = random_poly(Shape::mat3, 3, rng);
    EXPECT_EQ(sgn(curlcurl_by_parts_residual(S, T3, g, true)), 0);
    EXPECT_NE(sgn(curlcurl_by_parts_residual(S, T3, g, false)), 0);
  }
}
