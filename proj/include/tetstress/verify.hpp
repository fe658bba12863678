#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tetstress/dofs.hpp"

namespace tetstress {

// ---- exact sequences ----------------------------------------------------------

enum class ComplexTag { deRham, cd1, elas2d1, elas2d2, ses, ses2 };
const char* complex_name(ComplexTag t);
std::optional<ComplexTag> complex_from_name(const std::string& s);

struct LinkReport {
  std::string op;
  int dim_from = 0;
  int rank = 0;
  bool rank_certified_mod_p = false;  // false: exact fallback was needed
  bool composes_to_zero = true;       // next operator kills this image
  bool image_in_target = true;
};

struct ComplexReport {
  ComplexTag tag;
  int k = 0;
  int face = -1;  // for the face sequences
  std::vector<std::string> spaces;  // including the leading kernel space when present
  std::vector<int> dims;
  std::vector<LinkReport> links;
  std::vector<bool> exact_at;  // one entry per space after the leading one
  long alternating_sum = 0;
  bool exact = false;
  double seconds = 0;
};

// Exactness by rank-nullity at every space. Composition to zero is checked
// exactly, which bounds each rank from above; a modular rank meeting the bound
// certifies it, otherwise the exact rank is computed.
ComplexReport check_complex(ComplexTag tag, int k, const SimplexGeom& g, int face = 0);

// ---- identities --------------------------------------------------------------

enum class IdentityTag {
  skewcurl,
  curlskew,
  tracecurl,
  curlrel,
  rel01,
  rel05,
  rel06,
  rel7,
  rel12,
  rel13,
  rot_Lambda,
  Lambda_f_comp,
  rel07,
  rel09,
  int_parts_curlcurl
};
const char* identity_name(IdentityTag t);
std::optional<IdentityTag> identity_from_name(const std::string& s);
const std::vector<IdentityTag>& all_identities();

struct TrialOutcome {
  bool ok = false;
  std::string residual;  // first nonzero residual, empty when ok
};

// One trial: random fields from (seed, trial); even trials on the reference
// tet, odd ones on a fixed random tet; face = trial mod 4.
TrialOutcome identity_trial(IdentityTag t, int trial, std::uint64_t seed);

// int_K S:curlcurl* T - int_K curl* curl S:T plus the face terms of the
// curlcurl* integration by parts (S symmetric). On a polyhedron the face-wise
// integrations by parts also leave edge terms; with_edge_terms adds them, and
// then the residual is zero for all S, T. Without them it is zero when T
// vanishes on every edge.
Rational curlcurl_by_parts_residual(const ExactPoly& S, const ExactPoly& T, const SimplexGeom& g,
                                    bool with_edge_terms);

struct IdentityReport {
  IdentityTag tag;
  int trials = 0;
  int failures = 0;
  int first_failure = -1;
  std::string counterexample;
  double seconds = 0;
  bool passed() const { return trials > 0 && failures == 0; }
};
IdentityReport check_identity(IdentityTag t, int trials, std::uint64_t seed);         // OpenMP over trials
IdentityReport check_identity_serial(IdentityTag t, int trials, std::uint64_t seed);  // reference loop

// ---- H(curlcurl*) membership on two tets --------------------------------------

struct MembershipReport {
  bool member = false;
  bool qsq_continuous = false;
  bool lambda_continuous = false;
  int shared_face_1 = -1;  // local index in the first tet
};
// S1 on K1, S2 on K2; K1 and K2 share exactly one face.
MembershipReport check_h_curlcurl_membership(const ExactPoly& S1, const SimplexGeom& K1, const ExactPoly& S2,
                                             const SimplexGeom& K2);

// Distributional test: for test fields Phi vanishing to second order on the
// boundary of K1 u K2, returns sum_i int_Ki (S : curlcurl* Phi - curl* curl S : Phi).
// All zero iff the piecewise curlcurl* S is the distributional one (tested
// against the given family).
std::vector<Rational> distributional_defect(const ExactPoly& S1, const SimplexGeom& K1, const ExactPoly& S2,
                                            const SimplexGeom& K2);

// Two tets sharing face (0,1,2) with identical local numbering on it.
std::pair<SimplexGeom, SimplexGeom> two_tet_pair();

// Theta fields on two_tet_pair() whose DOFs on the shared vertices, edges and
// face agree (global edge frames, common face normal); other DOFs random.
std::pair<ExactPoly, ExactPoly> matched_theta_pair(std::uint64_t seed);

}  // namespace tetstress
