#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "tetstress/linalg.hpp"
#include "tetstress/simplex.hpp"

namespace tetstress {

// ---- linear algebra on lists of polynomial fields ----------------------------

// Linear image of a field, as a list of scalar polynomials whose coefficients
// are the coordinates.
using FieldImage = std::function<std::vector<ScalarPoly>(const ExactPoly&)>;

// Column j holds the coordinates of image(fields[j]). Rows are indexed by
// (image component, monomial) over the union of occurring monomials.
QMatrix image_matrix(const std::vector<ExactPoly>& fields, const FieldImage& image);
// Column matrix of the fields themselves (all stored components).
QMatrix field_matrix(const std::vector<ExactPoly>& fields);

// sum_j c[j] fields[j]
ExactPoly combine(const std::vector<ExactPoly>& fields, const std::vector<Rational>& c);
// Exact kernel of the image map, returned as fields.
std::vector<ExactPoly> kernel_fields(const std::vector<ExactPoly>& fields, const FieldImage& image);
// Exact rank of the span.
int field_rank(const std::vector<ExactPoly>& fields);
// A certified basis of the span, chosen among the inputs (leftmost first).
std::vector<ExactPoly> independent_fields(const std::vector<ExactPoly>& fields);

// p(v0 + sum_j y_j (v_j - v0)), a polynomial in the first dim coordinates.
ScalarPoly restrict_to_simplex(const ScalarPoly& p, const std::vector<Vec3Q>& verts);
std::vector<ScalarPoly> restrict_components(const ExactPoly& p, const std::vector<Vec3Q>& verts);
// Tangent vectors v1 - v0, v2 - v0 of face f.
std::array<Vec3Q, 2> face_tangents(const SimplexGeom& g, int f);
// The three t_a' S t_b (a <= b) restricted to face f.
std::vector<ScalarPoly> tangential_trace(const ExactPoly& S, const SimplexGeom& g, int f);

// Component pairs of a symmetric matrix, in storage order of sym_basis.
constexpr std::array<std::array<int, 2>, 6> kSymPairs = {{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}};

// Monomial basis of P_k for the given value shape (component major, graded lex).
std::vector<ExactPoly> poly_basis(int k, Shape shape);
// Barycentric monomials of degree d in the listed local vertices.
std::vector<ScalarPoly> barycentric_monomials(const SimplexGeom& g, const std::vector<int>& verts, int d);

// ---- spaces ------------------------------------------------------------------

enum class SpaceTag { P, Sigma, SigmaTilde, V, N0, N, NboundaryK, M, EpsP0 };
const char* space_name(SpaceTag t);

struct SpaceBasis {
  SpaceTag tag = SpaceTag::P;
  int k = 0;
  std::array<Vec3Q, 4> vertices;
  std::vector<ExactPoly> elements;
  int dim() const { return static_cast<int>(elements.size()); }
};

enum class SigmaVariant { standard, tilde };
enum class MMethod { nullspace, bubble_curlcurl };

SpaceBasis basis_P(int k, Shape shape, const SimplexGeom& g);
// {T in P_{k+3}(S) : div T in P_k}, or div T rigid for the tilde variant (k = 1).
SpaceBasis basis_Sigma(int k, const SimplexGeom& g, SigmaVariant variant = SigmaVariant::standard);
SpaceBasis basis_V(int k, const SimplexGeom& g);
// From the bubble representation over subsimplexes.
SpaceBasis basis_N0(int k, const SimplexGeom& g);
// Same space as the exact kernel of the face traces Q S Q.
SpaceBasis basis_N0_nullspace(int k, const SimplexGeom& g);
SpaceBasis basis_N(int k, const SimplexGeom& g);
SpaceBasis basis_NboundaryK(int k, const SimplexGeom& g);
SpaceBasis basis_M(int k, const SimplexGeom& g, MMethod method = MMethod::nullspace);
// eps applied to P_k(R^3) (power 0, rigid motions dropped), b_K P_{k-4} (power 1)
// or b_K^2 P_{k-8} (power 2); k is the degree of the vector fields.
SpaceBasis basis_eps_image(int k, const SimplexGeom& g, int bubble_power);
// Subspace of N0_3 whose term b_{f0} S_{f0} is absent, f0 opposite local vertex 0.
std::vector<ExactPoly> basis_N00_3(const SimplexGeom& g);

// Closed-form dimensions.
long formula_dim(SpaceTag t, int k);

// Read-only memo keyed by (tag, k, variant, vertices); safe for concurrent use.
std::shared_ptr<const SpaceBasis> cached_space(SpaceTag t, int k, const SimplexGeom& g);

}  // namespace tetstress
