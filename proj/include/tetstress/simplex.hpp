#pragma once

#include <array>
#include <vector>

#include "tetstress/exactpoly.hpp"

namespace tetstress {

// Local faces are the vertex triples in lexicographic order; face f is
// opposite vertex 3 - f. Local edges are the pairs in lexicographic order.
constexpr std::array<std::array<int, 3>, 4> kFaceVerts = {{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
constexpr std::array<std::array<int, 2>, 6> kEdgeVerts = {{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
constexpr int face_opposite(int f) { return 3 - f; }

struct FaceRecord {
  std::array<int, 3> verts;
  int opposite;
  FrameVector n;   // outward, |n| = 2 area
  Rational area2;  // squared area
  Rational h2;     // squared distance of the opposite vertex to the face plane
};

struct EdgeRecord {
  std::array<int, 2> verts;
  FrameVector s;              // v[b] - v[a]
  std::array<int, 2> faces;   // (f-, f+), f- the lower local index
  std::array<FrameVector, 2> m;  // in-face normals, pointing from e into f-/f+
  std::array<int, 2> third;   // third vertex of f-, f+
};

class SimplexGeom {
 public:
  explicit SimplexGeom(const std::array<Vec3Q, 4>& vertices);

  const std::array<Vec3Q, 4>& vertices() const { return v_; }
  const Vec3Q& vertex(int i) const { return v_[i]; }
  const FaceRecord& face(int f) const { return faces_[f]; }
  const EdgeRecord& edge(int e) const { return edges_[e]; }
  // det [v1-v0, v2-v0, v3-v0]; positive for positively oriented vertex order.
  const Rational& det6() const { return det6_; }
  Rational volume() const;

  // Barycentric coordinate of vertex i (1 at vertex i, 0 on face opposite i).
  const ScalarPoly& lambda(int i) const { return lambda_[i]; }
  const Vec3Q& grad_lambda(int i) const { return grad_lambda_[i]; }
  // Product of lambda over the listed local vertices.
  ScalarPoly bubble(const std::vector<int>& verts) const;
  ScalarPoly bubble_K() const { return bubble({0, 1, 2, 3}); }
  ScalarPoly bubble_face(int f) const;
  ScalarPoly bubble_edge(int e) const;

  std::vector<Vec3Q> face_vertices(int f) const;
  std::vector<Vec3Q> edge_vertices(int e) const;
  std::vector<Vec3Q> all_vertices() const { return {v_.begin(), v_.end()}; }

  // x = B xhat + b maps the reference tet onto this one.
  const Mat3Q& B() const { return B_; }
  const Vec3Q& b() const { return v_[0]; }

  // G_e = n- n+' + n+ n-' (degree 2 in the raw normals).
  Mat3Q edge_matrix_G(int e) const;

  // Local edge index for a vertex pair, local face index for a vertex triple.
  static int edge_index(int a, int b);
  static int face_index(int a, int b, int c);

 private:
  std::array<Vec3Q, 4> v_;
  Mat3Q B_;
  Rational det6_;
  std::array<ScalarPoly, 4> lambda_;
  std::array<Vec3Q, 4> grad_lambda_;
  std::array<FaceRecord, 4> faces_;
  std::array<EdgeRecord, 6> edges_;
};

SimplexGeom reference_tet();

// Edge frame that depends only on the tangent: q1, q2 by Gram-Schmidt from the
// two coordinate axes least aligned with s (raw, rational, orthogonal to s).
std::array<Vec3Q, 2> global_edge_frame(const Vec3Q& s);

// T(x) = B That(B^{-1}(x - b)) B' for matrix fields; scalar and vector fields
// are composed without a Piola factor.
ExactPoly piola_map(const ExactPoly& that, const Mat3Q& B, const Vec3Q& b);
// Pullback of a field on K to the reference element, p(B xhat + b).
ExactPoly pull_back(const ExactPoly& p, const Mat3Q& B, const Vec3Q& b);

}  // namespace tetstress
