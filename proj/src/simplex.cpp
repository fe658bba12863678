#include "tetstress/simplex.hpp"

#include <algorithm>
#include <sstream>

namespace tetstress {

SimplexGeom::SimplexGeom(const std::array<Vec3Q, 4>& vertices) : v_(vertices) {
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) B_[r][c] = v_[c + 1][r] - v_[0][r];
  det6_ = det(B_);
  if (sgn(det6_) == 0) {
    std::ostringstream os;
    os << "degenerate tetrahedron: signed volume " << Rational(det6_ / 6).get_str();
    throw GeometryError(os.str());
  }
  // y = Binv (x - v0); lambda_j = y_j, lambda_0 = 1 - sum y
  Mat3Q Bi = inverse(B_);
  Vec3Q c0 = Rational(-1) * (Bi * v_[0]);
  Vec3Q g0{};
  Rational k0 = 1;
  for (int j = 0; j < 3; ++j) {
    Vec3Q g = {Bi[j][0], Bi[j][1], Bi[j][2]};
    grad_lambda_[j + 1] = g;
    lambda_[j + 1] = ScalarPoly::affine(c0[j], g);
    g0 = g0 - g;
    k0 -= c0[j];
  }
  grad_lambda_[0] = g0;
  lambda_[0] = ScalarPoly::affine(k0, g0);

  for (int f = 0; f < 4; ++f) {
    FaceRecord& r = faces_[f];
    r.verts = kFaceVerts[f];
    r.opposite = face_opposite(f);
    Vec3Q n = cross(v_[r.verts[1]] - v_[r.verts[0]], v_[r.verts[2]] - v_[r.verts[0]]);
    if (sgn(dot(n, v_[r.opposite] - v_[r.verts[0]])) > 0) n = Rational(-1) * n;
    r.n = FrameVector(n);
    r.area2 = r.n.norm2() / 4;
    r.h2 = det6_ * det6_ / r.n.norm2();
  }
  for (int e = 0; e < 6; ++e) {
    EdgeRecord& r = edges_[e];
    r.verts = kEdgeVerts[e];
    r.s = FrameVector(v_[r.verts[1]] - v_[r.verts[0]]);
    int k = 0;
    for (int f = 0; f < 4; ++f) {
      const auto& fv = kFaceVerts[f];
      if (std::count(fv.begin(), fv.end(), r.verts[0]) && std::count(fv.begin(), fv.end(), r.verts[1])) {
        r.faces[k] = f;
        for (int x : fv)
          if (x != r.verts[0] && x != r.verts[1]) r.third[k] = x;
        Vec3Q m = cross(faces_[f].n.v(), r.s.v());
        if (sgn(dot(m, v_[r.third[k]] - v_[r.verts[0]])) < 0) m = Rational(-1) * m;
        r.m[k] = FrameVector(m);
        ++k;
      }
    }
  }
}

Rational SimplexGeom::volume() const { return abs(det6_) / 6; }

ScalarPoly SimplexGeom::bubble(const std::vector<int>& verts) const {
  ScalarPoly p(rat(1));
  for (int i : verts) p = p * lambda_[i];
  return p;
}

ScalarPoly SimplexGeom::bubble_face(int f) const {
  const auto& fv = kFaceVerts[f];
  return bubble({fv[0], fv[1], fv[2]});
}

ScalarPoly SimplexGeom::bubble_edge(int e) const { return bubble({kEdgeVerts[e][0], kEdgeVerts[e][1]}); }

std::vector<Vec3Q> SimplexGeom::face_vertices(int f) const {
  const auto& fv = kFaceVerts[f];
  return {v_[fv[0]], v_[fv[1]], v_[fv[2]]};
}

std::vector<Vec3Q> SimplexGeom::edge_vertices(int e) const {
  return {v_[kEdgeVerts[e][0]], v_[kEdgeVerts[e][1]]};
}

Mat3Q SimplexGeom::edge_matrix_G(int e) const {
  const auto& r = edges_[e];
  const Vec3Q& a = faces_[r.faces[0]].n.v();
  const Vec3Q& c = faces_[r.faces[1]].n.v();
  return outer(a, c) + outer(c, a);
}

int SimplexGeom::edge_index(int a, int b) {
  if (a > b) std::swap(a, b);
  for (int e = 0; e < 6; ++e)
    if (kEdgeVerts[e][0] == a && kEdgeVerts[e][1] == b) return e;
  throw std::invalid_argument("not a local edge");
}

int SimplexGeom::face_index(int a, int b, int c) {
  std::array<int, 3> t = {a, b, c};
  std::sort(t.begin(), t.end());
  for (int f = 0; f < 4; ++f)
    if (kFaceVerts[f] == t) return f;
  throw std::invalid_argument("not a local face");
}

SimplexGeom reference_tet() {
  return SimplexGeom({vec3(0, 0, 0), vec3(1, 0, 0), vec3(0, 1, 0), vec3(0, 0, 1)});
}

std::array<Vec3Q, 2> global_edge_frame(const Vec3Q& s) {
  std::array<int, 3> ax = {0, 1, 2};
  std::stable_sort(ax.begin(), ax.end(), [&](int a, int b) { return abs(s[a]) < abs(s[b]); });
  Rational s2 = dot(s, s);
  if (sgn(s2) == 0) throw GeometryError("global_edge_frame: zero tangent");
  Vec3Q e1{}, e2{};
  e1[ax[0]] = 1;
  e2[ax[1]] = 1;
  Vec3Q q1 = e1 - (s[ax[0]] / s2) * s;
  Vec3Q q2 = e2 - (s[ax[1]] / s2) * s;
  q2 = q2 - (dot(q2, q1) / dot(q1, q1)) * q1;
  return {q1, q2};
}

ExactPoly pull_back(const ExactPoly& p, const Mat3Q& B, const Vec3Q& b) {
  std::vector<ScalarPoly> c;
  for (const auto& q : p.components()) c.push_back(q.compose_affine(B, b));
  return ExactPoly(p.shape(), std::move(c));
}

ExactPoly piola_map(const ExactPoly& that, const Mat3Q& B, const Vec3Q& b) {
  if (sgn(det(B)) == 0) throw GeometryError("piola_map: singular B");
  Mat3Q Bi = inverse(B);
  ExactPoly t = pull_back(that, Bi, Rational(-1) * (Bi * b));
  if (!is_matrix(t.shape())) return t;
  return lmul(B, rmul(t, transpose(B))).as(that.shape());
}

}  // namespace tetstress
