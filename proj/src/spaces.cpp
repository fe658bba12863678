#include "tetstress/spaces.hpp"

#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace tetstress {

QMatrix image_matrix(const std::vector<ExactPoly>& fields, const FieldImage& image) {
  std::vector<std::vector<ScalarPoly>> imgs(fields.size());
  for (std::size_t j = 0; j < fields.size(); ++j) imgs[j] = image(fields[j]);
  std::map<std::pair<int, MonoKey>, int> rows;
  for (const auto& im : imgs)
    for (int c = 0; c < static_cast<int>(im.size()); ++c)
      for (const auto& t : im[c].terms()) rows.emplace(std::make_pair(c, t.first), 0);
  int r = 0;
  for (auto& kv : rows) kv.second = r++;
  QMatrix a(r, static_cast<int>(fields.size()));
  for (std::size_t j = 0; j < imgs.size(); ++j)
    for (int c = 0; c < static_cast<int>(imgs[j].size()); ++c)
      for (const auto& [key, v] : imgs[j][c].terms()) a(rows.at({c, key}), static_cast<int>(j)) = v;
  return a;
}

QMatrix field_matrix(const std::vector<ExactPoly>& fields) {
  return image_matrix(fields, [](const ExactPoly& p) { return p.components(); });
}

ExactPoly combine(const std::vector<ExactPoly>& fields, const std::vector<Rational>& c) {
  if (fields.empty()) throw std::invalid_argument("combine: empty field list");
  ExactPoly s(fields[0].shape());
  for (std::size_t j = 0; j < fields.size(); ++j)
    if (sgn(c[j]) != 0) s += c[j] * fields[j];
  return s;
}

std::vector<ExactPoly> kernel_fields(const std::vector<ExactPoly>& fields, const FieldImage& image) {
  if (fields.empty()) return {};
  Nullspace ns = nullspace(image_matrix(fields, image));
  std::vector<ExactPoly> out;
  out.reserve(ns.basis.size());
  for (const auto& z : ns.basis) out.push_back(combine(fields, z));
  return out;
}

int field_rank(const std::vector<ExactPoly>& fields) {
  if (fields.empty()) return 0;
  return exact_rank(field_matrix(fields));
}

std::vector<ExactPoly> independent_fields(const std::vector<ExactPoly>& fields) {
  if (fields.empty()) return {};
  Nullspace ns = nullspace(field_matrix(fields));
  std::vector<ExactPoly> out;
  for (int c : ns.pivot_cols) out.push_back(fields[c]);
  return out;
}

ScalarPoly restrict_to_simplex(const ScalarPoly& p, const std::vector<Vec3Q>& verts) {
  Mat3Q m = zero3();
  const int dim = static_cast<int>(verts.size()) - 1;
  for (int j = 0; j < dim; ++j)
    for (int d = 0; d < 3; ++d) m[d][j] = verts[j + 1][d] - verts[0][d];
  return p.compose_affine(m, verts[0]);
}

std::vector<ScalarPoly> restrict_components(const ExactPoly& p, const std::vector<Vec3Q>& verts) {
  std::vector<ScalarPoly> out;
  for (const auto& c : p.components()) out.push_back(restrict_to_simplex(c, verts));
  return out;
}

std::array<Vec3Q, 2> face_tangents(const SimplexGeom& g, int f) {
  auto v = g.face_vertices(f);
  return {v[1] - v[0], v[2] - v[0]};
}

std::vector<ScalarPoly> tangential_trace(const ExactPoly& S, const SimplexGeom& g, int f) {
  auto t = face_tangents(g, f);
  auto fv = g.face_vertices(f);
  return {restrict_to_simplex(bilinear(t[0], S, t[0]), fv), restrict_to_simplex(bilinear(t[0], S, t[1]), fv),
          restrict_to_simplex(bilinear(t[1], S, t[1]), fv)};
}

std::vector<ExactPoly> poly_basis(int k, Shape shape) {
  std::vector<ExactPoly> out;
  if (k < 0) return out;
  auto mons = monomials_upto(k);
  auto mono = [](MonoKey m) {
    return ScalarPoly::monomial(mono_exp(m, 0), mono_exp(m, 1), mono_exp(m, 2));
  };
  switch (shape) {
    case Shape::scalar:
      for (auto m : mons) out.push_back(ExactPoly::scalar(mono(m)));
      break;
    case Shape::vec3:
      for (int c = 0; c < 3; ++c)
        for (auto m : mons) {
          std::vector<ScalarPoly> v(3);
          v[c] = mono(m);
          out.emplace_back(Shape::vec3, v);
        }
      break;
    case Shape::sym3:
      for (const auto& pr : kSymPairs)
        for (auto m : mons) out.push_back(ExactPoly::sym_unit(pr[0], pr[1], mono(m)));
      break;
    case Shape::mat3:
      for (int c = 0; c < 9; ++c)
        for (auto m : mons) {
          std::vector<ScalarPoly> v(9);
          v[c] = mono(m);
          out.emplace_back(Shape::mat3, v);
        }
      break;
    case Shape::skew3:
      for (const auto& pr : {std::array<int, 2>{0, 1}, {0, 2}, {1, 2}})
        for (auto m : mons) {
          std::vector<ScalarPoly> v(9);
          v[3 * pr[0] + pr[1]] = mono(m);
          v[3 * pr[1] + pr[0]] = -mono(m);
          out.emplace_back(Shape::skew3, v);
        }
      break;
  }
  return out;
}

std::vector<ScalarPoly> barycentric_monomials(const SimplexGeom& g, const std::vector<int>& verts, int d) {
  std::vector<ScalarPoly> out;
  if (d < 0) return out;
  std::vector<int> e(verts.size(), 0);
  // enumerate exponent vectors summing to d, lexicographically decreasing
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == verts.size()) {
      e[i] = left;
      ScalarPoly p(rat(1));
      for (std::size_t j = 0; j < verts.size(); ++j) p = p * pow(g.lambda(verts[j]), e[j]);
      out.push_back(p);
      return;
    }
    for (int a = left; a >= 0; --a) {
      e[i] = a;
      rec(i + 1, left - a);
    }
  };
  rec(0, d);
  return out;
}

const char* space_name(SpaceTag t) {
  switch (t) {
    case SpaceTag::P: return "P";
    case SpaceTag::Sigma: return "Sigma";
    case SpaceTag::SigmaTilde: return "SigmaTilde";
    case SpaceTag::V: return "V";
    case SpaceTag::N0: return "N0";
    case SpaceTag::N: return "N";
    case SpaceTag::NboundaryK: return "NboundaryK";
    case SpaceTag::M: return "M";
    case SpaceTag::EpsP0: return "EpsP0";
  }
  return "?";
}

namespace {

SpaceBasis make(SpaceTag t, int k, const SimplexGeom& g, std::vector<ExactPoly> el) {
  SpaceBasis b;
  b.tag = t;
  b.k = k;
  b.vertices = g.vertices();
  b.elements = std::move(el);
  return b;
}

ExactPoly sym_const(const Mat3Q& m) { return ExactPoly::constant_matrix(m, Shape::sym3); }

// Basis of {S in S : Q_n S Q_n = 0} for the face normal n: n a' + a n'.
std::vector<Mat3Q> face_normal_block(const SimplexGeom& g, int f) {
  const Vec3Q& n = g.face(f).n.v();
  auto t = face_tangents(g, f);
  std::vector<Mat3Q> out;
  for (const Vec3Q& a : {n, t[0], t[1]}) out.push_back(outer(n, a) + outer(a, n));
  return out;
}

std::vector<int> face_verts(int f) { return {kFaceVerts[f][0], kFaceVerts[f][1], kFaceVerts[f][2]}; }

std::vector<ExactPoly> n0_terms(int k, const SimplexGeom& g, int skip_face) {
  std::vector<ExactPoly> out;
  for (int e = 0; e < 6; ++e) {
    ExactPoly G = sym_const(g.edge_matrix_G(e));
    ScalarPoly be = g.bubble_edge(e);
    for (const auto& p : barycentric_monomials(g, {kEdgeVerts[e][0], kEdgeVerts[e][1]}, k - 2))
      out.push_back((be * p) * G);
  }
  for (int f = 0; f < 4; ++f) {
    if (f == skip_face) continue;
    ScalarPoly bf = g.bubble_face(f);
    auto blk = face_normal_block(g, f);
    for (const auto& p : barycentric_monomials(g, face_verts(f), k - 3))
      for (const auto& m : blk) out.push_back((bf * p) * sym_const(m));
  }
  ScalarPoly bK = g.bubble_K();
  for (const auto& p : barycentric_monomials(g, {0, 1, 2, 3}, k - 4))
    for (const auto& pr : kSymPairs) out.push_back(ExactPoly::sym_unit(pr[0], pr[1], bK * p));
  return out;
}

}  // namespace

SpaceBasis basis_P(int k, Shape shape, const SimplexGeom& g) {
  if (k < 0) throw std::invalid_argument("basis_P: k < 0");
  return make(SpaceTag::P, k, g, poly_basis(k, shape));
}

SpaceBasis basis_V(int k, const SimplexGeom& g) {
  if (k < 0) throw std::invalid_argument("basis_V: k < 0");
  return make(SpaceTag::V, k, g, poly_basis(k, Shape::vec3));
}

SpaceBasis basis_Sigma(int k, const SimplexGeom& g, SigmaVariant variant) {
  if (k < 1) throw std::invalid_argument("basis_Sigma: k < 1");
  if (variant == SigmaVariant::tilde && k != 1) throw std::invalid_argument("basis_Sigma: tilde needs k = 1");
  auto high = [k](const ExactPoly& T) {
    ExactPoly d = op::div(T);
    std::vector<ScalarPoly> out;
    for (int c = 0; c < 3; ++c) {
      ScalarPoly h;
      for (int j = k + 1; j <= k + 2; ++j) h += d[c].homogeneous_part(j);
      out.push_back(h);
    }
    return out;
  };
  if (variant == SigmaVariant::standard)
    return make(SpaceTag::Sigma, k, g, kernel_fields(poly_basis(k + 3, Shape::sym3), high));
  auto rigid = [&](const ExactPoly& T) {
    auto out = high(T);
    ExactPoly d = op::div(T);
    ExactPoly lin = ExactPoly::vector(d[0].homogeneous_part(1), d[1].homogeneous_part(1),
                                      d[2].homogeneous_part(1));
    ExactPoly e = op::eps(lin);
    for (const auto& c : e.components()) out.push_back(c);
    return out;
  };
  return make(SpaceTag::SigmaTilde, k, g, kernel_fields(poly_basis(4, Shape::sym3), rigid));
}

SpaceBasis basis_N0(int k, const SimplexGeom& g) {
  if (k < 0) throw std::invalid_argument("basis_N0: k < 0");
  return make(SpaceTag::N0, k, g, n0_terms(k, g, -1));
}

SpaceBasis basis_N0_nullspace(int k, const SimplexGeom& g) {
  auto tr = [&g](const ExactPoly& S) {
    std::vector<ScalarPoly> out;
    for (int f = 0; f < 4; ++f)
      for (auto& c : tangential_trace(S, g, f)) out.push_back(std::move(c));
    return out;
  };
  return make(SpaceTag::N0, k, g, kernel_fields(poly_basis(k, Shape::sym3), tr));
}

std::vector<ExactPoly> basis_N00_3(const SimplexGeom& g) { return n0_terms(3, g, SimplexGeom::face_index(1, 2, 3)); }

SpaceBasis basis_N(int k, const SimplexGeom& g) {
  if (k < 3) throw std::invalid_argument("basis_N: k < 3");
  auto tr = [&g](const ExactPoly& S) {
    std::vector<ScalarPoly> out;
    for (int f = 0; f < 4; ++f) {
      for (auto& c : tangential_trace(S, g, f)) out.push_back(std::move(c));
      for (auto& c : tangential_trace(face::Lambda_f(S, g.face(f).n), g, f)) out.push_back(std::move(c));
    }
    return out;
  };
  return make(SpaceTag::N, k, g, kernel_fields(poly_basis(k, Shape::sym3), tr));
}

SpaceBasis basis_NboundaryK(int k, const SimplexGeom& g) {
  if (k < 3) throw std::invalid_argument("basis_NboundaryK: k < 3");
  std::vector<ExactPoly> dom;
  for (int f = 0; f < 4; ++f) {
    ScalarPoly bf = g.bubble_face(f);
    auto blk = face_normal_block(g, f);
    for (const auto& p : barycentric_monomials(g, face_verts(f), k - 3))
      for (const auto& m : blk) dom.push_back((bf * p) * sym_const(m));
  }
  auto tr = [&g](const ExactPoly& U) {
    std::vector<ScalarPoly> out;
    for (int f = 0; f < 4; ++f) {
      ExactPoly L = face::Lambda_f(U, g.face(f).n);
      auto t = face_tangents(g, f);
      const auto& fv = kFaceVerts[f];
      for (int a = 0; a < 3; ++a) {
        std::vector<Vec3Q> ev = {g.vertex(fv[a]), g.vertex(fv[(a + 1) % 3])};
        for (auto [i, j] : {std::pair{0, 0}, {0, 1}, {1, 1}})
          out.push_back(restrict_to_simplex(bilinear(t[i], L, t[j]), ev));
      }
    }
    return out;
  };
  return make(SpaceTag::NboundaryK, k, g, kernel_fields(dom, tr));
}

SpaceBasis basis_M(int k, const SimplexGeom& g, MMethod method) {
  if (k < 0) throw std::invalid_argument("basis_M: k < 0");
  if (method == MMethod::nullspace) {
    auto tr = [&g](const ExactPoly& S) {
      std::vector<ScalarPoly> out = op::div(S).components();
      for (int f = 0; f < 4; ++f)
        for (auto& c : restrict_components(matvec(S, g.face(f).n.v()), g.face_vertices(f)))
          out.push_back(std::move(c));
      return out;
    };
    return make(SpaceTag::M, k, g, kernel_fields(poly_basis(k, Shape::sym3), tr));
  }
  if (k != 4 && k != 5) throw std::invalid_argument("basis_M: bubble method needs k in {4, 5}");
  std::vector<ExactPoly> src = k == 4 ? basis_N0(2, g).elements : basis_N00_3(g);
  ScalarPoly bK = g.bubble_K();
  std::vector<ExactPoly> img;
  for (const auto& S : src) img.push_back(op::curlcurl_star(bK * S));
  return make(SpaceTag::M, k, g, independent_fields(img));
}

SpaceBasis basis_eps_image(int k, const SimplexGeom& g, int bubble_power) {
  if (bubble_power < 0 || bubble_power > 2) throw std::invalid_argument("basis_eps_image: power in 0..2");
  int d = k - 4 * bubble_power;
  ScalarPoly w = pow(g.bubble_K(), bubble_power);
  std::vector<ExactPoly> img;
  for (const auto& v : poly_basis(d, Shape::vec3)) img.push_back(op::eps(w * v));
  return make(SpaceTag::EpsP0, k, g, independent_fields(img));
}

long formula_dim(SpaceTag t, int k) {
  auto c3 = [](long n) { return n < 3 ? 0L : n * (n - 1) * (n - 2) / 6; };
  switch (t) {
    case SpaceTag::Sigma: return 1L * k * k * k + 12L * k * k + 56L * k + 93;
    case SpaceTag::SigmaTilde: return 156;
    case SpaceTag::V: return 3 * c3(k + 3);
    case SpaceTag::N0: return 1L * (k + 1) * k * (k - 1);
    case SpaceTag::N: return 1L * k * (k * k - 6 * k + 11);
    case SpaceTag::NboundaryK: return 6L * (k * k - 6 * k + 10);
    case SpaceTag::M: return std::max(0L, 1L * (k + 2) * (k - 2) * (k - 3) / 2);
    case SpaceTag::EpsP0: return 3 * c3(k + 3) - 6;
    case SpaceTag::P: break;
  }
  throw std::invalid_argument("formula_dim: no closed form for this tag");
}

std::shared_ptr<const SpaceBasis> cached_space(SpaceTag t, int k, const SimplexGeom& g) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const SpaceBasis>> store;
  std::ostringstream key;
  key << static_cast<int>(t) << ':' << k;
  for (const auto& v : g.vertices())
    for (const auto& x : v) key << ':' << x.get_str();
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = store.find(key.str());
    if (it != store.end()) return it->second;
  }
  SpaceBasis b;
  switch (t) {
    case SpaceTag::Sigma: b = basis_Sigma(k, g); break;
    case SpaceTag::SigmaTilde: b = basis_Sigma(k, g, SigmaVariant::tilde); break;
    case SpaceTag::V: b = basis_V(k, g); break;
    case SpaceTag::N0: b = basis_N0(k, g); break;
    case SpaceTag::N: b = basis_N(k, g); break;
    case SpaceTag::NboundaryK: b = basis_NboundaryK(k, g); break;
    case SpaceTag::M: b = basis_M(k, g); break;
    case SpaceTag::EpsP0: b = basis_eps_image(k, g, 0); break;
    case SpaceTag::P: b = basis_P(k, Shape::sym3, g); break;
  }
  auto ptr = std::make_shared<const SpaceBasis>(std::move(b));
  std::lock_guard<std::mutex> lock(mu);
  return store.emplace(key.str(), ptr).first->second;
}

}  // namespace tetstress
