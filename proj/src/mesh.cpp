#include "tetstress/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tetstress {

SimplexGeom MeshTopology::geom(int t) const {
  const auto& v = tets[t];
  return SimplexGeom({xq[v[0]], xq[v[1]], xq[v[2]], xq[v[3]]});
}

FrameOverride MeshTopology::frames(int t) const {
  FrameOverride o;
  for (int e = 0; e < 6; ++e) o.edge_normals[e] = edge_frame[tet_edges[t][e]];
  for (int f = 0; f < 4; ++f) o.face_normals[f] = face_normal[tet_faces[t][f]];
  return o;
}

double MeshTopology::max_edge_length() const {
  double h = 0;
  for (const auto& e : edges) {
    double s = 0;
    for (int c = 0; c < 3; ++c) s += (x[e[1]][c] - x[e[0]][c]) * (x[e[1]][c] - x[e[0]][c]);
    h = std::max(h, std::sqrt(s));
  }
  return h;
}

MeshTopology mesh_from_tets(std::vector<Vec3Q> vertices, std::vector<std::array<int, 4>> tets) {
  MeshTopology m;
  m.xq = std::move(vertices);
  for (const auto& p : m.xq) m.x.push_back({p[0].get_d(), p[1].get_d(), p[2].get_d()});
  const int nv = m.num_vertices();
  std::map<std::array<int, 2>, int> edge_id;
  std::map<std::array<int, 3>, int> face_id;
  for (auto t : tets) {
    for (int i : t)
      if (i < 0 || i >= nv) throw std::invalid_argument("mesh: vertex index out of range");
    std::sort(t.begin(), t.end());
    if (std::adjacent_find(t.begin(), t.end()) != t.end()) throw GeometryError("mesh: repeated vertex in a tet");
    const int tid = m.num_tets();
    m.tets.push_back(t);
    SimplexGeom g = m.geom(tid);  // throws on a flat tet
    std::array<int, 6> te{};
    for (int e = 0; e < 6; ++e) {
      std::array<int, 2> key = {t[kEdgeVerts[e][0]], t[kEdgeVerts[e][1]]};
      auto [it, fresh] = edge_id.try_emplace(key, m.num_edges());
      if (fresh) {
        m.edges.push_back(key);
        m.edge_frame.push_back(global_edge_frame(m.xq[key[1]] - m.xq[key[0]]));
      }
      te[e] = it->second;
    }
    std::array<int, 4> tf{}, sign{};
    for (int f = 0; f < 4; ++f) {
      std::array<int, 3> key = {t[kFaceVerts[f][0]], t[kFaceVerts[f][1]], t[kFaceVerts[f][2]]};
      auto [it, fresh] = face_id.try_emplace(key, m.num_faces());
      if (fresh) {
        m.faces.push_back(key);
        m.face_tets.push_back({tid, -1});
        m.face_normal.push_back(g.face(f).n.v());
        sign[f] = 1;
      } else {
        auto& ft = m.face_tets[it->second];
        if (ft[1] >= 0) throw GeometryError("mesh: face shared by more than two tets");
        ft[1] = tid;
        sign[f] = -1;
        if (sgn(dot(m.face_normal[it->second], g.face(f).n.v())) >= 0)
          throw GeometryError("mesh: overlapping tets on a shared face");
      }
      tf[f] = it->second;
    }
    m.tet_edges.push_back(te);
    m.tet_faces.push_back(tf);
    m.face_sign.push_back(sign);
  }
  return m;
}

MeshTopology build_box_mesh(int n, const std::array<Rational, 3>& extents) {
  if (n <= 0) throw std::invalid_argument("build_box_mesh: n must be positive");
  for (const auto& a : extents)
    if (sgn(a) <= 0) throw std::invalid_argument("build_box_mesh: extents must be positive");
  const int m1 = n + 1;
  auto id = [m1](int i, int j, int l) { return i + m1 * (j + m1 * l); };
  std::vector<Vec3Q> v;
  for (int l = 0; l <= n; ++l)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        v.push_back({extents[0] * rat(i, n), extents[1] * rat(j, n), extents[2] * rat(l, n)});
  static const std::array<std::array<int, 3>, 6> perms = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::vector<std::array<int, 4>> tets;
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& p : perms) {
          std::array<int, 3> c = {i, j, l};
          std::array<int, 4> t{};
          t[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            t[s + 1] = id(c[0], c[1], c[2]);
          }
          tets.push_back(t);
        }
  return mesh_from_tets(std::move(v), std::move(tets));
}

namespace {

// Integer, p/q or decimal with optional exponent, read exactly.
bool parse_exact(const std::string& w, Rational& out) {
  if (w.find('/') != std::string::npos) {
    if (out.set_str(w, 10) != 0 || sgn(out.get_den()) == 0) return false;
    out.canonicalize();
    return true;
  }
  std::size_t i = 0;
  bool neg = false;
  if (i < w.size() && (w[i] == '+' || w[i] == '-')) neg = w[i++] == '-';
  std::string digits;
  long scale = 0;
  bool any = false, dot = false;
  for (; i < w.size(); ++i) {
    char ch = w[i];
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      digits += ch;
      any = true;
      if (dot) --scale;
    } else if (ch == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!any) return false;
  if (i < w.size()) {
    if (w[i] != 'e' && w[i] != 'E') return false;
    std::size_t used = 0;
    try {
      scale += std::stol(w.substr(i + 1), &used);
    } catch (const std::exception&) {
      return false;
    }
    if (i + 1 + used != w.size()) return false;
  }
  Integer num(digits), ten(10), p;
  mpz_pow_ui(p.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(std::labs(scale)));
  out = scale >= 0 ? Rational(num * p) : Rational(num, p);
  out.canonicalize();
  if (neg) out = -out;
  return true;
}

}  // namespace

MeshTopology read_mesh_ascii(std::istream& in) {
  std::vector<Vec3Q> v;
  std::vector<std::array<int, 4>> t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    auto bad = [&] { return std::invalid_argument("mesh file line " + std::to_string(lineno) + ": cannot parse '" + line + "'"); };
    if (tag == "v") {
      std::array<std::string, 3> w;
      if (!(ss >> w[0] >> w[1] >> w[2])) throw bad();
      Vec3Q p;
      for (int c = 0; c < 3; ++c) {
        if (!parse_exact(w[c], p[c])) throw bad();
      }
      v.push_back(p);
    } else if (tag == "t") {
      std::array<int, 4> q{};
      if (!(ss >> q[0] >> q[1] >> q[2] >> q[3])) throw bad();
      t.push_back(q);
    } else {
      throw bad();
    }
    std::string extra;
    if (ss >> extra) throw bad();
  }
  if (t.empty()) throw std::invalid_argument("mesh file: no tets");
  return mesh_from_tets(std::move(v), std::move(t));
}

MeshTopology read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file " + path);
  return read_mesh_ascii(in);
}

double shape_quality(const SimplexGeom& g) {
  // r_in = 3 V / (sum of face areas); R from the circumcenter solve
  double vol = std::abs(g.det6().get_d()) / 6;
  double area = 0;
  for (int f = 0; f < 4; ++f) area += std::sqrt(g.face(f).area2.get_d());
  double rin = 3 * vol / area;
  Mat3Q a;
  Vec3Q rhs;
  for (int i = 0; i < 3; ++i) {
    Vec3Q d = g.vertex(i + 1) - g.vertex(0);
    a[i] = d;
    rhs[i] = dot(d, d) / 2;
  }
  Vec3Q c = inverse(a) * rhs;
  double R = std::sqrt(dot(c, c).get_d());
  return 3 * rin / R;
}

double min_shape_quality(const MeshTopology& m) {
  double q = 1;
  for (int t = 0; t < m.num_tets(); ++t) q = std::min(q, shape_quality(m.geom(t)));
  return q;
}

GlobalDofMap build_dof_map(const MeshTopology& m, const StressElementSpec& spec) {
  const int k = spec.k;
  if (spec.tilde ? k != 1 : (k < 1 || k > 3))
    throw std::invalid_argument("build_dof_map: supported are k = 1..3, or k = 1 for the tilde element");
  GlobalDofMap d;
  d.spec = spec;
  d.per_edge = 5 * (k + 2);
  d.per_face = 3 * (k + 1) * (k + 2) / 2;
  d.local_stress = spec.tilde ? 156 : static_cast<int>(formula_dim(SpaceTag::Sigma, k));
  d.per_interior = d.local_stress - 4 * d.per_vertex - 6 * d.per_edge - 4 * d.per_face;
  d.per_tet_disp = spec.tilde ? 6 : 3 * (k + 1) * (k + 2) * (k + 3) / 6;
  const int ov = 0, oe = ov + d.per_vertex * m.num_vertices(), of = oe + d.per_edge * m.num_edges(),
            oi = of + d.per_face * m.num_faces();
  d.n_stress = oi + d.per_interior * m.num_tets();
  d.n_disp = d.per_tet_disp * m.num_tets();
  d.stress_l2g.resize(m.num_tets());
  d.disp_offset.resize(m.num_tets());
  for (int t = 0; t < m.num_tets(); ++t) {
    auto& l = d.stress_l2g[t];
    l.reserve(d.local_stress);
    for (int v = 0; v < 4; ++v)
      for (int j = 0; j < d.per_vertex; ++j) l.push_back(ov + d.per_vertex * m.tets[t][v] + j);
    for (int e = 0; e < 6; ++e)
      for (int j = 0; j < d.per_edge; ++j) l.push_back(oe + d.per_edge * m.tet_edges[t][e] + j);
    for (int f = 0; f < 4; ++f)
      for (int j = 0; j < d.per_face; ++j) l.push_back(of + d.per_face * m.tet_faces[t][f] + j);
    for (int j = 0; j < d.per_interior; ++j) l.push_back(oi + d.per_interior * t + j);
    d.disp_offset[t] = d.n_stress + d.per_tet_disp * t;
  }
  return d;
}

}  // namespace tetstress
