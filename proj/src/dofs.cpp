#include "tetstress/dofs.hpp"

#include <chrono>
#include <stdexcept>

namespace tetstress {

const char* element_name(ElementTag t) {
  switch (t) {
    case ElementTag::SigmaK: return "SigmaK";
    case ElementTag::SigmaTildeK: return "SigmaTildeK";
    case ElementTag::VK: return "VK";
    case ElementTag::ThetaK: return "ThetaK";
    case ElementTag::WK: return "WK";
  }
  return "?";
}

const char* dof_kind_name(DofKind k) {
  switch (k) {
    case DofKind::vertex_value: return "vertex_value";
    case DofKind::vertex_derivative: return "vertex_derivative";
    case DofKind::edge_moment: return "edge_moment";
    case DofKind::edge_operator_moment: return "edge_operator_moment";
    case DofKind::face_moment: return "face_moment";
    case DofKind::interior_moment: return "interior_moment";
  }
  return "?";
}

namespace {

Rational factorial(int n) {
  Integer r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return Rational(r);
}

// Mean of y^a over the unit m-simplex.
Rational unit_simplex_mean(int m, MonoKey a) {
  if (m == 0) return a == 0 ? Rational(1) : Rational(0);
  Rational r = factorial(m);
  for (int i = 0; i < 3; ++i) r *= factorial(mono_exp(a, i));
  return r / factorial(mono_deg(a) + m);
}

std::vector<MonoKey> monomials_in(int m, int d) {
  std::vector<MonoKey> out;
  for (MonoKey k : monomials_upto(d)) {
    bool ok = true;
    for (int i = m; i < 3; ++i) ok &= mono_exp(k, i) == 0;
    if (ok) out.push_back(k);
  }
  return out;
}

}  // namespace

DofSet::DofSet(ElementTag tag, int k, const SimplexGeom& g, int space_degree, std::vector<DofGroup> groups)
    : tag_(tag), k_(k), geom_(g), space_degree_(space_degree), groups_(std::move(groups)) {
  for (const auto& gr : groups_) {
    offsets_.push_back(size_);
    size_ += gr.count();
  }
  prepare();
}

void DofSet::prepare() {
  moments_.resize(groups_.size());
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const DofGroup& gr = groups_[gi];
    const int m = gr.sub_dim;
    const int n = gr.count();
    int ncomp = 0, wdeg = 0;
    for (const auto& w : gr.weights) {
      ncomp = std::max(ncomp, static_cast<int>(w.size()));
      for (const auto& c : w) wdeg = std::max(wdeg, c.degree());
    }
    // weights in the coordinates used for integration
    std::vector<std::vector<ScalarPoly>> wy(n, std::vector<ScalarPoly>(ncomp));
    for (int j = 0; j < n; ++j)
      for (std::size_t c = 0; c < gr.weights[j].size(); ++c)
        wy[j][c] = m == 3 ? gr.weights[j][c] : restrict_to_simplex(gr.weights[j][c], gr.verts);
    const MomentTable* table = m == 3 ? &moment_table(gr.verts, space_degree_ + wdeg) : nullptr;
    auto mean = [&](MonoKey a) { return m == 3 ? table->mean(a) : unit_simplex_mean(m, a); };
    auto alphas = monomials_in(m, m == 0 ? 0 : space_degree_);
    auto& mom = moments_[gi];
    for (int c = 0; c < ncomp; ++c) {
      bool used = false;
      for (int j = 0; j < n; ++j) used |= !wy[j][c].is_zero();
      if (!used) continue;
      for (MonoKey a : alphas) {
        std::vector<Rational> v(n);
        for (int j = 0; j < n; ++j)
          for (const auto& [b, wc] : wy[j][c].terms()) v[j] += wc * mean(a + b);
        mom.emplace(std::make_pair(c, a), std::move(v));
      }
    }
  }
}

std::vector<DofFunctional> DofSet::functionals() const {
  std::vector<DofFunctional> out;
  for (const auto& g : groups_)
    for (int j = 0; j < g.count(); ++j) out.push_back({g.set, g.kind, g.sub_dim, g.sub_index, g.label, j});
  return out;
}

std::vector<Rational> DofSet::evaluate(const ExactPoly& p) const {
  std::vector<Rational> out(size_);
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    const DofGroup& gr = groups_[gi];
    const auto& mom = moments_[gi];
    auto img = gr.image(p);
    for (int c = 0; c < static_cast<int>(img.size()); ++c) {
      ScalarPoly q = gr.sub_dim == 3 ? img[c] : restrict_to_simplex(img[c], gr.verts);
      for (const auto& [a, v] : q.terms()) {
        auto it = mom.find({c, a});
        if (it == mom.end()) {
          auto lb = mom.lower_bound({c, 0});
          bool weighted = lb != mom.end() && lb->first.first == c;
          if (weighted && mono_deg(a) > space_degree_)
            throw std::invalid_argument("DofSet::evaluate: field degree exceeds the DOF set");
          continue;
        }
        const auto& w = it->second;
        for (int j = 0; j < gr.count(); ++j)
          if (sgn(w[j]) != 0) out[offsets_[gi] + j] += v * w[j];
      }
    }
  }
  return out;
}

QMatrix DofSet::matrix(const std::vector<ExactPoly>& basis) const {
  QMatrix d(size_, static_cast<int>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    auto v = evaluate(basis[j]);
    for (int i = 0; i < size_; ++i) d(i, static_cast<int>(j)) = std::move(v[i]);
  }
  return d;
}

// ---- construction ------------------------------------------------------------

namespace {

using W = std::vector<ScalarPoly>;

std::vector<W> unit_weights(int n) {
  std::vector<W> out;
  for (int c = 0; c < n; ++c) {
    W w(n);
    w[c] = ScalarPoly(rat(1));
    out.push_back(w);
  }
  return out;
}

// Component c carries each weight polynomial in turn (component major).
std::vector<W> component_weights(int ncomp, const std::vector<ScalarPoly>& polys) {
  std::vector<W> out;
  for (int c = 0; c < ncomp; ++c)
    for (const auto& p : polys) {
      W w(ncomp);
      w[c] = p;
      out.push_back(w);
    }
  return out;
}

std::vector<W> field_weights(const std::vector<ExactPoly>& fields) {
  std::vector<W> out;
  for (const auto& f : fields) out.push_back(f.components());
  return out;
}

std::vector<ScalarPoly> sym_components(const ExactPoly& S) {
  std::vector<ScalarPoly> out;
  for (const auto& pr : kSymPairs) out.push_back(S(pr[0], pr[1]));
  return out;
}

struct Frames {
  std::array<std::array<Vec3Q, 2>, 6> edge;  // normal pair per edge
  std::array<FrameVector, 4> face;
};

Frames resolve_frames(const SimplexGeom& g, const FrameOverride* o) {
  Frames fr;
  for (int e = 0; e < 6; ++e) {
    const auto& r = g.edge(e);
    if (o && o->edge_normals[e]) {
      fr.edge[e] = *o->edge_normals[e];
      Vec3Q s = r.s.v();
      for (const auto& a : fr.edge[e])
        if (sgn(dot(a, s)) != 0) throw GeometryError("edge frame override is not normal to the edge");
      if (is_zero(cross(fr.edge[e][0], fr.edge[e][1])))
        throw GeometryError("edge frame override is degenerate");
    } else {
      fr.edge[e] = {g.face(r.faces[0]).n.v(), g.face(r.faces[1]).n.v()};
    }
  }
  for (int f = 0; f < 4; ++f) {
    if (o && o->face_normals[f]) {
      if (!is_zero(cross(*o->face_normals[f], g.face(f).n.v())))
        throw GeometryError("face normal override is not normal to the face");
      fr.face[f] = FrameVector(*o->face_normals[f]);
    } else {
      fr.face[f] = g.face(f).n;
    }
  }
  return fr;
}

std::vector<int> edge_verts(int e) { return {kEdgeVerts[e][0], kEdgeVerts[e][1]}; }
std::vector<int> face_vert_list(int f) { return {kFaceVerts[f][0], kFaceVerts[f][1], kFaceVerts[f][2]}; }

// Q eps(b_f p t) Q for t in the face tangents, p in P_4(f).
std::vector<ExactPoly> face_eps_weights(const SimplexGeom& g, int f, const FrameVector& n) {
  std::vector<ExactPoly> out;
  auto t = face_tangents(g, f);
  Mat3Q Q = n.Q();
  ScalarPoly bf = g.bubble_face(f);
  for (const auto& tv : t)
    for (const auto& p : barycentric_monomials(g, face_vert_list(f), 4)) {
      ExactPoly v = (bf * p) * ExactPoly::constant_vector(tv);
      out.push_back(lmul(Q, rmul(op::eps(v), Q)));
    }
  return out;
}

std::vector<ExactPoly> face_hess_weights(const SimplexGeom& g, int f, const FrameVector& n) {
  std::vector<ExactPoly> out;
  Mat3Q Q = n.Q();
  for (const auto& v : face_space_E(g, f)) out.push_back(lmul(Q, rmul(op::hess(v), Q)));
  return out;
}

// Edges of face f, and the slot (0 or 1) of f among the edge's faces.
std::vector<std::pair<int, int>> face_edges(const SimplexGeom& g, int f) {
  std::vector<std::pair<int, int>> out;
  for (int e = 0; e < 6; ++e) {
    const auto& r = g.edge(e);
    for (int k = 0; k < 2; ++k)
      if (r.faces[k] == f) out.emplace_back(e, k);
  }
  return out;
}

void add_sigma_groups(std::vector<DofGroup>& gs, int k, const SimplexGeom& g, const Frames& fr, bool tilde) {
  for (int v = 0; v < 4; ++v) {
    DofGroup d;
    d.set = 1;
    d.kind = DofKind::vertex_value;
    d.sub_dim = 0;
    d.sub_index = v;
    d.label = "T(v)";
    d.verts = {g.vertex(v)};
    d.image = sym_components;
    d.weights = unit_weights(6);
    gs.push_back(std::move(d));
  }
  for (int e = 0; e < 6; ++e) {
    Vec3Q s = g.edge(e).s.v();
    Vec3Q a = fr.edge[e][0], b = fr.edge[e][1];
    DofGroup d;
    d.set = 2;
    d.kind = DofKind::edge_moment;
    d.sub_dim = 1;
    d.sub_index = e;
    d.label = "s'Tn-, s'Tn+, n-'Tn-, n+'Tn+, n-'Tn+";
    d.verts = g.edge_vertices(e);
    d.image = [s, a, b](const ExactPoly& S) -> W {
      return {bilinear(s, S, a), bilinear(s, S, b), bilinear(a, S, a), bilinear(b, S, b), bilinear(a, S, b)};
    };
    d.weights = component_weights(5, barycentric_monomials(g, edge_verts(e), k + 1));
    gs.push_back(std::move(d));
  }
  for (int f = 0; f < 4; ++f) {
    Vec3Q n = fr.face[f].v();
    DofGroup d;
    d.set = 3;
    d.kind = DofKind::face_moment;
    d.sub_dim = 2;
    d.sub_index = f;
    d.label = "Tn";
    d.verts = g.face_vertices(f);
    d.image = [n](const ExactPoly& S) { return matvec(S, n).components(); };
    d.weights = component_weights(3, barycentric_monomials(g, face_vert_list(f), k));
    gs.push_back(std::move(d));
  }
  auto full = [](const ExactPoly& S) { return S.components(); };
  if (!tilde) {
    DofGroup d;
    d.set = 4;
    d.kind = DofKind::interior_moment;
    d.label = "T:eps(V)";
    d.verts = g.all_vertices();
    d.image = full;
    d.weights = field_weights(basis_eps_image(k, g, 0).elements);
    gs.push_back(std::move(d));
  }
  DofGroup d;
  d.set = tilde ? 4 : 5;
  d.kind = DofKind::interior_moment;
  d.label = "T:M";
  d.verts = g.all_vertices();
  d.image = full;
  d.weights = field_weights(cached_space(SpaceTag::M, k + 3, g)->elements);
  gs.push_back(std::move(d));
}

void add_theta_groups(std::vector<DofGroup>& gs, const SimplexGeom& g, const Frames& fr) {
  auto full = [](const ExactPoly& S) { return S.components(); };
  for (int v = 0; v < 4; ++v) {
    DofGroup d;
    d.set = 1;
    d.kind = DofKind::vertex_value;
    d.sub_dim = 0;
    d.sub_index = v;
    d.label = "S(v), curlcurl*S(v)";
    d.verts = {g.vertex(v)};
    d.image = [](const ExactPoly& S) {
      W out = sym_components(S);
      for (auto& c : sym_components(op::curlcurl_star(S))) out.push_back(std::move(c));
      return out;
    };
    d.weights = unit_weights(12);
    gs.push_back(std::move(d));
  }
  for (int e = 0; e < 6; ++e) {
    Vec3Q s = g.edge(e).s.v();
    DofGroup d;
    d.set = 2;
    d.kind = DofKind::edge_moment;
    d.sub_dim = 1;
    d.sub_index = e;
    d.label = "s'Ss";
    d.verts = g.edge_vertices(e);
    d.image = [s](const ExactPoly& S) -> W { return {bilinear(s, S, s)}; };
    d.weights = component_weights(1, barycentric_monomials(g, edge_verts(e), 4));
    gs.push_back(std::move(d));
  }
  for (int e = 0; e < 6; ++e) {
    Vec3Q s = g.edge(e).s.v();
    Vec3Q a = fr.edge[e][0], b = fr.edge[e][1];
    DofGroup d;
    d.set = 3;
    d.kind = DofKind::edge_operator_moment;
    d.sub_dim = 1;
    d.sub_index = e;
    d.label = "Gamma_e(S)";
    d.verts = g.edge_vertices(e);
    // Gamma_e(S).u = 2 d_s(u'Ss) - d_u(s'Ss) for u normal to the edge
    d.image = [s, a, b](const ExactPoly& S) -> W {
      ScalarPoly sss = bilinear(s, S, s);
      W out;
      for (const Vec3Q& u : {a, b}) {
        ScalarPoly us = bilinear(u, S, s);
        out.push_back(Rational(2) * us.directional(s) - sss.directional(u));
      }
      return out;
    };
    d.weights = component_weights(2, barycentric_monomials(g, edge_verts(e), 5));
    gs.push_back(std::move(d));
  }
  for (int e = 0; e < 6; ++e) {
    Vec3Q s = g.edge(e).s.v();
    Vec3Q a = fr.edge[e][0], b = fr.edge[e][1];
    DofGroup d;
    d.set = 4;
    d.kind = DofKind::edge_operator_moment;
    d.sub_dim = 1;
    d.sub_index = e;
    d.label = "Q_s curlcurl*S";
    d.verts = g.edge_vertices(e);
    d.image = [s, a, b](const ExactPoly& S) -> W {
      ExactPoly C = op::curlcurl_star(S);
      return {bilinear(a, C, s), bilinear(b, C, s), bilinear(a, C, a), bilinear(a, C, b), bilinear(b, C, b)};
    };
    d.weights = component_weights(5, barycentric_monomials(g, edge_verts(e), 2));
    gs.push_back(std::move(d));
  }
  for (int e = 0; e < 6; ++e) {
    Vec3Q s = g.edge(e).s.v();
    DofGroup d;
    d.set = 5;
    d.kind = DofKind::edge_operator_moment;
    d.sub_dim = 1;
    d.sub_index = e;
    d.label = "s'curl(Ss)";
    d.verts = g.edge_vertices(e);
    d.image = [s](const ExactPoly& S) -> W { return {vdot(s, op::curl(matvec(S, s)))}; };
    d.weights = unit_weights(1);
    gs.push_back(std::move(d));
  }
  for (int f = 0; f < 4; ++f) {
    DofGroup d;
    d.set = 6;
    d.kind = DofKind::face_moment;
    d.sub_dim = 2;
    d.sub_index = f;
    d.label = "QSQ:eps_f(b_f P4)";
    d.verts = g.face_vertices(f);
    d.image = full;
    d.weights = field_weights(face_eps_weights(g, f, fr.face[f]));
    gs.push_back(std::move(d));
  }
  for (int f = 0; f < 4; ++f)
    for (auto [e, slot] : face_edges(g, f)) {
      Vec3Q s = g.edge(e).s.v();
      Vec3Q m = g.edge(e).m[slot].v();
      FrameVector n = fr.face[f];
      DofGroup d;
      d.set = 7;
      d.kind = DofKind::edge_operator_moment;
      d.sub_dim = 1;
      d.sub_index = e;
      d.label = "s'Lambda_f(S)m";
      d.verts = g.edge_vertices(e);
      d.image = [s, m, n](const ExactPoly& S) -> W { return {bilinear(s, face::Lambda_f(S, n), m)}; };
      d.weights = {{g.lambda(kEdgeVerts[e][0]) - g.lambda(kEdgeVerts[e][1])}};
      gs.push_back(std::move(d));
    }
  for (int f = 0; f < 4; ++f) {
    auto t = face_tangents(g, f);
    FrameVector n = fr.face[f];
    DofGroup d;
    d.set = 8;
    d.kind = DofKind::face_moment;
    d.sub_dim = 2;
    d.sub_index = f;
    d.label = "Lambda_f(S)";
    d.verts = g.face_vertices(f);
    d.image = [t, n](const ExactPoly& S) -> W {
      ExactPoly L = face::Lambda_f(S, n);
      return {bilinear(t[0], L, t[0]), bilinear(t[0], L, t[1]), bilinear(t[1], L, t[1])};
    };
    d.weights = unit_weights(3);
    gs.push_back(std::move(d));
  }
  for (int f = 0; f < 4; ++f) {
    FrameVector n = fr.face[f];
    DofGroup d;
    d.set = 9;
    d.kind = DofKind::face_moment;
    d.sub_dim = 2;
    d.sub_index = f;
    d.label = "Lambda_f(S):grad_f grad_f* E(f)";
    d.verts = g.face_vertices(f);
    d.image = [n](const ExactPoly& S) { return face::Lambda_f(S, n).components(); };
    d.weights = field_weights(face_hess_weights(g, f, n));
    gs.push_back(std::move(d));
  }
  {
    DofGroup d;
    d.set = 10;
    d.kind = DofKind::interior_moment;
    d.label = "curlcurl*S:M4";
    d.verts = g.all_vertices();
    d.image = [](const ExactPoly& S) { return op::curlcurl_star(S).components(); };
    d.weights = field_weights(cached_space(SpaceTag::M, 4, g)->elements);
    gs.push_back(std::move(d));
  }
  {
    DofGroup d;
    d.set = 11;
    d.kind = DofKind::interior_moment;
    d.label = "S:eps(b_K P3)";
    d.verts = g.all_vertices();
    d.image = full;
    std::vector<ExactPoly> w;
    for (const auto& q : poly_basis(3, Shape::vec3)) w.push_back(op::eps(g.bubble_K() * q));
    d.weights = field_weights(w);
    gs.push_back(std::move(d));
  }
}

void add_w_groups(std::vector<DofGroup>& gs, const SimplexGeom& g, const Frames& fr) {
  for (int v = 0; v < 4; ++v) {
    DofGroup d;
    d.set = 1;
    d.kind = DofKind::vertex_derivative;
    d.sub_dim = 0;
    d.sub_index = v;
    d.label = "w(v), grad w(v)";
    d.verts = {g.vertex(v)};
    d.image = [](const ExactPoly& w) {
      W out = w.components();
      ExactPoly gw = op::grad(w);
      for (const auto& c : gw.components()) out.push_back(c);
      return out;
    };
    d.weights = unit_weights(12);
    gs.push_back(std::move(d));
  }
  for (int e = 0; e < 6; ++e) {
    DofGroup d;
    d.set = 2;
    d.kind = DofKind::edge_moment;
    d.sub_dim = 1;
    d.sub_index = e;
    d.label = "w";
    d.verts = g.edge_vertices(e);
    d.image = [](const ExactPoly& w) { return w.components(); };
    d.weights = component_weights(3, barycentric_monomials(g, edge_verts(e), 3));
    gs.push_back(std::move(d));
  }
  for (int f = 0; f < 4; ++f) {
    Mat3Q Q = fr.face[f].Q();
    DofGroup d;
    d.set = 3;
    d.kind = DofKind::face_moment;
    d.sub_dim = 2;
    d.sub_index = f;
    d.label = "eps_f(Q w):eps_f(b_f P4)";
    d.verts = g.face_vertices(f);
    d.image = [Q](const ExactPoly& w) { return lmul(Q, rmul(op::eps(lmul(Q, w)), Q)).components(); };
    d.weights = field_weights(face_eps_weights(g, f, fr.face[f]));
    gs.push_back(std::move(d));
  }
  for (int f = 0; f < 4; ++f)
    for (auto [e, slot] : face_edges(g, f)) {
      Vec3Q m = g.edge(e).m[slot].v();
      Vec3Q n = fr.face[f].v();
      DofGroup d;
      d.set = 4;
      d.kind = DofKind::edge_operator_moment;
      d.sub_dim = 1;
      d.sub_index = e;
      d.label = "d_m(n'w)";
      d.verts = g.edge_vertices(e);
      d.image = [m, n](const ExactPoly& w) -> W { return {vdot(n, w).directional(m)}; };
      d.weights = unit_weights(1);
      gs.push_back(std::move(d));
    }
  for (int f = 0; f < 4; ++f) {
    FrameVector n = fr.face[f];
    Mat3Q Q = n.Q();
    DofGroup d;
    d.set = 5;
    d.kind = DofKind::face_moment;
    d.sub_dim = 2;
    d.sub_index = f;
    d.label = "grad_f grad_f*(n'w):grad_f grad_f* E(f)";
    d.verts = g.face_vertices(f);
    d.image = [n, Q](const ExactPoly& w) {
      return lmul(Q, rmul(op::hess(ExactPoly::scalar(vdot(n.v(), w))), Q)).components();
    };
    d.weights = field_weights(face_hess_weights(g, f, n));
    gs.push_back(std::move(d));
  }
  DofGroup d;
  d.set = 6;
  d.kind = DofKind::interior_moment;
  d.label = "eps(w):eps(b_K P3)";
  d.verts = g.all_vertices();
  d.image = [](const ExactPoly& w) { return op::eps(w).components(); };
  std::vector<ExactPoly> wts;
  for (const auto& q : poly_basis(3, Shape::vec3)) wts.push_back(op::eps(g.bubble_K() * q));
  d.weights = field_weights(wts);
  gs.push_back(std::move(d));
}

}  // namespace

std::vector<ExactPoly> face_space_E(const SimplexGeom& g, int f) {
  std::vector<ExactPoly> dom;
  ScalarPoly bf = g.bubble_face(f);
  for (const auto& p : barycentric_monomials(g, face_vert_list(f), 4)) dom.push_back(ExactPoly::scalar(bf * p));
  auto edges = face_edges(g, f);
  return kernel_fields(dom, [&](const ExactPoly& v) {
    W out;
    for (auto [e, slot] : edges) {
      ScalarPoly dm = v[0].directional(g.edge(e).m[slot].v());
      out.push_back(ScalarPoly(integrate_simplex(dm, g.edge_vertices(e)).mean));
    }
    return out;
  });
}

DofSet build_dofset(ElementTag tag, int k, const SimplexGeom& g, const FrameOverride* frames) {
  Frames fr = resolve_frames(g, frames);
  std::vector<DofGroup> gs;
  switch (tag) {
    case ElementTag::SigmaK:
      if (k < 1 || k > 3) throw std::invalid_argument("build_dofset: SigmaK needs k in 1..3");
      add_sigma_groups(gs, k, g, fr, false);
      return DofSet(tag, k, g, k + 3, std::move(gs));
    case ElementTag::SigmaTildeK:
      if (k != 1) throw std::invalid_argument("build_dofset: SigmaTildeK needs k = 1");
      add_sigma_groups(gs, 1, g, fr, true);
      return DofSet(tag, 1, g, 4, std::move(gs));
    case ElementTag::VK: {
      if (k < 0) throw std::invalid_argument("build_dofset: VK needs k >= 0");
      DofGroup d;
      d.set = 1;
      d.kind = DofKind::interior_moment;
      d.label = "v.q";
      d.verts = g.all_vertices();
      d.image = [](const ExactPoly& v) { return v.components(); };
      d.weights = field_weights(poly_basis(k, Shape::vec3));
      gs.push_back(std::move(d));
      return DofSet(tag, k, g, k, std::move(gs));
    }
    case ElementTag::ThetaK:
      add_theta_groups(gs, g, fr);
      return DofSet(tag, 6, g, 6, std::move(gs));
    case ElementTag::WK:
      add_w_groups(gs, g, fr);
      return DofSet(tag, 7, g, 7, std::move(gs));
  }
  throw std::invalid_argument("build_dofset: unknown element");
}

SpaceBasis target_space(ElementTag tag, int k, const SimplexGeom& g) {
  switch (tag) {
    case ElementTag::SigmaK: return *cached_space(SpaceTag::Sigma, k, g);
    case ElementTag::SigmaTildeK: return *cached_space(SpaceTag::SigmaTilde, 1, g);
    case ElementTag::VK: return basis_V(k, g);
    case ElementTag::ThetaK: return basis_P(6, Shape::sym3, g);
    case ElementTag::WK: return basis_P(7, Shape::vec3, g);
  }
  throw std::invalid_argument("target_space: unknown element");
}

UnisolvenceCertificate unisolvence_certificate(const DofSet& dofs, const SpaceBasis& basis) {
  auto t0 = std::chrono::steady_clock::now();
  UnisolvenceCertificate c;
  c.size = dofs.size();
  if (dofs.size() != basis.dim())
    throw std::invalid_argument("unisolvence_certificate: " + std::to_string(dofs.size()) + " functionals for a space of dimension " +
                                std::to_string(basis.dim()));
  QMatrix d = dofs.matrix(basis.elements);
  NonsingularityCertificate nc = certify_nonsingular(d);
  c.nonsingular = nc.nonsingular;
  c.rank = nc.rank;
  c.prime = nc.prime;
  if (!nc.nonsingular) {
    c.nullvector = nc.nullvector;
    c.counterexample = combine(basis.elements, nc.nullvector);
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

DualBasis dual_basis(const DofSet& dofs, const SpaceBasis& basis) {
  DualBasis db;
  db.coeffs = inverse(dofs.matrix(basis.elements));
  for (int j = 0; j < db.coeffs.cols(); ++j) db.elements.push_back(combine(basis.elements, db.coeffs.col(j)));
  return db;
}

namespace {
std::vector<Rational> pi0_values(const DofSet& dofs, const ExactPoly& T) {
  auto v = dofs.evaluate(T);
  for (std::size_t g = 0; g < dofs.groups().size(); ++g)
    if (dofs.groups()[g].sub_dim <= 1)
      for (int j = 0; j < dofs.groups()[g].count(); ++j) v[dofs.offset(static_cast<int>(g)) + j] = 0;
  return v;
}
}  // namespace

ExactPoly interpolate_pi0(const ExactPoly& T, const DofSet& dofs, const DualBasis& dual) {
  return combine(dual.elements, pi0_values(dofs, T)).as(Shape::sym3);
}

std::vector<ExactPoly> interpolate_pi0(const std::vector<ExactPoly>& Ts, const DofSet& dofs,
                                       const SpaceBasis& basis) {
  QMatrix rhs(dofs.size(), static_cast<int>(Ts.size()));
  for (std::size_t j = 0; j < Ts.size(); ++j) {
    auto v = pi0_values(dofs, Ts[j]);
    for (int i = 0; i < dofs.size(); ++i) rhs(i, static_cast<int>(j)) = v[i];
  }
  QMatrix x = solve(dofs.matrix(basis.elements), rhs);
  std::vector<ExactPoly> out;
  for (int j = 0; j < x.cols(); ++j) out.push_back(combine(basis.elements, x.col(j)).as(Shape::sym3));
  return out;
}

ExactPoly l2_project_V(const ExactPoly& v, int k, const SimplexGeom& g) {
  if (v.shape() != Shape::vec3) throw ShapeError("l2_project_V: vector field expected");
  auto basis = poly_basis(k, Shape::vec3);
  const int n = static_cast<int>(basis.size());
  const MomentTable& t = moment_table(g.all_vertices(), std::max(2 * k, k + v.degree()));
  QMatrix m(n, n), b(n, 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = t.mean(contract(basis[i], basis[j]));
    b(i, 0) = t.mean(contract(basis[i], v));
  }
  QMatrix x = solve(m, b);
  return combine(basis, x.col(0));
}

}  // namespace tetstress
