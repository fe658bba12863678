#include "tetstress/verify.hpp"

#include <chrono>
#include <functional>
#include <random>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tetstress {

namespace {

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string short_dump(const ExactPoly& p) {
  std::string s = p.dump();
  if (s.size() > 400) s = s.substr(0, 400) + "...";
  return s;
}

// ---- complexes ----------------------------------------------------------------

using Fields = std::vector<ExactPoly>;
using Contains = std::function<bool(const Fields&)>;
using Op = std::function<ExactPoly(const ExactPoly&)>;

struct Stage {
  std::string name;
  Fields basis;
  Contains contains;
};

struct Link {
  std::string name;
  Op apply;
};

bool symmetric(const ExactPoly& p) {
  if (p.shape() == Shape::sym3) return true;
  if (!is_matrix(p.shape())) return false;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (!(p(i, j) == p(j, i))) return false;
  return true;
}

Contains full_space(int degree, Shape shape) {
  return [degree, shape](const Fields& fs) {
    for (const auto& f : fs) {
      if (f.is_zero()) continue;
      if (f.degree() > degree) return false;
      if (shape == Shape::sym3 ? !symmetric(f) : f.shape() != shape) return false;
    }
    return true;
  };
}

Contains span_of(Fields basis) {
  return [basis](const Fields& fs) {
    Fields nz;
    for (const auto& f : fs)
      if (!f.is_zero()) nz.push_back(f);
    if (nz.empty()) return true;
    if (basis.empty()) return false;
    Fields u = basis;
    u.insert(u.end(), nz.begin(), nz.end());
    return field_rank(u) == static_cast<int>(basis.size());
  };
}

int rank_mod_p(const Fields& fs) {
  Fields nz;
  for (const auto& f : fs)
    if (!f.is_zero()) nz.push_back(f);
  if (nz.empty()) return 0;
  return rank_profile_mod_p(field_matrix(nz), lifting_primes()[0]).rank;
}

int rank_exact(const Fields& fs) {
  Fields nz;
  for (const auto& f : fs)
    if (!f.is_zero()) nz.push_back(f);
  return nz.empty() ? 0 : field_rank(nz);
}

// kernel: leading space mapped in by inclusion (may be empty for "0 ->").
ComplexReport run_sequence(ComplexTag tag, int k, int face, const Stage& kernel, const std::vector<Stage>& st,
                           const std::vector<Link>& links) {
  auto t0 = std::chrono::steady_clock::now();
  ComplexReport r;
  r.tag = tag;
  r.k = k;
  r.face = face;
  r.spaces.push_back(kernel.name);
  r.dims.push_back(static_cast<int>(kernel.basis.size()));
  for (const auto& s : st) {
    r.spaces.push_back(s.name);
    r.dims.push_back(static_cast<int>(s.basis.size()));
  }
  long sign = 1;
  for (int d : r.dims) {
    r.alternating_sum += sign * d;
    sign = -sign;
  }
  bool ok = true;
  // the leading space: independent, inside V0, killed by d0
  int prev_rank = rank_exact(kernel.basis);
  ok &= prev_rank == static_cast<int>(kernel.basis.size());
  ok &= st[0].contains(kernel.basis);
  if (!links.empty())
    for (const auto& w : kernel.basis) ok &= links[0].apply(w).is_zero();

  for (std::size_t i = 0; i < links.size(); ++i) {
    LinkReport lr;
    lr.op = links[i].name;
    lr.dim_from = static_cast<int>(st[i].basis.size());
    Fields img;
    img.reserve(st[i].basis.size());
    for (const auto& b : st[i].basis) img.push_back(links[i].apply(b));
    lr.image_in_target = st[i + 1].contains(img);
    if (i + 1 < links.size())
      for (const auto& y : img)
        if (!links[i + 1].apply(y).is_zero()) {
          lr.composes_to_zero = false;
          break;
        }
    const int bound = lr.dim_from - prev_rank;
    int rp = rank_mod_p(img);
    if (rp == bound) {
      lr.rank = rp;
      lr.rank_certified_mod_p = true;
    } else {
      lr.rank = rank_exact(img);
    }
    r.exact_at.push_back(lr.dim_from - lr.rank == prev_rank);
    ok &= lr.image_in_target && lr.composes_to_zero;
    prev_rank = lr.rank;
    r.links.push_back(lr);
  }
  r.exact_at.push_back(prev_rank == static_cast<int>(st.back().basis.size()));
  for (bool e : r.exact_at) ok &= e;
  r.exact = ok;
  r.seconds = since(t0);
  return r;
}

Fields polys(int k, Shape s) { return k < 0 ? Fields{} : poly_basis(k, s); }

ExactPoly cross_x(const Vec3Q& n) {
  ScalarPoly x0 = ScalarPoly::coordinate(0), x1 = ScalarPoly::coordinate(1), x2 = ScalarPoly::coordinate(2);
  return ExactPoly::vector(n[1] * x2 - n[2] * x1, n[2] * x0 - n[0] * x2, n[0] * x1 - n[1] * x0);
}

// Polynomials on the plane of face f, extended constantly along the normal:
// monomials in y_j = t_j . x.
struct FaceCoords {
  FrameVector n;
  std::array<Vec3Q, 2> t;
  Fields scalars(int m) const {
    Fields out;
    if (m < 0) return out;
    ScalarPoly y1 = ScalarPoly::affine(0, t[0]), y2 = ScalarPoly::affine(0, t[1]);
    for (int d = 0; d <= m; ++d)
      for (int a = d; a >= 0; --a) out.push_back(ExactPoly::scalar(pow(y1, a) * pow(y2, d - a)));
    return out;
  }
  Fields times(int m, const std::vector<ExactPoly>& values) const {
    Fields out;
    for (const auto& v : values)
      for (const auto& s : scalars(m)) out.push_back(s[0] * v);
    return out;
  }
  Contains contains(int m, std::function<bool(const ExactPoly&)> value_ok) const {
    Vec3Q nv = n.v();
    return [m, nv, value_ok](const Fields& fs) {
      for (const auto& f : fs) {
        if (f.is_zero()) continue;
        if (f.degree() > m || !differentiate(f, nv).is_zero() || !value_ok(f)) return false;
      }
      return true;
    };
  }
};

ComplexReport complex_impl(ComplexTag tag, int k, const SimplexGeom& g, int face) {
  switch (tag) {
    case ComplexTag::deRham: {
      Stage R{"R", {ExactPoly::scalar(ScalarPoly(rat(1)))}, full_space(0, Shape::scalar)};
      std::vector<Stage> st = {{"P" + std::to_string(k + 3), polys(k + 3, Shape::scalar), full_space(k + 3, Shape::scalar)},
                               {"P" + std::to_string(k + 2) + "(R3)", polys(k + 2, Shape::vec3), full_space(k + 2, Shape::vec3)},
                               {"P" + std::to_string(k + 1) + "(R3)", polys(k + 1, Shape::vec3), full_space(k + 1, Shape::vec3)},
                               {"P" + std::to_string(k), polys(k, Shape::scalar), full_space(k, Shape::scalar)}};
      std::vector<Link> ln = {{"grad", op::grad}, {"curl", op::curl}, {"div", op::div}};
      return run_sequence(tag, k, -1, R, st, ln);
    }
    case ComplexTag::cd1: {
      Fields rigid;
      for (int c = 0; c < 3; ++c) {
        Vec3Q e{};
        e[c] = 1;
        rigid.push_back(ExactPoly::constant_vector(e));
        rigid.push_back(cross_x(e));
      }
      Stage T{"T", rigid, full_space(1, Shape::vec3)};
      std::vector<Stage> st = {{"P" + std::to_string(k + 4) + "(R3)", polys(k + 4, Shape::vec3), full_space(k + 4, Shape::vec3)},
                               {"P" + std::to_string(k + 3) + "(S)", polys(k + 3, Shape::sym3), full_space(k + 3, Shape::sym3)},
                               {"P" + std::to_string(k + 1) + "(S)", polys(k + 1, Shape::sym3), full_space(k + 1, Shape::sym3)},
                               {"P" + std::to_string(k) + "(R3)", polys(k, Shape::vec3), full_space(k, Shape::vec3)}};
      std::vector<Link> ln = {{"eps", op::eps}, {"curlcurl*", op::curlcurl_star}, {"div", op::div}};
      return run_sequence(tag, k, -1, T, st, ln);
    }
    case ComplexTag::elas2d1:
    case ComplexTag::elas2d2: {
      FaceCoords fc{g.face(face).n, face_tangents(g, face)};
      const FrameVector n = fc.n;
      const Mat3Q Q = n.Q(), P = n.P();
      const auto& t = fc.t;
      auto symc = [](const Mat3Q& m) { return ExactPoly::constant_matrix(m, Shape::sym3); };
      Fields qvec = {ExactPoly::constant_vector(t[0]), ExactPoly::constant_vector(t[1])};
      Fields qsq = {symc(outer(t[0], t[0])), symc(outer(t[0], t[1]) + outer(t[1], t[0])), symc(outer(t[1], t[1]))};
      auto is_qvec = [n](const ExactPoly& v) { return vdot(n.v(), v).is_zero(); };
      auto is_qsq = [n](const ExactPoly& S) { return symmetric(S) && matvec(S, n.v()).is_zero(); };
      auto is_rp = [Q](const ExactPoly& S) { return lmul(Q, S).is_zero() && rmul(S, Q).is_zero(); };
      auto is_qsp = [n, Q](const ExactPoly& S) { return lmul(n.P(), S).is_zero() && rmul(S, Q).is_zero(); };
      if (tag == ComplexTag::elas2d1) {
        Stage Tf{"T_f", {qvec[0], qvec[1], cross_x(n.v())}, fc.contains(1, is_qvec)};
        std::vector<Stage> st = {
            {"P" + std::to_string(k + 3) + "(f;QR3)", fc.times(k + 3, qvec), fc.contains(k + 3, is_qvec)},
            {"P" + std::to_string(k + 2) + "(f;QSQ)", fc.times(k + 2, qsq), fc.contains(k + 2, is_qsq)},
            {"P" + std::to_string(k) + "(f;RP)", fc.times(k, {symc(P)}), fc.contains(k, is_rp)}};
        std::vector<Link> ln = {{"eps_f", [n](const ExactPoly& v) { return face::eps_f(v, n); }},
                                {"rot_f rot_f*", [n](const ExactPoly& S) { return face::rot_f(face::rot_f_star(S, n), n); }}};
        return run_sequence(tag, k, face, Tf, st, ln);
      }
      Fields qsp = {ExactPoly::constant_matrix(outer(t[0], n.v())), ExactPoly::constant_matrix(outer(t[1], n.v()))};
      Stage P1{"P1(f)", fc.scalars(1), fc.contains(1, [](const ExactPoly&) { return true; })};
      std::vector<Stage> st = {
          {"P" + std::to_string(k + 3) + "(f)", fc.scalars(k + 3), fc.contains(k + 3, [](const ExactPoly&) { return true; })},
          {"P" + std::to_string(k + 1) + "(f;QSQ)", fc.times(k + 1, qsq), fc.contains(k + 1, is_qsq)},
          {"P" + std::to_string(k) + "(f;QSP)", fc.times(k, qsp), fc.contains(k, is_qsp)}};
      std::vector<Link> ln = {{"grad_f grad_f*", [n](const ExactPoly& v) { return face::grad_f_grad_f_star(v, n); }},
                              {"rot_f", [n](const ExactPoly& S) { return face::rot_f(S, n); }}};
      return run_sequence(tag, k, face, P1, st, ln);
    }
    case ComplexTag::ses: {
      if (k < 1) throw std::invalid_argument("check_complex: ses needs k >= 1");
      Fields src;
      for (const auto& q : polys(k - 1, Shape::vec3)) src.push_back(g.bubble_K() * q);
      auto N = cached_space(SpaceTag::N, k + 2, g);
      auto M = cached_space(SpaceTag::M, k, g);
      Stage zero{"0", {}, full_space(0, Shape::vec3)};
      std::vector<Stage> st = {{"b_K P" + std::to_string(k - 1) + "(R3)", src, span_of(src)},
                               {"N" + std::to_string(k + 2), N->elements, span_of(N->elements)},
                               {"M" + std::to_string(k), M->elements, span_of(M->elements)}};
      std::vector<Link> ln = {{"eps", op::eps}, {"curlcurl*", op::curlcurl_star}};
      return run_sequence(tag, k, -1, zero, st, ln);
    }
    case ComplexTag::ses2: {
      if (k < 4) throw std::invalid_argument("check_complex: ses2 needs k >= 4");
      Fields src, mid;
      ScalarPoly b2 = g.bubble_K() * g.bubble_K();
      for (const auto& q : polys(k - 5, Shape::vec3)) src.push_back(b2 * q);
      for (const auto& S : cached_space(SpaceTag::N0, k - 2, g)->elements) mid.push_back(g.bubble_K() * S);
      auto M = cached_space(SpaceTag::M, k, g);
      Stage zero{"0", {}, full_space(0, Shape::vec3)};
      std::vector<Stage> st = {{"b_K^2 P" + std::to_string(k - 5) + "(R3)", src, span_of(src)},
                               {"b_K N0_" + std::to_string(k - 2), mid, span_of(mid)},
                               {"M" + std::to_string(k), M->elements, span_of(M->elements)}};
      std::vector<Link> ln = {{"eps", op::eps}, {"curlcurl*", op::curlcurl_star}};
      return run_sequence(tag, k, -1, zero, st, ln);
    }
  }
  throw std::invalid_argument("check_complex: unknown complex");
}

}  // namespace

const char* complex_name(ComplexTag t) {
  switch (t) {
    case ComplexTag::deRham: return "deRham";
    case ComplexTag::cd1: return "cd1";
    case ComplexTag::elas2d1: return "pol-elas-2d1";
    case ComplexTag::elas2d2: return "pol-elas-2d2";
    case ComplexTag::ses: return "ses";
    case ComplexTag::ses2: return "ses2";
  }
  return "?";
}

std::optional<ComplexTag> complex_from_name(const std::string& s) {
  for (auto t : {ComplexTag::deRham, ComplexTag::cd1, ComplexTag::elas2d1, ComplexTag::elas2d2, ComplexTag::ses,
                 ComplexTag::ses2})
    if (s == complex_name(t)) return t;
  return std::nullopt;
}

ComplexReport check_complex(ComplexTag tag, int k, const SimplexGeom& g, int face) {
  if (face < 0 || face > 3) throw std::invalid_argument("check_complex: face index out of range");
  return complex_impl(tag, k, g, face);
}

// ---- identities ---------------------------------------------------------------

const char* identity_name(IdentityTag t) {
  switch (t) {
    case IdentityTag::skewcurl: return "skewcurl";
    case IdentityTag::curlskew: return "curlskew";
    case IdentityTag::tracecurl: return "tracecurl";
    case IdentityTag::curlrel: return "curlrel";
    case IdentityTag::rel01: return "rel01";
    case IdentityTag::rel05: return "rel05";
    case IdentityTag::rel06: return "rel06";
    case IdentityTag::rel7: return "rel7";
    case IdentityTag::rel12: return "rel12";
    case IdentityTag::rel13: return "rel13";
    case IdentityTag::rot_Lambda: return "rot-Lambda";
    case IdentityTag::Lambda_f_comp: return "Lambda_f-comp";
    case IdentityTag::rel07: return "rel07";
    case IdentityTag::rel09: return "rel09";
    case IdentityTag::int_parts_curlcurl: return "int-parts-curlcurl";
  }
  return "?";
}

const std::vector<IdentityTag>& all_identities() {
  static const std::vector<IdentityTag> v = {
      IdentityTag::skewcurl, IdentityTag::curlskew,   IdentityTag::tracecurl,     IdentityTag::curlrel,
      IdentityTag::rel01,    IdentityTag::rel05,      IdentityTag::rel06,         IdentityTag::rel7,
      IdentityTag::rel12,    IdentityTag::rel13,      IdentityTag::rot_Lambda,    IdentityTag::Lambda_f_comp,
      IdentityTag::rel07,    IdentityTag::rel09,      IdentityTag::int_parts_curlcurl};
  return v;
}

std::optional<IdentityTag> identity_from_name(const std::string& s) {
  for (auto t : all_identities())
    if (s == identity_name(t)) return t;
  return std::nullopt;
}

namespace {

SimplexGeom trial_tet(int trial, std::uint64_t seed) {
  if (trial % 2 == 0) return reference_tet();
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<int> u(-4, 4);
  for (;;) {
    std::array<Vec3Q, 4> v;
    for (auto& p : v) p = vec3(u(rng), u(rng), u(rng));
    try {
      return SimplexGeom(v);
    } catch (const GeometryError&) {
    }
  }
}

ExactPoly sc(const ScalarPoly& p) { return ExactPoly::scalar(p); }

Rational face_mean(const ScalarPoly& p, const SimplexGeom& g, int f) {
  return integrate_simplex(p, g.face_vertices(f)).mean;
}

// Edge vector of e, oriented counterclockwise about the outward normal of its
// face faces[side]: s = n x (outward in-plane normal) up to a positive factor.
Vec3Q boundary_tangent(const SimplexGeom& g, int e, int side) {
  const FrameVector& n = g.face(g.edge(e).faces[side]).n;
  Vec3Q s = g.edge(e).s.v();
  if (sgn(dot(s, cross(n.v(), Rational(-1) * g.edge(e).m[side].v()))) < 0) s = Rational(-1) * s;
  return s;
}

// Residuals that must vanish; the first nonzero one is reported.
std::vector<std::pair<std::string, ExactPoly>> poly_residuals(IdentityTag t, const SimplexGeom& g, int f,
                                                             std::mt19937_64& rng) {
  const FrameVector n = g.face(f).n;
  const Rational n2 = n.norm2();
  const Mat3Q C = n.C(), P = n.P(), Q = n.Q();
  switch (t) {
    case IdentityTag::skewcurl: {
      ExactPoly T = random_poly(Shape::mat3, 3, rng);
      return {{"vect skw curl T + div Xi T / 2", op::vect(op::skw(op::curl(T))) + Rational(1, 2) * op::div(op::Xi(T))}};
    }
    case IdentityTag::curlskew: {
      ExactPoly T = random_poly(Shape::skew3, 3, rng);
      return {{"curl T - Xi grad vect T", op::curl(T) - op::Xi(op::grad(op::vect(T)))}};
    }
    case IdentityTag::tracecurl: {
      ExactPoly T = random_poly(Shape::mat3, 3, rng);
      return {{"tr curl T + 2 div vect skw T", op::trace(op::curl(T)) + Rational(2) * op::div(op::vect(op::skw(T)))}};
    }
    case IdentityTag::curlrel: {
      // C_n and d/dn are each linear in the raw normal
      ExactPoly v = random_poly(Shape::vec3, 3, rng);
      return {{"|n|^2 (curl v - rot_f v - curl_f v) - C_n d_n v",
               n2 * (op::curl(v) - face::rot_f(v, n) - face::curl_f(v, n)) - lmul(C, face::partial_n(v, n))}};
    }
    case IdentityTag::rel01: {
      ExactPoly v = random_poly(Shape::vec3, 3, rng);
      ExactPoly nv = sc(vdot(n.v(), v));
      return {{"|n|^2 curl_f v + C_n grad(n'v)", n2 * face::curl_f(v, n) + lmul(C, op::grad(nv))},
              {"C_n grad(n'v) - C_n grad_f(n'v)", lmul(C, op::grad(nv)) - lmul(C, face::grad_f(nv, n))}};
    }
    case IdentityTag::rel05: {
      ExactPoly S = random_poly(Shape::mat3, 3, rng);
      return {{"|n|^2 (curl S - curl_f S - rot_f S) + d_n S C_n",
               n2 * (op::curl(S) - face::curl_f(S, n) - face::rot_f(S, n)) + rmul(face::partial_n(S, n), C)}};
    }
    case IdentityTag::rel06: {
      ExactPoly S = random_poly(Shape::mat3, 3, rng);
      return {{"|n|^2 (curl* S - curl_f* S - rot_f* S) - C_n d_n S",
               n2 * (op::curl_star(S) - face::curl_f_star(S, n) - face::rot_f_star(S, n)) -
                   lmul(C, face::partial_n(S, n))}};
    }
    case IdentityTag::rel7: {
      ExactPoly S = random_poly(Shape::mat3, 3, rng);
      return {{"|n|^2 curl_f S - grad_f(S n) C_n", n2 * face::curl_f(S, n) - rmul(face::grad_f(matvec(S, n.v()), n), C)},
              {"|n|^2 curl_f* S + C_n grad_f*(n'S)",
               n2 * face::curl_f_star(S, n) + lmul(C, face::grad_f_star(vecmat(n.v(), S), n))}};
    }
    case IdentityTag::rel12: {
      ExactPoly S = random_poly(Shape::sym3, 4, rng);
      ExactPoly a = rmul(lmul(P, op::curlcurl_star(S)), P);
      ExactPoly b = lmul(P, face::rot_f(op::curl_star(S), n));
      ExactPoly c = face::rot_f(lmul(P, op::curl_star(S)), n);
      ExactPoly d = face::rot_f(face::rot_f_star(S, n), n);
      ExactPoly e = face::rot_f(face::rot_f_star(rmul(lmul(Q, S), Q), n), n);
      return {{"P curlcurl* S P - P rot_f curl* S", a - b},
              {"P rot_f curl* S - rot_f(P curl* S)", b - c},
              {"rot_f(P curl* S) - rot_f rot_f* S", c - d},
              {"rot_f rot_f* S - rot_f rot_f* QSQ", d - e}};
    }
    case IdentityTag::rel13: {
      ExactPoly v = random_poly(Shape::vec3, 4, rng);
      return {{"Lambda_f(eps v) - grad_f grad_f*(n'v)",
               face::Lambda_f(op::eps(v), n) - face::grad_f_grad_f_star(sc(vdot(n.v(), v)), n)}};
    }
    case IdentityTag::rot_Lambda: {
      ExactPoly S = random_poly(Shape::sym3, 4, rng);
      ExactPoly lhs = rmul(lmul(C, op::curlcurl_star(S)), P);
      ExactPoly mid = face::rot_f(
          rmul(lmul(Q, face::grad_f_star(vecmat(n.v(), S), n) - face::partial_n(S, n)), Q), n);
      return {{"C_n curlcurl* S P_n - rot_f Q(grad_f* n'S - d_n S)Q", lhs - mid},
              {"C_n curlcurl* S P_n - rot_f Lambda_f(S)", lhs - face::rot_f(face::Lambda_f(S, n), n)}};
    }
    default: return {};
  }
}

// Integral identities: residual scaled to a rational number.
std::vector<std::pair<std::string, Rational>> integral_residuals(IdentityTag t, const SimplexGeom& g, int f,
                                                                std::mt19937_64& rng) {
  switch (t) {
    case IdentityTag::Lambda_f_comp: {
      // Lambda_f(b_K S) = (b_f / h_f) Q S Q on f; with the raw normal the
      // factor is |n|^2 / |det| (h_f = |det| / |n|, Lambda linear in n)
      ExactPoly S = random_poly(Shape::sym3, 2, rng);
      const FrameVector n = g.face(f).n;
      const Mat3Q Q = n.Q();
      ExactPoly lhs = face::Lambda_f(g.bubble_K() * S, n);
      ExactPoly rhs = Rational(n.norm2() / abs(g.det6())) * (g.bubble_face(f) * rmul(lmul(Q, S), Q));
      std::vector<std::pair<std::string, Rational>> out;
      auto comps = restrict_components(lhs - rhs, g.face_vertices(f));
      Rational worst = 0;
      for (const auto& c : comps)
        for (const auto& [k, v] : c.terms()) worst = std::max(worst, Rational(abs(v)));
      out.push_back({"max |coefficient| of (Lambda_f(b_K S) - |n|^2/|det| b_f QSQ) on f", worst});
      return out;
    }
    case IdentityTag::rel07: {
      ExactPoly S = random_poly(Shape::mat3, 2, rng), T = random_poly(Shape::mat3, 3, rng);
      Rational r = integrate_tet(contract(S, op::curl(T)), g.vertices()) - integrate_tet(contract(op::curl(S), T), g.vertices());
      // int_f S C_n : T with unit n = (area / |n|) mean(S C_n : T) = mean / 2 for the raw n
      for (int ff = 0; ff < 4; ++ff)
        r -= face_mean(contract(rmul(S, g.face(ff).n.C()), T), g, ff) / 2;
      return {{"int S:curl T - int curl S:T - int_dK S C_n:T", r}};
    }
    case IdentityTag::rel09: {
      // multiplied by |n|: faces give |n|^2/2 * mean, edges give mean((S s).(T n))
      ExactPoly S = random_poly(Shape::mat3, 2, rng), T = random_poly(Shape::mat3, 2, rng);
      const FrameVector n = g.face(f).n;
      Rational r = n.norm2() / 2 *
                   (face_mean(contract(face::rot_f(S, n), T), g, f) - face_mean(contract(S, face::curl_f(T, n)), g, f));
      for (int e = 0; e < 6; ++e)
        for (int side = 0; side < 2; ++side) {
          if (g.edge(e).faces[side] != f) continue;
          Vec3Q s = boundary_tangent(g, e, side);
          r += integrate_simplex(contract(matvec(S, s), matvec(T, n.v())), g.edge_vertices(e)).mean;
        }
      return {{"|n| (int_f rot_f S:T - int_f S:curl_f T + int_df (Ss).(Tn))", r}};
    }
    case IdentityTag::int_parts_curlcurl: {
      ExactPoly S = random_poly(Shape::sym3, 4, rng), T = random_poly(Shape::mat3, 3, rng);
      return {{"int S:curlcurl* T - int curl* curl S:T + face and edge terms", curlcurl_by_parts_residual(S, T, g, true)}};
    }
    default: return {};
  }
}

}  // namespace

Rational curlcurl_by_parts_residual(const ExactPoly& S, const ExactPoly& T, const SimplexGeom& g,
                                    bool with_edge_terms) {
  const auto& V = g.vertices();
  Rational r = integrate_tet(contract(S, op::curl(op::curl_star(T))), V) -
               integrate_tet(contract(op::curl_star(op::curl(S)), T), V);
  const ExactPoly Tt = op::transpose(T);
  for (int f = 0; f < 4; ++f) {
    const FrameVector n = g.face(f).n;
    const Mat3Q C = n.C();
    const Rational n2 = n.norm2();
    // terms of degree 3 in the raw normal carry 1/|n|^2 after the area factor |n|/2
    r += face_mean(contract(rmul(lmul(C, S), C), face::partial_n(T, n)), g, f) / (2 * n2);
    r += face_mean(contract(lmul(C, face::rot_f(S, n)) - rmul(face::rot_f_star(S, n), C), T), g, f) / 2;
    r += face_mean(contract(rmul(lmul(C, face::Lambda_f(S, n)), C), T), g, f) / (2 * n2);
    if (!with_edge_terms) continue;
    // the face-wise integrations by parts of C_n S against T' leave
    // (C S s).(T' n) - (T' s).(C S n) on each face boundary
    const ExactPoly CS = lmul(C, S);
    for (int e = 0; e < 6; ++e)
      for (int side = 0; side < 2; ++side) {
        if (g.edge(e).faces[side] != f) continue;
        Vec3Q s = boundary_tangent(g, e, side);
        ScalarPoly w = contract(matvec(CS, s), matvec(Tt, n.v())) - contract(matvec(Tt, s), matvec(CS, n.v()));
        r += integrate_simplex(w, g.edge_vertices(e)).mean / n2;
      }
  }
  return r;
}

TrialOutcome identity_trial(IdentityTag t, int trial, std::uint64_t seed) {
  SimplexGeom g = trial_tet(trial, seed);
  const int f = trial % 4;
  std::mt19937_64 rng(seed * 1000003ull + static_cast<std::uint64_t>(trial) * 7919ull + static_cast<std::uint64_t>(t));
  TrialOutcome out;
  out.ok = true;
  for (const auto& [what, res] : poly_residuals(t, g, f, rng))
    if (!res.is_zero()) {
      out.ok = false;
      out.residual = what + ":\n" + short_dump(res);
      return out;
    }
  for (const auto& [what, res] : integral_residuals(t, g, f, rng))
    if (sgn(res) != 0) {
      out.ok = false;
      out.residual = what + " = " + res.get_str();
      return out;
    }
  return out;
}

namespace {
IdentityReport summarize(IdentityTag t, const std::vector<TrialOutcome>& outs, double secs) {
  IdentityReport r;
  r.tag = t;
  r.trials = static_cast<int>(outs.size());
  r.seconds = secs;
  for (std::size_t i = 0; i < outs.size(); ++i)
    if (!outs[i].ok) {
      if (r.failures++ == 0) {
        r.first_failure = static_cast<int>(i);
        r.counterexample = outs[i].residual;
      }
    }
  return r;
}
}  // namespace

IdentityReport check_identity(IdentityTag t, int trials, std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<TrialOutcome> outs(trials);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < trials; ++i) outs[i] = identity_trial(t, i, seed);
  return summarize(t, outs, since(t0));
}

IdentityReport check_identity_serial(IdentityTag t, int trials, std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<TrialOutcome> outs(trials);
  for (int i = 0; i < trials; ++i) outs[i] = identity_trial(t, i, seed);
  return summarize(t, outs, since(t0));
}

// ---- membership -----------------------------------------------------------------

namespace {

int find_vertex(const SimplexGeom& g, const Vec3Q& p) {
  for (int i = 0; i < 4; ++i)
    if (g.vertex(i) == p) return i;
  return -1;
}

// local face of K1 shared with K2, and the matching local face of K2
std::pair<int, int> shared_face(const SimplexGeom& K1, const SimplexGeom& K2) {
  std::vector<int> a, b;
  for (int i = 0; i < 4; ++i) {
    int j = find_vertex(K2, K1.vertex(i));
    if (j >= 0) {
      a.push_back(i);
      b.push_back(j);
    }
  }
  if (a.size() != 3) throw GeometryError("membership: the tets do not share exactly one face");
  return {SimplexGeom::face_index(a[0], a[1], a[2]), SimplexGeom::face_index(b[0], b[1], b[2])};
}

}  // namespace

MembershipReport check_h_curlcurl_membership(const ExactPoly& S1, const SimplexGeom& K1, const ExactPoly& S2,
                                             const SimplexGeom& K2) {
  auto [f1, f2] = shared_face(K1, K2);
  (void)f2;
  const FrameVector n = K1.face(f1).n;
  const Mat3Q Q = n.Q();
  auto verts = K1.face_vertices(f1);
  auto same = [&](const ExactPoly& a, const ExactPoly& b) {
    for (const auto& c : restrict_components(a - b, verts))
      if (!c.is_zero()) return false;
    return true;
  };
  MembershipReport r;
  r.shared_face_1 = f1;
  r.qsq_continuous = same(rmul(lmul(Q, S1), Q), rmul(lmul(Q, S2), Q));
  r.lambda_continuous = same(face::Lambda_f(S1.as(Shape::sym3), n), face::Lambda_f(S2.as(Shape::sym3), n));
  r.member = r.qsq_continuous && r.lambda_continuous;
  return r;
}

std::vector<Rational> distributional_defect(const ExactPoly& S1, const SimplexGeom& K1, const ExactPoly& S2,
                                            const SimplexGeom& K2) {
  auto [f1, f2] = shared_face(K1, K2);
  // psi vanishes on every outer face; psi^2 kills the boundary terms there
  ScalarPoly psi(rat(1));
  for (int f = 0; f < 4; ++f) {
    if (f != f1) psi = psi * K1.lambda(face_opposite(f));
    if (f != f2) psi = psi * K2.lambda(face_opposite(f));
  }
  ScalarPoly psi2 = psi * psi;
  std::vector<ScalarPoly> lin = {ScalarPoly(rat(1)), ScalarPoly::coordinate(0), ScalarPoly::coordinate(1),
                                 ScalarPoly::coordinate(2)};
  std::vector<Rational> out;
  for (const auto& pr : kSymPairs)
    for (const auto& l : lin) {
      ExactPoly Phi = ExactPoly::sym_unit(pr[0], pr[1], psi2 * l);
      ExactPoly ccPhi = op::curl(op::curl_star(Phi));
      Rational d = 0;
      for (const auto& [S, K] : {std::pair<const ExactPoly*, const SimplexGeom*>{&S1, &K1}, {&S2, &K2}}) {
        d += integrate_tet(contract(*S, ccPhi), K->vertices());
        d -= integrate_tet(contract(op::curl_star(op::curl(*S)), Phi), K->vertices());
      }
      out.push_back(d);
    }
  return out;
}

std::pair<SimplexGeom, SimplexGeom> two_tet_pair() {
  Vec3Q a = vec3(0, 0, 0), b = vec3(2, 0, 0), c = vec3(0, 2, 0);
  return {SimplexGeom({a, b, c, vec3(1, 1, 2)}), SimplexGeom({a, b, c, vec3(1, 0, -2)})};
}

std::pair<ExactPoly, ExactPoly> matched_theta_pair(std::uint64_t seed) {
  const auto pair = two_tet_pair();
  const SimplexGeom& K1 = pair.first;
  const SimplexGeom& K2 = pair.second;
  auto frames = [&](const SimplexGeom& K) {
    FrameOverride o;
    for (int e = 0; e < 6; ++e) o.edge_normals[e] = global_edge_frame(K.edge(e).s.v());
    o.face_normals[0] = K1.face(0).n.v();
    return o;
  };
  FrameOverride o1 = frames(K1), o2 = frames(K2);
  DofSet d1 = build_dofset(ElementTag::ThetaK, 6, K1, &o1);
  DofSet d2 = build_dofset(ElementTag::ThetaK, 6, K2, &o2);
  SpaceBasis B = basis_P(6, Shape::sym3, K1);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(-9, 9);
  QMatrix v1(d1.size(), 1), v2(d2.size(), 1);
  // face 0 = (0,1,2): vertices 0..2, edges 0,1,3 and the face itself are shared;
  // set 7 comes face-major with three edges per face
  auto shared = [](const DofGroup& g, int group_of_set7) {
    if (g.sub_dim == 0) return g.sub_index <= 2;
    if (g.set == 7) return group_of_set7 < 3;
    if (g.sub_dim == 1) return g.sub_index == 0 || g.sub_index == 1 || g.sub_index == 3;
    if (g.sub_dim == 2) return g.sub_index == 0;
    return false;
  };
  int s7 = 0;
  for (std::size_t gi = 0; gi < d1.groups().size(); ++gi) {
    const auto& g = d1.groups()[gi];
    bool sh = shared(g, g.set == 7 ? s7++ : -1);
    for (int j = 0; j < g.count(); ++j) {
      int i = d1.offset(static_cast<int>(gi)) + j;
      v1(i, 0) = u(rng);
      v2(i, 0) = sh ? v1(i, 0) : Rational(u(rng));
    }
  }
  QMatrix c1 = solve(d1.matrix(B.elements), v1);
  QMatrix c2 = solve(d2.matrix(B.elements), v2);
  return {combine(B.elements, c1.col(0)).as(Shape::sym3), combine(B.elements, c2.col(0)).as(Shape::sym3)};
}

}  // namespace tetstress
