#include "tetstress/solver.hpp"

#include <Eigen/UmfPackSupport>
#include <umfpack.h>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace tetstress {

namespace {

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double factorial(int n) {
  double r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

void compositions(int parts, int total, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) + 1 == parts) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int a = total; a >= 0; --a) {
    cur.push_back(a);
    compositions(parts, total - a, cur, out);
    cur.pop_back();
  }
}

Eigen::Matrix3d to_eigen(const Mat3d& m) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m[i][j];
  return r;
}

Eigen::Vector3d to_eigen(const Vec3d& v) { return {v[0], v[1], v[2]}; }
Eigen::Vector3d to_eigen_q(const Vec3Q& v) { return {v[0].get_d(), v[1].get_d(), v[2].get_d()}; }

Mat3d from_eigen(const Eigen::Matrix3d& m) {
  Mat3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = m(i, j);
  return r;
}

// symmetric unit for pair a: 1 at (i,j) and (j,i)
Eigen::Matrix3d sym_unit_d(int a) {
  Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
  E(kSymPairs[a][0], kSymPairs[a][1]) = 1;
  E(kSymPairs[a][1], kSymPairs[a][0]) = 1;
  return E;
}

// weights w_a with X : phi = sum_a phi^a w_a for symmetric phi
std::array<double, 6> sym_weights(const Eigen::Matrix3d& X) {
  std::array<double, 6> w{};
  for (int a = 0; a < 6; ++a) {
    int i = kSymPairs[a][0], j = kSymPairs[a][1];
    w[a] = i == j ? X(i, i) : X(i, j) + X(j, i);
  }
  return w;
}

double mono_value(MonoKey k, const Vec3d& x) {
  return std::pow(x[0], mono_exp(k, 0)) * std::pow(x[1], mono_exp(k, 1)) * std::pow(x[2], mono_exp(k, 2));
}

std::unordered_map<MonoKey, int> index_of(const std::vector<MonoKey>& monos) {
  std::unordered_map<MonoKey, int> m;
  for (std::size_t i = 0; i < monos.size(); ++i) m[monos[i]] = static_cast<int>(i);
  return m;
}

Eigen::MatrixXd coefficient_matrix(const std::vector<ScalarPoly>& polys, const std::vector<MonoKey>& monos) {
  auto idx = index_of(monos);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<int>(monos.size()), static_cast<int>(polys.size()));
  for (std::size_t j = 0; j < polys.size(); ++j)
    for (const auto& [k, c] : polys[j].terms()) {
      auto it = idx.find(k);
      if (it == idx.end()) throw std::logic_error("coefficient_matrix: monomial outside the table");
      C(it->second, static_cast<int>(j)) = c.get_d();
    }
  return C;
}

// mean over the reference tet of m_p * n_q, exact then rounded
Eigen::MatrixXd moment_matrix(const std::vector<MonoKey>& a, const std::vector<MonoKey>& b, const SimplexGeom& ref) {
  int deg = 0;
  for (auto k : a) deg = std::max(deg, mono_deg(k));
  int deg2 = 0;
  for (auto k : b) deg2 = std::max(deg2, mono_deg(k));
  const MomentTable& mt = moment_table(ref.all_vertices(), deg + deg2);
  Eigen::MatrixXd H(static_cast<int>(a.size()), static_cast<int>(b.size()));
  for (std::size_t p = 0; p < a.size(); ++p)
    for (std::size_t q = 0; q < b.size(); ++q) H(p, q) = mt.mean(a[p] + b[q]).get_d();
  return H;
}

Vec3d bary_to_ref(const std::array<double, 4>& lam, const std::array<int, 3>& fv) {
  // reference vertices 0, e1, e2, e3
  Vec3d x{0, 0, 0};
  for (int i = 0; i < 3; ++i) {
    int v = fv[i];
    if (v > 0) x[v - 1] += lam[i];
  }
  return x;
}

Vec3d tet_bary_to_ref(const std::array<double, 4>& lam) { return {lam[1], lam[2], lam[3]}; }

Vec3d map_point(const ElementGeometry& g, const Vec3d& xh) {
  Vec3d x = g.b;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) x[i] += g.B[i][j] * xh[j];
  return x;
}

}  // namespace

// ---- quadrature ------------------------------------------------------------------

const QuadratureRule& simplex_rule(int dim, int degree) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("simplex_rule: dim must be 1, 2 or 3");
  if (degree < 0) throw std::invalid_argument("simplex_rule: negative degree");
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{dim, degree}];
  if (slot) return *slot;
  auto r = std::make_unique<QuadratureRule>();
  r->dim = dim;
  const int s = degree / 2;  // ceil((degree - 1) / 2)
  const int d = 2 * s + 1;
  r->degree = d;
  const int n = dim;
  for (int i = 0; i <= s; ++i) {
    const double rr = d + n - 2 * i;
    double w = std::pow(2.0, -2 * s) * std::pow(rr, d) / (factorial(i) * factorial(d + n - i)) * factorial(n);
    if (i % 2) w = -w;
    std::vector<std::vector<int>> betas;
    std::vector<int> cur;
    compositions(n + 1, s - i, cur, betas);
    for (const auto& beta : betas) {
      std::array<double, 4> lam{};
      for (int j = 0; j <= n; ++j) lam[j] = (2 * beta[j] + 1) / rr;
      r->bary.push_back(lam);
      r->weight.push_back(w);
    }
  }
  const double total = std::accumulate(r->weight.begin(), r->weight.end(), 0.0);
  for (auto& w : r->weight) w /= total;
  slot = std::move(r);
  return *slot;
}

// ---- material --------------------------------------------------------------------

void Material::validate() const {
  if (!(lambda >= 0) || !(mu > 0) || !std::isfinite(lambda) || !std::isfinite(mu))
    throw std::invalid_argument("material: need lambda >= 0 and mu > 0");
}

Mat3d Material::compliance(const Mat3d& T) const {
  double tr = T[0][0] + T[1][1] + T[2][2];
  double kappa = lambda / (2 * mu + 3 * lambda);
  Mat3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = (T[i][j] - (i == j ? kappa * tr : 0.0)) / (2 * mu);
  return r;
}

Mat3d Material::elasticity(const Mat3d& E) const {
  double tr = E[0][0] + E[1][1] + E[2][2];
  Mat3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = 2 * mu * E[i][j] + (i == j ? lambda * tr : 0.0);
  return r;
}

// ---- reference element -----------------------------------------------------------

namespace {

std::unique_ptr<ReferenceElement> build_reference(const StressElementSpec& spec) {
  auto r = std::make_unique<ReferenceElement>();
  r->spec = spec;
  const int k = spec.k;
  const SimplexGeom& ref = r->geom;
  DofSet ds = build_dofset(spec.tag(), k, ref);
  SpaceBasis basis = target_space(spec.tag(), k, ref);
  DualBasis db = dual_basis(ds, basis);
  r->dual = db.elements;
  r->nloc = ds.size();
  r->space_degree = spec.tilde ? 4 : k + 3;
  r->disp_degree = spec.tilde ? 1 : k;
  for (std::size_t gi = 0; gi < ds.groups().size(); ++gi) {
    const auto& g = ds.groups()[gi];
    r->group_offset.push_back(ds.offset(static_cast<int>(gi)));
    r->group_size.push_back(g.count());
    r->group_subdim.push_back(g.sub_dim);
    r->group_subindex.push_back(g.sub_index);
    for (int j = 0; j < g.count(); ++j) r->group_of.push_back(static_cast<int>(gi));
    if (g.sub_dim < 3) r->nshared += g.count();
    if (g.sub_dim == 1) r->nweights_edge = g.count() / 5;
    if (g.sub_dim == 2) r->nweights_face = g.count() / 3;
  }

  r->stress_monos = monomials_upto(r->space_degree);
  r->div_monos = monomials_upto(r->space_degree - 1);
  r->disp_monos = monomials_upto(r->disp_degree);
  r->nmono_disp = static_cast<int>(r->disp_monos.size());
  for (int a = 0; a < 6; ++a) {
    std::vector<ScalarPoly> comp;
    for (const auto& p : r->dual) comp.push_back(p(kSymPairs[a][0], kSymPairs[a][1]));
    r->coef[a] = coefficient_matrix(comp, r->stress_monos);
  }
  for (int c = 0; c < 3; ++c) {
    std::vector<ScalarPoly> comp;
    for (const auto& p : r->dual) comp.push_back(op::div(p)[c]);
    r->div_coef[c] = coefficient_matrix(comp, r->div_monos);
  }
  Eigen::MatrixXd H = moment_matrix(r->stress_monos, r->stress_monos, ref);
  for (int a = 0; a < 6; ++a)
    for (int b = a; b < 6; ++b) {
      Eigen::MatrixXd G = r->coef[a].transpose() * H * r->coef[b];
      r->gram[a][b] = a == b ? G : Eigen::MatrixXd(G + G.transpose());
    }
  Eigen::MatrixXd Hd = moment_matrix(r->disp_monos, r->div_monos, ref);
  for (int c = 0; c < 3; ++c) r->divmom[c] = Hd * r->div_coef[c];
  r->mono_mass = moment_matrix(r->disp_monos, r->disp_monos, ref);
  return r;
}

}  // namespace

const ReferenceElement& reference_element(const StressElementSpec& spec) {
  static std::mutex mu;
  static std::map<std::pair<int, bool>, std::unique_ptr<ReferenceElement>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{spec.k, spec.tilde}];
  if (!slot) {
    if (spec.tilde ? spec.k != 1 : (spec.k < 1 || spec.k > 3))
      throw std::invalid_argument("reference_element: supported are k = 1..3, or k = 1 for the tilde element");
    slot = build_reference(spec);
  }
  return *slot;
}

Eigen::VectorXd monomial_values(const std::vector<MonoKey>& monos, const Vec3d& xhat) {
  Eigen::VectorXd v(static_cast<int>(monos.size()));
  for (std::size_t i = 0; i < monos.size(); ++i) v(static_cast<int>(i)) = mono_value(monos[i], xhat);
  return v;
}

// ---- per-element kernels ---------------------------------------------------------

ElementGeometry element_geometry(const MeshTopology& m, int t) {
  ElementGeometry g;
  const auto& v = m.tets[t];
  g.b = m.x[v[0]];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g.B[i][j] = m.x[v[j + 1]][i] - m.x[v[0]][i];
  g.absdet = std::abs(to_eigen(g.B).determinant());
  g.volume = g.absdet / 6;
  for (int i = 0; i < 3; ++i) g.centroid[i] = (m.x[v[0]][i] + m.x[v[1]][i] + m.x[v[2]][i] + m.x[v[3]][i]) / 4;
  for (int e = 0; e < 6; ++e) {
    const auto& fr = m.edge_frame[m.tet_edges[t][e]];
    for (int a = 0; a < 2; ++a) g.edge_frame[e][a] = {fr[a][0].get_d(), fr[a][1].get_d(), fr[a][2].get_d()};
    double s = 0;
    for (int c = 0; c < 3; ++c) {
      double d = m.x[v[kEdgeVerts[e][1]]][c] - m.x[v[kEdgeVerts[e][0]]][c];
      s += d * d;
    }
    g.h = std::max(g.h, std::sqrt(s));
  }
  for (int f = 0; f < 4; ++f) {
    const auto& n = m.face_normal[m.tet_faces[t][f]];
    g.face_normal[f] = {n[0].get_d(), n[1].get_d(), n[2].get_d()};
  }
  return g;
}

namespace {
double block_condition(const Eigen::MatrixXd& D) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}
}  // namespace

Eigen::MatrixXd dof_transform(const ReferenceElement& ref, const ElementGeometry& g, double* cond) {
  const Eigen::Matrix3d B = to_eigen(g.B);
  const Eigen::Matrix3d Bt = B.transpose();
  Eigen::MatrixXd T = Eigen::MatrixXd::Identity(ref.nloc, ref.nloc);
  double worst = 1;
  for (std::size_t gi = 0; gi < ref.group_offset.size(); ++gi) {
    const int off = ref.group_offset[gi], sz = ref.group_size[gi], sub = ref.group_subindex[gi];
    switch (ref.group_subdim[gi]) {
      case 0: {
        Eigen::MatrixXd D(6, 6);
        for (int a = 0; a < 6; ++a) {
          Eigen::Matrix3d P = B * sym_unit_d(a) * Bt;
          for (int r = 0; r < 6; ++r) D(r, a) = P(kSymPairs[r][0], kSymPairs[r][1]);
        }
        worst = std::max(worst, block_condition(D));
        T.block(off, off, 6, 6) = D.inverse();
        break;
      }
      case 1: {
        const auto& re = ref.geom.edge(sub);
        Eigen::Matrix3d basis;
        basis.col(0) = to_eigen_q(re.s.v());
        basis.col(1) = to_eigen_q(ref.geom.face(re.faces[0]).n.v());
        basis.col(2) = to_eigen_q(ref.geom.face(re.faces[1]).n.v());
        const Eigen::Matrix3d binv = basis.inverse();
        const Eigen::Vector3d s = B * basis.col(0);  // the tet's own edge vector
        const Eigen::Vector3d qa = to_eigen(g.edge_frame[sub][0]), qb = to_eigen(g.edge_frame[sub][1]);
        const std::array<std::pair<Eigen::Vector3d, Eigen::Vector3d>, 5> pairs = {
            {{s, qa}, {s, qb}, {qa, qa}, {qb, qb}, {qa, qb}}};
        Eigen::MatrixXd F(5, 5);
        for (int i = 0; i < 5; ++i) {
          Eigen::Vector3d cu = binv * (Bt * pairs[i].first), cv = binv * (Bt * pairs[i].second);
          // no s's term: the second vector of every pair is normal to the edge
          F(i, 0) = cu(0) * cv(1) + cu(1) * cv(0);
          F(i, 1) = cu(0) * cv(2) + cu(2) * cv(0);
          F(i, 2) = cu(1) * cv(1);
          F(i, 3) = cu(2) * cv(2);
          F(i, 4) = cu(1) * cv(2) + cu(2) * cv(1);
        }
        worst = std::max(worst, block_condition(F));
        const Eigen::MatrixXd Fi = F.inverse();
        const int nw = sz / 5;
        for (int i = 0; i < 5; ++i)
          for (int j = 0; j < 5; ++j)
            for (int w = 0; w < nw; ++w) T(off + i * nw + w, off + j * nw + w) = Fi(i, j);
        break;
      }
      case 2: {
        const Eigen::Vector3d nh = to_eigen_q(ref.geom.face(sub).n.v());
        const double c = (Bt * to_eigen(g.face_normal[sub])).dot(nh) / nh.squaredNorm();
        const Eigen::Matrix3d D = c * B;
        worst = std::max(worst, block_condition(D));
        const Eigen::Matrix3d Di = D.inverse();
        const int nw = sz / 3;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int w = 0; w < nw; ++w) T(off + i * nw + w, off + j * nw + w) = Di(i, j);
        break;
      }
      default: break;
    }
  }
  if (cond) *cond = worst;
  return T;
}

Eigen::MatrixXd displacement_basis(const ReferenceElement& ref, const ElementGeometry& g) {
  const int np = ref.nmono_disp;
  if (!ref.spec.tilde) return Eigen::MatrixXd::Identity(3 * np, 3 * np);
  // rigid motions e_d and e_d x (x - c) / h in physical coordinates
  auto idx = index_of(ref.disp_monos);
  const int c0 = idx.at(mono_key(0, 0, 0));
  const std::array<int, 3> cx = {idx.at(mono_key(1, 0, 0)), idx.at(mono_key(0, 1, 0)), idx.at(mono_key(0, 0, 1))};
  Eigen::MatrixXd Psi = Eigen::MatrixXd::Zero(3 * np, 6);
  const Eigen::Matrix3d B = to_eigen(g.B);
  const Eigen::Vector3d w0 = (to_eigen(g.b) - to_eigen(g.centroid)) / g.h;
  for (int d = 0; d < 3; ++d) {
    Psi(d * np + c0, d) = 1;
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(d);
    const Eigen::Vector3d r0 = e.cross(w0);
    for (int o = 0; o < 3; ++o) Psi(o * np + c0, 3 + d) += r0(o);
    for (int m = 0; m < 3; ++m) {
      const Eigen::Vector3d rm = e.cross(Eigen::Vector3d(B.col(m) / g.h));
      for (int o = 0; o < 3; ++o) Psi(o * np + cx[m], 3 + d) += rm(o);
    }
  }
  return Psi;
}

namespace {

// Phi : A Phi = t' M t for Phi = B T B', t the sym components of T.
Eigen::Matrix<double, 6, 6> piola_compliance(const Eigen::Matrix3d& B, const Material& mat) {
  Eigen::Matrix<double, 9, 6> P;
  Eigen::Matrix<double, 6, 1> l;
  for (int a = 0; a < 6; ++a) {
    Eigen::Matrix3d Phi = B * sym_unit_d(a) * B.transpose();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) P(3 * i + j, a) = Phi(i, j);
    l(a) = Phi.trace();
  }
  const double kappa = mat.lambda / (2 * mat.mu + 3 * mat.lambda);
  return (P.transpose() * P - kappa * l * l.transpose()) / (2 * mat.mu);
}

// Rows (d, p) component major: vol * mean((B div phi_j)_d m_p).
Eigen::MatrixXd piola_divergence(const ReferenceElement& ref, const ElementGeometry& g) {
  const int np = ref.nmono_disp;
  Eigen::MatrixXd Bp = Eigen::MatrixXd::Zero(3 * np, ref.nloc);
  for (int d = 0; d < 3; ++d)
    for (int c = 0; c < 3; ++c) Bp.middleRows(d * np, np) += (g.volume * g.B[d][c]) * ref.divmom[c];
  return Bp;
}

}  // namespace

ElementMatrices element_matrices(const ReferenceElement& ref, const ElementGeometry& g, const Material& mat,
                                 const Eigen::MatrixXd& T, const Eigen::MatrixXd& Psi) {
  const auto M = piola_compliance(to_eigen(g.B), mat);
  Eigen::MatrixXd Ap = Eigen::MatrixXd::Zero(ref.nloc, ref.nloc);
  for (int a = 0; a < 6; ++a)
    for (int b = a; b < 6; ++b) Ap.noalias() += (g.volume * M(a, b)) * ref.gram[a][b];
  ElementMatrices em;
  em.A.noalias() = T.transpose() * Ap * T;
  em.B.noalias() = Psi.transpose() * piola_divergence(ref, g) * T;
  return em;
}

ElementMatrices element_matrices_quadrature(const ReferenceElement& ref, const ElementGeometry& g, const Material& mat,
                                            const Eigen::MatrixXd& T, const Eigen::MatrixXd& Psi, int degree) {
  const QuadratureRule& q = simplex_rule(3, degree);
  const Eigen::Matrix3d B = to_eigen(g.B);
  const int np = ref.nmono_disp;
  Eigen::MatrixXd Ap = Eigen::MatrixXd::Zero(ref.nloc, ref.nloc);
  Eigen::MatrixXd Bp = Eigen::MatrixXd::Zero(3 * np, ref.nloc);
  Eigen::MatrixXd Phi(9, ref.nloc), APhi(9, ref.nloc);
  for (int p = 0; p < q.size(); ++p) {
    const Vec3d xh = tet_bary_to_ref(q.bary[p]);
    const double w = q.weight[p] * g.volume;
    const Eigen::VectorXd mv = monomial_values(ref.stress_monos, xh);
    const Eigen::VectorXd dv = monomial_values(ref.div_monos, xh);
    const Eigen::VectorXd uv = monomial_values(ref.disp_monos, xh);
    std::array<Eigen::VectorXd, 6> c;
    for (int a = 0; a < 6; ++a) c[a] = ref.coef[a].transpose() * mv;
    std::array<Eigen::VectorXd, 3> dvec;
    for (int k = 0; k < 3; ++k) dvec[k] = ref.div_coef[k].transpose() * dv;
    for (int j = 0; j < ref.nloc; ++j) {
      Eigen::Matrix3d S;
      for (int a = 0; a < 6; ++a) {
        S(kSymPairs[a][0], kSymPairs[a][1]) = c[a](j);
        S(kSymPairs[a][1], kSymPairs[a][0]) = c[a](j);
      }
      Mat3d P = from_eigen(B * S * B.transpose());
      Mat3d AP = mat.compliance(P);
      for (int r = 0; r < 9; ++r) {
        Phi(r, j) = P[r / 3][r % 3];
        APhi(r, j) = AP[r / 3][r % 3];
      }
      const Eigen::Vector3d dj = B * Eigen::Vector3d(dvec[0](j), dvec[1](j), dvec[2](j));
      for (int d = 0; d < 3; ++d) Bp.col(j).segment(d * np, np) += (w * dj(d)) * uv;
    }
    Ap.noalias() += w * Phi.transpose() * APhi;
  }
  ElementMatrices em;
  Eigen::MatrixXd As = (Ap + Ap.transpose()) / 2;
  em.A.noalias() = T.transpose() * As * T;
  em.B.noalias() = Psi.transpose() * Bp * T;
  return em;
}

Mat3d stress_value(const ReferenceElement& ref, const ElementGeometry& g, const Eigen::VectorXd& pc, const Vec3d& xhat) {
  const Eigen::VectorXd mv = monomial_values(ref.stress_monos, xhat);
  Eigen::Matrix3d S;
  for (int a = 0; a < 6; ++a) {
    double v = mv.dot(ref.coef[a] * pc);
    S(kSymPairs[a][0], kSymPairs[a][1]) = v;
    S(kSymPairs[a][1], kSymPairs[a][0]) = v;
  }
  const Eigen::Matrix3d B = to_eigen(g.B);
  return from_eigen(B * S * B.transpose());
}

Vec3d stress_divergence(const ReferenceElement& ref, const ElementGeometry& g, const Eigen::VectorXd& pc,
                        const Vec3d& xhat) {
  const Eigen::VectorXd dv = monomial_values(ref.div_monos, xhat);
  Eigen::Vector3d d;
  for (int c = 0; c < 3; ++c) d(c) = dv.dot(ref.div_coef[c] * pc);
  Eigen::Vector3d r = to_eigen(g.B) * d;
  return {r(0), r(1), r(2)};
}

// ---- manufactured solutions ------------------------------------------------------

namespace {

double eval_d(const ScalarPoly& p, const Vec3d& x) {
  double s = 0;
  for (const auto& [k, c] : p.terms()) s += c.get_d() * mono_value(k, x);
  return s;
}

Mat3d eval_mat(const ExactPoly& p, const Vec3d& x) {
  Mat3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = eval_d(p(i, j), x);
  return r;
}

Vec3d eval_vec(const ExactPoly& p, const Vec3d& x) { return {eval_d(p[0], x), eval_d(p[1], x), eval_d(p[2], x)}; }

}  // namespace

std::vector<std::string> manufactured_ids() { return {"zero", "patch", "trig"}; }

ExactSolution manufactured_solution(const std::string& id, const Material& mat) {
  mat.validate();
  ExactSolution ex;
  ex.id = id;
  if (id == "zero") {
    ex.description = "S = 0, u = 0";
    ex.S = [](const Vec3d&) { return Mat3d{}; };
    ex.divS = [](const Vec3d&) { return Vec3d{}; };
    ex.u = ex.divS;
    ex.data.f = ex.divS;
    ex.data.f_degree = 0;
    return ex;
  }
  if (id == "patch") {
    ex.description = "quadratic S, linear u, prestrain G = A S - eps(u)";
    ScalarPoly x = ScalarPoly::coordinate(0), y = ScalarPoly::coordinate(1), z = ScalarPoly::coordinate(2);
    ScalarPoly one(rat(1));
    std::vector<ScalarPoly> c(9);
    c[0] = one + x * x + Rational(1, 2) * y * z;
    c[1] = c[3] = Rational(1, 3) * x * y - z;
    c[2] = c[6] = z * z - Rational(1, 2) * x + one;
    c[4] = Rational(2) * one + y * y - x * z;
    c[5] = c[7] = y * z + Rational(1, 4) * x * x;
    c[8] = Rational(3) * one + x * y + Rational(1, 2) * z * z;
    auto S = std::make_shared<ExactPoly>(Shape::sym3, c);
    auto divS = std::make_shared<ExactPoly>(op::div(*S));
    auto u = std::make_shared<ExactPoly>(ExactPoly::vector(Rational(1, 10) * one + x - Rational(1, 2) * y,
                                                           Rational(-1, 5) * one + Rational(1, 3) * x + z,
                                                           Rational(1, 2) * y + Rational(2) * z));
    auto epsu = std::make_shared<ExactPoly>(op::eps(*u));
    ex.S = [S](const Vec3d& p) { return eval_mat(*S, p); };
    ex.divS = [divS](const Vec3d& p) { return eval_vec(*divS, p); };
    ex.u = [u](const Vec3d& p) { return eval_vec(*u, p); };
    ex.data.f = ex.divS;
    ex.data.f_degree = 1;
    ex.data.g = ex.u;
    ex.data.g_degree = 1;
    ex.data.G = [S, epsu, mat](const Vec3d& p) {
      Mat3d a = mat.compliance(eval_mat(*S, p)), e = eval_mat(*epsu, p);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a[i][j] -= e[i][j];
      return a;
    };
    ex.data.G_degree = 2;
    return ex;
  }
  if (id == "trig") {
    ex.description = "u = grad(sin(pi x) sin(pi y) sin(pi z)), S = A^-1 eps(u)";
    const double pi = M_PI;
    auto grad = [pi](const Vec3d& p) {
      double sx = std::sin(pi * p[0]), sy = std::sin(pi * p[1]), sz = std::sin(pi * p[2]);
      double cx = std::cos(pi * p[0]), cy = std::cos(pi * p[1]), cz = std::cos(pi * p[2]);
      return Vec3d{pi * cx * sy * sz, pi * sx * cy * sz, pi * sx * sy * cz};
    };
    auto hess = [pi](const Vec3d& p) {
      double s[3], c[3];
      for (int i = 0; i < 3; ++i) {
        s[i] = std::sin(pi * p[i]);
        c[i] = std::cos(pi * p[i]);
      }
      Mat3d H;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          if (i == j) {
            H[i][i] = -pi * pi * s[0] * s[1] * s[2];
          } else {
            int k = 3 - i - j;
            H[i][j] = pi * pi * c[i] * c[j] * s[k];
          }
        }
      return H;
    };
    ex.u = grad;
    ex.S = [hess, mat](const Vec3d& p) { return mat.elasticity(hess(p)); };
    // div S = (2 mu + lambda) grad(laplace psi) = -3 pi^2 (2 mu + lambda) grad psi
    ex.divS = [grad, mat, pi](const Vec3d& p) {
      Vec3d g = grad(p);
      for (auto& v : g) v *= -3 * pi * pi * (2 * mat.mu + mat.lambda);
      return g;
    };
    ex.data.f = ex.divS;
    ex.data.g = ex.u;
    return ex;
  }
  throw std::invalid_argument("unknown manufactured solution '" + id + "'");
}

// ---- assembly --------------------------------------------------------------------

namespace {

ElementLoad element_load(const ReferenceElement& ref, const MeshTopology& m, int t, const ElementGeometry& g,
                         const Eigen::MatrixXd& T, const Eigen::MatrixXd& Psi, const ProblemData& data, int degree) {
  const int np = ref.nmono_disp;
  const Eigen::Matrix3d B = to_eigen(g.B), Bt = B.transpose();
  Eigen::VectorXd fu = Eigen::VectorXd::Zero(3 * np);
  Eigen::VectorXd rs = Eigen::VectorXd::Zero(ref.nloc);
  const QuadratureRule& q = simplex_rule(3, degree);
  std::array<Eigen::VectorXd, 6> z;
  for (auto& v : z) v = Eigen::VectorXd::Zero(static_cast<int>(ref.stress_monos.size()));
  bool any_stress = false;
  for (int p = 0; p < q.size(); ++p) {
    const Vec3d xh = tet_bary_to_ref(q.bary[p]);
    const Vec3d x = map_point(g, xh);
    const double w = q.weight[p] * g.volume;
    if (data.f) {
      const Vec3d f = data.f(x);
      const Eigen::VectorXd uv = monomial_values(ref.disp_monos, xh);
      for (int d = 0; d < 3; ++d) fu.segment(d * np, np) += (w * f[d]) * uv;
    }
    if (data.G) {
      const Eigen::Matrix3d Y = Bt * to_eigen(data.G(x)) * B;
      const auto wa = sym_weights(Y);
      const Eigen::VectorXd mv = monomial_values(ref.stress_monos, xh);
      for (int a = 0; a < 6; ++a) z[a] += (w * wa[a]) * mv;
      any_stress = true;
    }
  }
  if (data.g) {
    for (int f = 0; f < 4; ++f) {
      if (!m.boundary_face(m.tet_faces[t][f])) continue;
      // boundary faces belong to their only tet, so the global normal is outward here
      const Eigen::Vector3d n = to_eigen(g.face_normal[f]);
      const QuadratureRule& q2 = simplex_rule(2, degree);
      for (int p = 0; p < q2.size(); ++p) {
        const Vec3d xh = bary_to_ref(q2.bary[p], kFaceVerts[f]);
        const Vec3d x = map_point(g, xh);
        // int_f (Phi n_unit).g = |n_raw| / 2 * mean(...) = mean((Phi n_raw).g) / 2
        const double w = q2.weight[p] / 2;
        const Eigen::Matrix3d X = (Bt * to_eigen(data.g(x))) * (Bt * n).transpose();
        const auto wa = sym_weights(X);
        const Eigen::VectorXd mv = monomial_values(ref.stress_monos, xh);
        for (int a = 0; a < 6; ++a) z[a] += (w * wa[a]) * mv;
        any_stress = true;
      }
    }
  }
  if (any_stress)
    for (int a = 0; a < 6; ++a) rs += ref.coef[a].transpose() * z[a];
  ElementLoad L;
  L.stress = T.transpose() * rs;
  L.disp = Psi.transpose() * fu;
  return L;
}

void check_degrees(const ReferenceElement& ref, const ProblemData& d, int degree) {
  auto need = [&](int data_deg, int basis_deg, const char* what) {
    if (data_deg >= 0 && degree < data_deg + basis_deg)
      throw std::invalid_argument(std::string("assemble: quadrature degree ") + std::to_string(degree) +
                                  " is below the polynomial degree " + std::to_string(data_deg + basis_deg) + " of the " +
                                  what + " integrand");
  };
  need(d.f_degree, ref.disp_degree, "load");
  need(d.G_degree, ref.space_degree, "prestrain");
  need(d.g_degree, ref.space_degree, "boundary");
}

}  // namespace

Eigen::SparseMatrix<double> saddle_pattern(const MeshTopology& m, const GlobalDofMap& map) {
  // column J couples with every index of every tet containing J
  const int nt = m.num_tets();
  const int nd = map.per_tet_disp;
  const int n = map.size();
  std::vector<std::vector<int>> tets_of(map.n_stress);
  for (int t = 0; t < nt; ++t)
    for (int i : map.stress_l2g[t]) tets_of[i].push_back(t);
  std::vector<int> outer(n + 1, 0);
  std::vector<int> inner;
  std::vector<int> rows;
  for (int J = 0; J < n; ++J) {
    rows.clear();
    if (J < map.n_stress) {
      for (int t : tets_of[J]) {
        rows.insert(rows.end(), map.stress_l2g[t].begin(), map.stress_l2g[t].end());
        for (int a = 0; a < nd; ++a) rows.push_back(map.disp_offset[t] + a);
      }
    } else {
      rows = map.stress_l2g[(J - map.n_stress) / nd];
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    inner.insert(inner.end(), rows.begin(), rows.end());
    outer[J + 1] = static_cast<int>(inner.size());
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.resizeNonZeros(static_cast<Eigen::Index>(inner.size()));
  std::copy(outer.begin(), outer.end(), K.outerIndexPtr());
  std::copy(inner.begin(), inner.end(), K.innerIndexPtr());
  std::fill(K.valuePtr(), K.valuePtr() + inner.size(), 0.0);
  return K;
}

FactorEstimate estimate_factorization(const Eigen::SparseMatrix<double>& K) {
  double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
  umfpack_di_defaults(control);
  void* symbolic = nullptr;
  const int n = static_cast<int>(K.rows());
  int status = umfpack_di_symbolic(n, n, K.outerIndexPtr(), K.innerIndexPtr(), nullptr, &symbolic, control, info);
  if (symbolic) umfpack_di_free_symbolic(&symbolic);
  if (status != UMFPACK_OK) throw std::runtime_error("estimate_factorization: symbolic analysis failed");
  FactorEstimate e;
  e.peak_bytes = info[UMFPACK_PEAK_MEMORY_ESTIMATE] * info[UMFPACK_SIZE_OF_UNIT];
  e.factor_bytes = info[UMFPACK_NUMERIC_SIZE_ESTIMATE] * info[UMFPACK_SIZE_OF_UNIT];
  e.flops = info[UMFPACK_FLOPS_ESTIMATE];
  e.matrix_bytes = static_cast<double>(K.nonZeros()) * (sizeof(double) + sizeof(int)) + (n + 1.0) * sizeof(int);
  return e;
}

SaddleSystem assemble(const MeshTopology& m, const StressElementSpec& spec, const Material& mat,
                      const ProblemData& data, const AssemblyOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  mat.validate();
  const ReferenceElement& ref = reference_element(spec);
  SaddleSystem sys;
  sys.spec = spec;
  sys.material = mat;
  sys.map = build_dof_map(m, spec);
  sys.quad_degree = opt.quad_degree >= 0 ? opt.quad_degree : 2 * spec.k + 8;
  check_degrees(ref, data, sys.quad_degree);
  const int nt = m.num_tets();
  const auto& map = sys.map;
  const int nd = map.per_tet_disp;
  const int n = map.size();

  sys.geoms.resize(nt);
  sys.transforms.resize(nt);
  sys.disp_bases.resize(nt);
  std::vector<double> conds(nt, 1.0);
#pragma omp parallel for schedule(static) if (opt.parallel)
  for (int t = 0; t < nt; ++t) {
    sys.geoms[t] = element_geometry(m, t);
    sys.transforms[t] = dof_transform(ref, sys.geoms[t], &conds[t]);
    sys.disp_bases[t] = displacement_basis(ref, sys.geoms[t]);
  }
  sys.max_block_condition = *std::max_element(conds.begin(), conds.end());

  sys.K = saddle_pattern(m, map);

  auto add = [&](int I, int J, double v) {
    const int* b = sys.K.innerIndexPtr() + sys.K.outerIndexPtr()[J];
    const int* e = sys.K.innerIndexPtr() + sys.K.outerIndexPtr()[J + 1];
    const int* p = std::lower_bound(b, e, I);
    sys.K.valuePtr()[p - sys.K.innerIndexPtr()] += v;
  };

  sys.rhs = Eigen::VectorXd::Zero(n);
  const int chunk = std::max(1, opt.chunk);
  std::vector<ElementMatrices> em(chunk);
  std::vector<ElementLoad> el(chunk);
  for (int t0c = 0; t0c < nt; t0c += chunk) {
    const int t1c = std::min(nt, t0c + chunk);
#pragma omp parallel for schedule(dynamic) if (opt.parallel)
    for (int t = t0c; t < t1c; ++t) {
      const auto& g = sys.geoms[t];
      em[t - t0c] = opt.quadrature_kernel
                        ? element_matrices_quadrature(ref, g, mat, sys.transforms[t], sys.disp_bases[t], sys.quad_degree)
                        : element_matrices(ref, g, mat, sys.transforms[t], sys.disp_bases[t]);
      el[t - t0c] = element_load(ref, m, t, g, sys.transforms[t], sys.disp_bases[t], data, sys.quad_degree);
    }
    // ordered accumulation keeps the sums bit-reproducible
    for (int t = t0c; t < t1c; ++t) {
      const auto& E = em[t - t0c];
      const auto& l2g = map.stress_l2g[t];
      const int off = map.disp_offset[t];
      for (int j = 0; j < ref.nloc; ++j) {
        for (int i = 0; i < ref.nloc; ++i) add(l2g[i], l2g[j], E.A(i, j));
        for (int a = 0; a < nd; ++a) {
          add(off + a, l2g[j], E.B(a, j));
          add(l2g[j], off + a, E.B(a, j));
        }
      }
      for (int i = 0; i < ref.nloc; ++i) sys.rhs(l2g[i]) += el[t - t0c].stress(i);
      for (int a = 0; a < nd; ++a) sys.rhs(off + a) += el[t - t0c].disp(a);
    }
  }
  sys.seconds = since(t0);
  return sys;
}

std::vector<ElementLoad> element_loads(const MeshTopology& m, const SaddleSystem& sys, const ProblemData& data,
                                       bool parallel) {
  const ReferenceElement& ref = reference_element(sys.spec);
  check_degrees(ref, data, sys.quad_degree);
  const int nt = m.num_tets();
  std::vector<ElementLoad> out(nt);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int t = 0; t < nt; ++t)
    out[t] = element_load(ref, m, t, sys.geoms[t], sys.transforms[t], sys.disp_bases[t], data, sys.quad_degree);
  return out;
}

Solution solve(const SaddleSystem& sys) {
  auto t0 = std::chrono::steady_clock::now();
  Solution s;
  s.n = static_cast<int>(sys.K.rows());
  s.nnz = sys.K.nonZeros();
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(sys.K);
  if (lu.info() != Eigen::Success) {
    const int code = lu.umfpackFactorizeReturncode();
    throw std::runtime_error(code == UMFPACK_ERROR_out_of_memory
                                 ? "solve: sparse LU ran out of memory (n = " + std::to_string(s.n) + ")"
                                 : "solve: sparse LU factorization failed, UMFPACK status " + std::to_string(code));
  }
  s.x = lu.solve(sys.rhs);
  if (lu.info() != Eigen::Success) throw std::runtime_error("solve: sparse LU solve failed");
  const double rn = sys.rhs.norm();
  const double res = (sys.K * s.x - sys.rhs).norm();
  s.residual = rn > 0 ? res / rn : res;
  s.seconds = since(t0);
  return s;
}

Eigen::VectorXd local_piola_coeffs(const SaddleSystem& sys, const Eigen::VectorXd& x, int t) {
  const auto& l2g = sys.map.stress_l2g[t];
  Eigen::VectorXd c(static_cast<int>(l2g.size()));
  for (std::size_t i = 0; i < l2g.size(); ++i) c(static_cast<int>(i)) = x(l2g[i]);
  return sys.transforms[t] * c;
}

Eigen::VectorXd local_disp_coeffs(const SaddleSystem& sys, const Eigen::VectorXd& x, int t) {
  return sys.disp_bases[t] * x.segment(sys.map.disp_offset[t], sys.map.per_tet_disp);
}

ErrorNorms error_norms(const MeshTopology& m, const SaddleSystem& sys, const Solution& sol, const ExactSolution& ex,
                       int quad_degree, bool parallel) {
  const ReferenceElement& ref = reference_element(sys.spec);
  const int degree = quad_degree >= 0 ? quad_degree : sys.quad_degree;
  const QuadratureRule& q = simplex_rule(3, degree);
  const int nt = m.num_tets();
  const int np = ref.nmono_disp;
  std::vector<std::array<double, 3>> part(nt);
#pragma omp parallel for schedule(static) if (parallel)
  for (int t = 0; t < nt; ++t) {
    const auto& g = sys.geoms[t];
    const Eigen::VectorXd pc = local_piola_coeffs(sys, sol.x, t);
    const Eigen::VectorXd uc = local_disp_coeffs(sys, sol.x, t);
    std::array<double, 3> acc{};
    for (int p = 0; p < q.size(); ++p) {
      const Vec3d xh = tet_bary_to_ref(q.bary[p]);
      const Vec3d x = map_point(g, xh);
      const double w = q.weight[p] * g.volume;
      const Mat3d Sh = stress_value(ref, g, pc, xh), Se = ex.S(x);
      const Vec3d dh = stress_divergence(ref, g, pc, xh), de = ex.divS(x);
      const Eigen::VectorXd uv = monomial_values(ref.disp_monos, xh);
      const Vec3d ue = ex.u(x);
      double es = 0, eu = 0, ed = 0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) es += (Sh[i][j] - Se[i][j]) * (Sh[i][j] - Se[i][j]);
        const double uh = uv.dot(uc.segment(i * np, np));
        eu += (uh - ue[i]) * (uh - ue[i]);
        ed += (dh[i] - de[i]) * (dh[i] - de[i]);
      }
      acc[0] += w * es;
      acc[1] += w * eu;
      acc[2] += w * ed;
    }
    part[t] = acc;
  }
  std::array<double, 3> tot{};
  for (const auto& a : part)
    for (int i = 0; i < 3; ++i) tot[i] += a[i];
  return {std::sqrt(tot[0]), std::sqrt(tot[1]), std::sqrt(tot[2])};
}

}  // namespace tetstress
