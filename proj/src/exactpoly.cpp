#include "tetstress/exactpoly.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>

namespace tetstress {

namespace {

constexpr MonoKey unit_key(int axis) { return MonoKey{1} << (10 * (2 - axis)); }

Rational factorial(int n) {
  Integer f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return Rational(f);
}

}  // namespace

std::vector<MonoKey> monomials_of_degree(int d) {
  std::vector<MonoKey> out;
  if (d < 0) return out;
  for (int a = d; a >= 0; --a)
    for (int b = d - a; b >= 0; --b) out.push_back(mono_key(a, b, d - a - b));
  return out;
}

std::vector<MonoKey> monomials_upto(int d) {
  std::vector<MonoKey> out;
  for (int e = 0; e <= d; ++e) {
    auto m = monomials_of_degree(e);
    out.insert(out.end(), m.begin(), m.end());
  }
  return out;
}

// ---- ScalarPoly --------------------------------------------------------------------

ScalarPoly::ScalarPoly(const Rational& c) {
  if (sgn(c) != 0) terms_.emplace(0u, c);
}

ScalarPoly ScalarPoly::monomial(int a, int b, int c, const Rational& coeff) {
  ScalarPoly p;
  p.add_term(mono_key(a, b, c), coeff);
  return p;
}

ScalarPoly ScalarPoly::coordinate(int axis) {
  ScalarPoly p;
  p.add_term(unit_key(axis), 1);
  return p;
}

ScalarPoly ScalarPoly::affine(const Rational& a0, const Vec3Q& a) {
  ScalarPoly p(a0);
  for (int i = 0; i < 3; ++i) p.add_term(unit_key(i), a[i]);
  return p;
}

int ScalarPoly::degree() const {
  int d = -1;
  for (const auto& [k, c] : terms_) d = std::max(d, mono_deg(k));
  return d;
}

Rational ScalarPoly::coeff(MonoKey k) const {
  auto it = terms_.find(k);
  return it == terms_.end() ? Rational(0) : it->second;
}

void ScalarPoly::add_term(MonoKey k, const Rational& c) {
  if (sgn(c) == 0) return;
  auto [it, inserted] = terms_.emplace(k, c);
  if (!inserted) {
    it->second += c;
    if (sgn(it->second) == 0) terms_.erase(it);
  }
}

ScalarPoly& ScalarPoly::operator+=(const ScalarPoly& o) {
  for (const auto& [k, c] : o.terms_) add_term(k, c);
  return *this;
}

ScalarPoly& ScalarPoly::operator-=(const ScalarPoly& o) {
  for (const auto& [k, c] : o.terms_) add_term(k, -c);
  return *this;
}

ScalarPoly& ScalarPoly::operator*=(const Rational& s) {
  if (sgn(s) == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [k, c] : terms_) c *= s;
  return *this;
}

void ScalarPoly::axpy(const Rational& s, const ScalarPoly& o) {
  if (sgn(s) == 0) return;
  for (const auto& [k, c] : o.terms_) add_term(k, s * c);
}

ScalarPoly ScalarPoly::derivative(int axis) const {
  ScalarPoly r;
  const MonoKey u = unit_key(axis);
  for (const auto& [k, c] : terms_) {
    int e = mono_exp(k, axis);
    if (e > 0) r.terms_.emplace_hint(r.terms_.end(), k - u, c * e);
  }
  return r;
}

ScalarPoly ScalarPoly::directional(const Vec3Q& d) const {
  ScalarPoly r;
  for (int i = 0; i < 3; ++i)
    if (sgn(d[i]) != 0) r.axpy(d[i], derivative(i));
  return r;
}

Rational ScalarPoly::eval(const Vec3Q& x) const {
  int d = std::max(degree(), 0);
  std::array<std::vector<Rational>, 3> pw;
  for (int i = 0; i < 3; ++i) {
    pw[i].resize(d + 1);
    pw[i][0] = 1;
    for (int e = 1; e <= d; ++e) pw[i][e] = pw[i][e - 1] * x[i];
  }
  Rational s = 0;
  for (const auto& [k, c] : terms_)
    s += c * pw[0][mono_exp(k, 0)] * pw[1][mono_exp(k, 1)] * pw[2][mono_exp(k, 2)];
  return s;
}

ScalarPoly ScalarPoly::compose_affine(const Mat3Q& m, const Vec3Q& c) const {
  int d = std::max(degree(), 0);
  std::array<std::vector<ScalarPoly>, 3> pw;
  for (int i = 0; i < 3; ++i) {
    ScalarPoly l = ScalarPoly::affine(c[i], m[i]);
    pw[i].resize(d + 1);
    pw[i][0] = ScalarPoly(Rational(1));
    for (int e = 1; e <= d; ++e) pw[i][e] = pw[i][e - 1] * l;
  }
  ScalarPoly r;
  for (const auto& [k, cf] : terms_)
    r.axpy(cf, pw[0][mono_exp(k, 0)] * pw[1][mono_exp(k, 1)] * pw[2][mono_exp(k, 2)]);
  return r;
}

ScalarPoly ScalarPoly::homogeneous_part(int d) const {
  ScalarPoly r;
  for (const auto& [k, c] : terms_)
    if (mono_deg(k) == d) r.terms_.emplace_hint(r.terms_.end(), k, c);
  return r;
}

ScalarPoly operator+(ScalarPoly a, const ScalarPoly& b) { return a += b; }
ScalarPoly operator-(ScalarPoly a, const ScalarPoly& b) { return a -= b; }
ScalarPoly operator-(ScalarPoly a) { return a *= Rational(-1); }
ScalarPoly operator*(const Rational& s, ScalarPoly a) { return a *= s; }

ScalarPoly operator*(const ScalarPoly& a, const ScalarPoly& b) {
  ScalarPoly r;
  for (const auto& [ka, ca] : a.terms())
    for (const auto& [kb, cb] : b.terms()) r.add_term(ka + kb, ca * cb);
  return r;
}

ScalarPoly pow(const ScalarPoly& a, int e) {
  ScalarPoly r(Rational(1));
  for (int i = 0; i < e; ++i) r = r * a;
  return r;
}

// ---- ExactPoly ---------------------------------------------------------------------

const char* shape_name(Shape s) {
  switch (s) {
    case Shape::scalar: return "scalar";
    case Shape::vec3: return "vec3";
    case Shape::mat3: return "mat3";
    case Shape::sym3: return "sym3";
    case Shape::skew3: return "skew3";
  }
  return "?";
}

int shape_components(Shape s) {
  switch (s) {
    case Shape::scalar: return 1;
    case Shape::vec3: return 3;
    default: return 9;
  }
}

bool is_matrix(Shape s) { return s == Shape::mat3 || s == Shape::sym3 || s == Shape::skew3; }

ExactPoly::ExactPoly(Shape shape) : shape_(shape), comp_(shape_components(shape)) {}

ExactPoly::ExactPoly(Shape shape, std::vector<ScalarPoly> comps)
    : shape_(shape), comp_(std::move(comps)) {
  if (static_cast<int>(comp_.size()) != shape_components(shape))
    throw ShapeError(std::string("ExactPoly: wrong component count for ") + shape_name(shape));
  validate();
  degree_bound_ = std::max(degree(), 0);
}

void ExactPoly::validate() const {
  if (shape_ == Shape::sym3) {
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        if (!(comp_[3 * i + j] == comp_[3 * j + i]))
          throw ShapeError("ExactPoly: sym3 field is not symmetric");
  } else if (shape_ == Shape::skew3) {
    for (int i = 0; i < 3; ++i) {
      if (!comp_[4 * i].is_zero()) throw ShapeError("ExactPoly: skew3 field has nonzero diagonal");
      for (int j = i + 1; j < 3; ++j)
        if (!(comp_[3 * i + j] == -comp_[3 * j + i]))
          throw ShapeError("ExactPoly: skew3 field is not antisymmetric");
    }
  }
}

ExactPoly ExactPoly::scalar(ScalarPoly p) { return ExactPoly(Shape::scalar, {std::move(p)}); }

ExactPoly ExactPoly::vector(ScalarPoly p0, ScalarPoly p1, ScalarPoly p2) {
  return ExactPoly(Shape::vec3, {std::move(p0), std::move(p1), std::move(p2)});
}

ExactPoly ExactPoly::constant_vector(const Vec3Q& v) {
  return vector(ScalarPoly(v[0]), ScalarPoly(v[1]), ScalarPoly(v[2]));
}

ExactPoly ExactPoly::constant_matrix(const Mat3Q& m, Shape shape) {
  std::vector<ScalarPoly> c(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[3 * i + j] = ScalarPoly(m[i][j]);
  return ExactPoly(shape, std::move(c));
}

ExactPoly ExactPoly::sym_unit(int i, int j, const ScalarPoly& p) {
  std::vector<ScalarPoly> c(9);
  c[3 * i + j] = p;
  c[3 * j + i] = p;
  return ExactPoly(Shape::sym3, std::move(c));
}

int ExactPoly::degree() const {
  int d = -1;
  for (const auto& c : comp_) d = std::max(d, c.degree());
  return d;
}

bool ExactPoly::is_zero() const {
  return std::all_of(comp_.begin(), comp_.end(), [](const ScalarPoly& c) { return c.is_zero(); });
}

ExactPoly ExactPoly::as(Shape s) const {
  if (shape_components(s) != ncomp())
    throw ShapeError(std::string("cannot view ") + shape_name(shape_) + " as " + shape_name(s));
  ExactPoly r = *this;
  r.shape_ = s;
  r.validate();
  return r;
}

namespace {
Shape sum_shape(Shape a, Shape b) {
  if (a == b) return a;
  if (is_matrix(a) && is_matrix(b)) return Shape::mat3;
  throw ShapeError(std::string("shape mismatch: ") + shape_name(a) + " and " + shape_name(b));
}
}  // namespace

ExactPoly& ExactPoly::operator+=(const ExactPoly& o) {
  shape_ = sum_shape(shape_, o.shape_);
  for (int i = 0; i < ncomp(); ++i) comp_[i] += o.comp_[i];
  degree_bound_ = std::max(degree_bound_, o.degree_bound_);
  return *this;
}

ExactPoly& ExactPoly::operator-=(const ExactPoly& o) {
  shape_ = sum_shape(shape_, o.shape_);
  for (int i = 0; i < ncomp(); ++i) comp_[i] -= o.comp_[i];
  degree_bound_ = std::max(degree_bound_, o.degree_bound_);
  return *this;
}

ExactPoly& ExactPoly::operator*=(const Rational& s) {
  for (auto& c : comp_) c *= s;
  return *this;
}

bool operator==(const ExactPoly& a, const ExactPoly& b) {
  if (a.ncomp() != b.ncomp()) return false;
  for (int i = 0; i < a.ncomp(); ++i)
    if (!(a.comp_[i] == b.comp_[i])) return false;
  return true;
}

std::string ExactPoly::dump() const {
  std::ostringstream os;
  for (int i = 0; i < ncomp(); ++i) {
    if (shape_ == Shape::sym3 && i / 3 > i % 3) continue;
    if (shape_ == Shape::skew3 && i / 3 >= i % 3) continue;
    std::string label;
    if (shape_ == Shape::vec3) label = "[" + std::to_string(i) + "] ";
    if (is_matrix(shape_)) label = "[" + std::to_string(i / 3) + "," + std::to_string(i % 3) + "] ";
    for (const auto& [k, c] : comp_[i].terms())
      os << label << c.get_str() << " · x1^" << mono_exp(k, 0) << " x2^" << mono_exp(k, 1)
         << " x3^" << mono_exp(k, 2) << "\n";
  }
  return os.str();
}

ExactPoly operator+(ExactPoly a, const ExactPoly& b) { return a += b; }
ExactPoly operator-(ExactPoly a, const ExactPoly& b) { return a -= b; }
ExactPoly operator-(ExactPoly a) { return a *= Rational(-1); }
ExactPoly operator*(const Rational& s, ExactPoly a) { return a *= s; }

ExactPoly operator*(const ScalarPoly& s, const ExactPoly& a) {
  std::vector<ScalarPoly> c(a.ncomp());
  for (int i = 0; i < a.ncomp(); ++i) c[i] = s * a[i];
  return ExactPoly(a.shape(), std::move(c));
}

ExactPoly operator*(const ExactPoly& a, const ExactPoly& b) {
  if (a.shape() == Shape::scalar) return a[0] * b;
  if (b.shape() == Shape::scalar) return b[0] * a;
  if (is_matrix(a.shape()) && b.shape() == Shape::vec3) {
    std::vector<ScalarPoly> c(3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) c[i] += a(i, j) * b[j];
    return ExactPoly(Shape::vec3, std::move(c));
  }
  if (is_matrix(a.shape()) && is_matrix(b.shape())) {
    std::vector<ScalarPoly> c(9);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) c[3 * i + j] += a(i, k) * b(k, j);
    return ExactPoly(Shape::mat3, std::move(c));
  }
  throw ShapeError(std::string("mul: incompatible shapes ") + shape_name(a.shape()) + " and " +
                   shape_name(b.shape()));
}

ExactPoly poly_arith(PolyOp op, const ExactPoly& p, const ExactPoly& q) {
  switch (op) {
    case PolyOp::add: return p + q;
    case PolyOp::sub: return p - q;
    case PolyOp::mul: return p * q;
    case PolyOp::scale:
      if (q.shape() != Shape::scalar || q.degree() > 0)
        throw ShapeError(std::string("scale: factor must be a scalar constant, got ") +
                         shape_name(q.shape()));
      return q[0].coeff(0) * p;
  }
  return p;
}

ExactPoly poly_arith(PolyOp op, const ExactPoly& p, const Rational& q) {
  switch (op) {
    case PolyOp::scale:
    case PolyOp::mul: return q * p;
    case PolyOp::add:
    case PolyOp::sub:
      if (p.shape() != Shape::scalar)
        throw ShapeError(std::string("add: scalar constant and ") + shape_name(p.shape()));
      return op == PolyOp::add ? p + ExactPoly::scalar(ScalarPoly(q))
                               : p - ExactPoly::scalar(ScalarPoly(q));
  }
  return p;
}

ExactPoly lmul(const Mat3Q& m, const ExactPoly& p) {
  if (p.shape() == Shape::vec3) {
    std::vector<ScalarPoly> c(3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) c[i].axpy(m[i][j], p[j]);
    return ExactPoly(Shape::vec3, std::move(c));
  }
  if (!is_matrix(p.shape())) throw ShapeError(std::string("lmul: ") + shape_name(p.shape()));
  std::vector<ScalarPoly> c(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[3 * i + j].axpy(m[i][k], p(k, j));
  return ExactPoly(Shape::mat3, std::move(c));
}

ExactPoly rmul(const ExactPoly& p, const Mat3Q& m) {
  if (!is_matrix(p.shape())) throw ShapeError(std::string("rmul: ") + shape_name(p.shape()));
  std::vector<ScalarPoly> c(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[3 * i + j].axpy(m[k][j], p(i, k));
  return ExactPoly(Shape::mat3, std::move(c));
}

ExactPoly matvec(const ExactPoly& p, const Vec3Q& v) {
  if (!is_matrix(p.shape())) throw ShapeError(std::string("matvec: ") + shape_name(p.shape()));
  std::vector<ScalarPoly> c(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[i].axpy(v[j], p(i, j));
  return ExactPoly(Shape::vec3, std::move(c));
}

ExactPoly vecmat(const Vec3Q& v, const ExactPoly& p) {
  if (!is_matrix(p.shape())) throw ShapeError(std::string("vecmat: ") + shape_name(p.shape()));
  std::vector<ScalarPoly> c(3);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) c[j].axpy(v[i], p(i, j));
  return ExactPoly(Shape::vec3, std::move(c));
}

ScalarPoly contract(const ExactPoly& a, const ExactPoly& b) {
  if (a.ncomp() != b.ncomp())
    throw ShapeError(std::string("contract: ") + shape_name(a.shape()) + " with " +
                     shape_name(b.shape()));
  ScalarPoly r;
  for (int i = 0; i < a.ncomp(); ++i) r += a[i] * b[i];
  return r;
}

ScalarPoly bilinear(const Vec3Q& a, const ExactPoly& p, const Vec3Q& b) {
  if (!is_matrix(p.shape())) throw ShapeError(std::string("bilinear: ") + shape_name(p.shape()));
  ScalarPoly r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Rational w = a[i] * b[j];
      if (sgn(w) != 0) r.axpy(w, p(i, j));
    }
  return r;
}

ScalarPoly vdot(const Vec3Q& a, const ExactPoly& v) {
  if (v.shape() != Shape::vec3) throw ShapeError(std::string("vdot: ") + shape_name(v.shape()));
  ScalarPoly r;
  for (int i = 0; i < 3; ++i) r.axpy(a[i], v[i]);
  return r;
}

ExactPoly differentiate(const ExactPoly& p, int axis) {
  std::vector<ScalarPoly> c(p.ncomp());
  for (int i = 0; i < p.ncomp(); ++i) c[i] = p[i].derivative(axis);
  return ExactPoly(p.shape(), std::move(c));
}

ExactPoly differentiate(const ExactPoly& p, const Vec3Q& d) {
  std::vector<ScalarPoly> c(p.ncomp());
  for (int i = 0; i < p.ncomp(); ++i) c[i] = p[i].directional(d);
  return ExactPoly(p.shape(), std::move(c));
}

// ---- differential operators ----------------------------------------------------

namespace op {

namespace {
void require(bool ok, const char* what, Shape s) {
  if (!ok) throw ShapeError(std::string(what) + ": inadmissible shape " + shape_name(s));
}

// Paper sign: curl v = (d3 v2 - d2 v3, -d3 v1 + d1 v3, d2 v1 - d1 v2).
std::array<ScalarPoly, 3> curl3(const ScalarPoly& v0, const ScalarPoly& v1, const ScalarPoly& v2) {
  return {v1.derivative(2) - v2.derivative(1), v2.derivative(0) - v0.derivative(2),
          v0.derivative(1) - v1.derivative(0)};
}

Shape matrix_result(Shape in) { return in == Shape::skew3 || in == Shape::sym3 ? in : Shape::mat3; }
}  // namespace

ExactPoly grad(const ExactPoly& p) {
  if (p.shape() == Shape::scalar)
    return ExactPoly::vector(p[0].derivative(0), p[0].derivative(1), p[0].derivative(2));
  require(p.shape() == Shape::vec3, "grad", p.shape());
  std::vector<ScalarPoly> c(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[3 * i + j] = p[i].derivative(j);
  return ExactPoly(Shape::mat3, std::move(c));
}

ExactPoly div(const ExactPoly& p) {
  if (p.shape() == Shape::vec3) {
    ScalarPoly s = p[0].derivative(0);
    s += p[1].derivative(1);
    s += p[2].derivative(2);
    return ExactPoly::scalar(std::move(s));
  }
  require(is_matrix(p.shape()), "div", p.shape());
  std::vector<ScalarPoly> c(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[i] += p(i, j).derivative(j);
  return ExactPoly(Shape::vec3, std::move(c));
}

ExactPoly curl(const ExactPoly& p) {
  if (p.shape() == Shape::vec3) {
    auto c = curl3(p[0], p[1], p[2]);
    return ExactPoly::vector(c[0], c[1], c[2]);
  }
  require(is_matrix(p.shape()), "curl", p.shape());
  std::vector<ScalarPoly> c(9);
  for (int i = 0; i < 3; ++i) {
    auto r = curl3(p(i, 0), p(i, 1), p(i, 2));
    for (int j = 0; j < 3; ++j) c[3 * i + j] = std::move(r[j]);
  }
  return ExactPoly(Shape::mat3, std::move(c));
}

ExactPoly transpose(const ExactPoly& p) {
  require(is_matrix(p.shape()), "transpose", p.shape());
  std::vector<ScalarPoly> c(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[3 * i + j] = p(j, i);
  return ExactPoly(p.shape(), std::move(c));
}

ExactPoly curl_star(const ExactPoly& p) {
  require(is_matrix(p.shape()), "curl_star", p.shape());
  return transpose(curl(transpose(p.as(Shape::mat3))));
}

ExactPoly curlcurl_star(const ExactPoly& p) {
  require(is_matrix(p.shape()), "curlcurl_star", p.shape());
  ExactPoly r = curl(curl_star(p));
  return p.shape() == Shape::sym3 ? r.as(Shape::sym3) : r;
}

ExactPoly sym(const ExactPoly& p) {
  require(is_matrix(p.shape()), "sym", p.shape());
  std::vector<ScalarPoly> c(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      c[3 * i + j] = p(i, j) + p(j, i);
      c[3 * i + j] *= Rational(1, 2);
    }
  return ExactPoly(Shape::sym3, std::move(c));
}

ExactPoly skw(const ExactPoly& p) {
  require(is_matrix(p.shape()), "skw", p.shape());
  std::vector<ScalarPoly> c(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      c[3 * i + j] = p(i, j) - p(j, i);
      c[3 * i + j] *= Rational(1, 2);
    }
  return ExactPoly(Shape::skew3, std::move(c));
}

ExactPoly eps(const ExactPoly& p) {
  require(p.shape() == Shape::vec3, "eps", p.shape());
  return sym(grad(p));
}

ExactPoly vect(const ExactPoly& p) {
  require(p.shape() == Shape::skew3, "vect", p.shape());
  return ExactPoly::vector(p(2, 1), p(0, 2), p(1, 0));
}

ExactPoly vect_inv(const ExactPoly& p) {
  require(p.shape() == Shape::vec3, "vect_inv", p.shape());
  std::vector<ScalarPoly> c(9);
  c[1] = -p[2];
  c[2] = p[1];
  c[3] = p[2];
  c[5] = -p[0];
  c[6] = -p[1];
  c[7] = p[0];
  return ExactPoly(Shape::skew3, std::move(c));
}

ExactPoly trace(const ExactPoly& p) {
  require(is_matrix(p.shape()), "trace", p.shape());
  return ExactPoly::scalar(p(0, 0) + p(1, 1) + p(2, 2));
}

namespace {
ExactPoly xi_impl(const ExactPoly& p, const Rational& f) {
  require(is_matrix(p.shape()), "Xi", p.shape());
  ScalarPoly t = p(0, 0) + p(1, 1) + p(2, 2);
  t *= f;
  std::vector<ScalarPoly> c(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      c[3 * i + j] = p(j, i);
      if (i == j) c[3 * i + j] -= t;
    }
  return ExactPoly(matrix_result(p.shape()), std::move(c));
}
}  // namespace

ExactPoly Xi(const ExactPoly& p) { return xi_impl(p, Rational(1)); }
ExactPoly Xi_inv(const ExactPoly& p) { return xi_impl(p, Rational(1, 2)); }

ExactPoly hess(const ExactPoly& p) {
  require(p.shape() == Shape::scalar, "hess", p.shape());
  return grad(grad(p)).as(Shape::sym3);
}

}  // namespace op

ExactPoly apply_operator(DiffOp tag, const ExactPoly& p) {
  switch (tag) {
    case DiffOp::grad: return op::grad(p);
    case DiffOp::div: return op::div(p);
    case DiffOp::curl: return op::curl(p);
    case DiffOp::curl_star: return op::curl_star(p);
    case DiffOp::eps: return op::eps(p);
    case DiffOp::sym: return op::sym(p);
    case DiffOp::skw: return op::skw(p);
    case DiffOp::vect: return op::vect(p);
    case DiffOp::vect_inv: return op::vect_inv(p);
    case DiffOp::Xi: return op::Xi(p);
    case DiffOp::Xi_inv: return op::Xi_inv(p);
    case DiffOp::curlcurl_star: return op::curlcurl_star(p);
    case DiffOp::trace: return op::trace(p);
    case DiffOp::transpose: return op::transpose(p);
    case DiffOp::hess: return op::hess(p);
  }
  return p;
}

// ---- frames and tangential calculus ------------------------------------------------

FrameVector::FrameVector(const Vec3Q& v) : v_(v), norm2_(dot(v, v)) {
  if (sgn(norm2_) == 0) throw GeometryError("FrameVector: zero vector");
}

FrameVector FrameVector::negated() const { return FrameVector(Rational(-1) * v_); }

Mat3Q FrameVector::P() const { return (1 / norm2_) * outer(v_, v_); }
Mat3Q FrameVector::Q() const { return identity3() - P(); }

Mat3Q FrameVector::C() const {
  Mat3Q c = zero3();
  c[0][1] = v_[2];
  c[0][2] = -v_[1];
  c[1][0] = -v_[2];
  c[1][2] = v_[0];
  c[2][0] = v_[1];
  c[2][1] = -v_[0];
  return c;
}

namespace face {

namespace {
void require_vec_or_mat(const ExactPoly& p, const char* what) {
  if (p.shape() != Shape::vec3 && !is_matrix(p.shape()))
    throw ShapeError(std::string(what) + ": inadmissible shape " + shape_name(p.shape()));
}
}  // namespace

ExactPoly grad_f(const ExactPoly& p, const FrameVector& n) {
  if (p.shape() == Shape::scalar) return lmul(n.Q(), op::grad(p));
  return rmul(op::grad(p), n.Q());
}

ExactPoly grad_f_star(const ExactPoly& p, const FrameVector& n) {
  if (p.shape() == Shape::scalar) return lmul(n.Q(), op::grad(p));
  return lmul(n.Q(), op::transpose(op::grad(p)));
}

ExactPoly eps_f(const ExactPoly& p, const FrameVector& n) {
  Mat3Q q = n.Q();
  return rmul(lmul(q, op::eps(p)), q).as(Shape::sym3);
}

ExactPoly rot_f(const ExactPoly& p, const FrameVector& n) {
  require_vec_or_mat(p, "rot_f");
  if (p.shape() == Shape::vec3) return lmul(n.P(), op::curl(p));
  return rmul(op::curl(p), n.P());
}

ExactPoly curl_f(const ExactPoly& p, const FrameVector& n) {
  require_vec_or_mat(p, "curl_f");
  if (p.shape() == Shape::vec3) return lmul(n.Q(), op::curl(lmul(n.P(), p)));
  return rmul(op::curl(rmul(p, n.P())), n.Q());
}

ExactPoly rot_f_star(const ExactPoly& p, const FrameVector& n) {
  return lmul(n.P(), op::curl_star(p));
}

ExactPoly curl_f_star(const ExactPoly& p, const FrameVector& n) {
  return lmul(n.Q(), op::curl_star(lmul(n.P(), p)));
}

ExactPoly partial_n(const ExactPoly& p, const FrameVector& n) { return differentiate(p, n.v()); }

ExactPoly Lambda_f(const ExactPoly& p, const FrameVector& n) {
  if (p.shape() != Shape::sym3)
    throw ShapeError(std::string("Lambda_f: needs sym3, got ") + shape_name(p.shape()));
  Mat3Q q = n.Q();
  ExactPoly a = Rational(2) * eps_f(matvec(p, n.v()), n);
  ExactPoly b = rmul(lmul(q, partial_n(p, n)), q);
  return (a - b).as(Shape::sym3);
}

ExactPoly grad_f_grad_f_star(const ExactPoly& p, const FrameVector& n) {
  Mat3Q q = n.Q();
  return rmul(lmul(q, op::hess(p)), q).as(Shape::sym3);
}

}  // namespace face

ExactPoly face_calculus(FaceOp tag, const ExactPoly& p, const FrameVector& n) {
  switch (tag) {
    case FaceOp::P_n: return lmul(n.P(), p);
    case FaceOp::Q_n: return lmul(n.Q(), p);
    case FaceOp::C_n: return lmul(n.C(), p);
    case FaceOp::grad_f: return face::grad_f(p, n);
    case FaceOp::grad_f_star: return face::grad_f_star(p, n);
    case FaceOp::eps_f: return face::eps_f(p, n);
    case FaceOp::rot_f: return face::rot_f(p, n);
    case FaceOp::curl_f: return face::curl_f(p, n);
    case FaceOp::rot_f_star: return face::rot_f_star(p, n);
    case FaceOp::curl_f_star: return face::curl_f_star(p, n);
    case FaceOp::Lambda_f: return face::Lambda_f(p, n);
    case FaceOp::grad_f_grad_f_star: return face::grad_f_grad_f_star(p, n);
    case FaceOp::partial_n: return face::partial_n(p, n);
  }
  return p;
}

int face_op_degree(FaceOp tag) {
  switch (tag) {
    case FaceOp::C_n:
    case FaceOp::Lambda_f:
    case FaceOp::partial_n: return 1;
    default: return 0;
  }
}

// ---- integration -----------------------------------------------------------------

Rational simplex_measure2(const std::vector<Vec3Q>& v) {
  const int m = static_cast<int>(v.size()) - 1;
  if (m == 1) {
    Vec3Q d = v[1] - v[0];
    return dot(d, d);
  }
  if (m == 2) {
    Vec3Q c = cross(v[1] - v[0], v[2] - v[0]);
    return dot(c, c) / 4;
  }
  if (m == 3) {
    Rational d = dot(cross(v[1] - v[0], v[2] - v[0]), v[3] - v[0]) / 6;
    return d * d;
  }
  throw GeometryError("simplex must have 2, 3 or 4 vertices");
}

MomentTable::MomentTable(std::vector<Vec3Q> vertices, int max_degree)
    : vertices_(std::move(vertices)), max_degree_(max_degree) {
  const int m = dim();
  measure2_ = simplex_measure2(vertices_);
  if (sgn(measure2_) == 0) throw GeometryError("integrate_simplex: degenerate simplex");
  const int D = max_degree_;
  const int W = D + 1;

  // Dense polynomials in the m parametric coordinates y, indexed through ymons.
  std::vector<std::array<int, 3>> ymons;
  std::vector<int> ycount(D + 2, 0);
  std::vector<int> yindex(static_cast<std::size_t>(W) * W * W, -1);
  for (int d = 0; d <= D; ++d) {
    for (int a = d; a >= 0; --a)
      for (int b = d - a; b >= 0; --b) {
        int c = d - a - b;
        std::array<int, 3> e{a, b, c};
        bool ok = true;
        for (int j = m; j < 3; ++j) ok = ok && e[j] == 0;
        if (!ok) continue;
        yindex[(a * W + b) * W + c] = static_cast<int>(ymons.size());
        ymons.push_back(e);
      }
    ycount[d + 1] = static_cast<int>(ymons.size());
  }
  const int ny = static_cast<int>(ymons.size());
  std::vector<std::array<int, 3>> shift(ny);
  for (int i = 0; i < ny; ++i)
    for (int j = 0; j < 3; ++j) {
      auto e = ymons[i];
      e[j] += 1;
      shift[i][j] = (j < m && e[0] + e[1] + e[2] <= D) ? yindex[(e[0] * W + e[1]) * W + e[2]] : -1;
    }
  // Mean of y^beta over the unit m-simplex: m! beta! / (|beta| + m)!.
  std::vector<Rational> ymean(ny);
  for (int i = 0; i < ny; ++i) {
    const auto& e = ymons[i];
    ymean[i] = factorial(m) * factorial(e[0]) * factorial(e[1]) * factorial(e[2]) /
               factorial(e[0] + e[1] + e[2] + m);
  }
  // x_d = w0_d + sum_j y_j (w_j - w0)_d
  std::array<std::array<Rational, 4>, 3> aff;
  for (int d = 0; d < 3; ++d) {
    aff[d][0] = vertices_[0][d];
    for (int j = 0; j < 3; ++j) aff[d][j + 1] = j < m ? Rational(vertices_[j + 1][d] - vertices_[0][d]) : Rational(0);
  }

  table_.assign(static_cast<std::size_t>(W) * W * W, Rational(0));
  std::vector<std::vector<Rational>> stack(D + 1, std::vector<Rational>(ny));
  stack[0][0] = 1;
  // Depth-first over exponents alpha; stack[depth] holds x^alpha in y-coordinates.
  auto record = [&](const std::array<int, 3>& alpha, const std::vector<Rational>& p, int deg) {
    Rational s = 0;
    for (int i = 0; i < ycount[deg + 1]; ++i)
      if (sgn(p[i]) != 0) s += p[i] * ymean[i];
    table_[(alpha[0] * W + alpha[1]) * W + alpha[2]] = s;
  };
  std::function<void(std::array<int, 3>, int, int)> visit = [&](std::array<int, 3> alpha, int deg,
                                                                  int last) {
    record(alpha, stack[deg], deg);
    if (deg == D) return;
    for (int d = last; d < 3; ++d) {
      auto& src = stack[deg];
      auto& dst = stack[deg + 1];
      for (int i = 0; i < ycount[deg + 2]; ++i) dst[i] = 0;
      for (int i = 0; i < ycount[deg + 1]; ++i) {
        if (sgn(src[i]) == 0) continue;
        if (sgn(aff[d][0]) != 0) dst[i] += aff[d][0] * src[i];
        for (int j = 0; j < m; ++j)
          if (sgn(aff[d][j + 1]) != 0) dst[shift[i][j]] += aff[d][j + 1] * src[i];
      }
      auto child = alpha;
      child[d] += 1;
      visit(child, deg + 1, d);
    }
  };
  visit({0, 0, 0}, 0, 0);
}

std::size_t MomentTable::slot(MonoKey k) const {
  const int W = max_degree_ + 1;
  if (mono_deg(k) > max_degree_) throw std::out_of_range("MomentTable: degree exceeds table");
  return static_cast<std::size_t>((mono_exp(k, 0) * W + mono_exp(k, 1)) * W + mono_exp(k, 2));
}

const Rational& MomentTable::mean(MonoKey k) const { return table_[slot(k)]; }

Rational MomentTable::mean(const ScalarPoly& p) const {
  Rational s = 0;
  for (const auto& [k, c] : p.terms()) s += c * table_[slot(k)];
  return s;
}

const MomentTable& moment_table(const std::vector<Vec3Q>& vertices, int min_degree) {
  static std::mutex mu;
  static std::map<std::string, std::vector<std::unique_ptr<MomentTable>>> cache;
  std::string key;
  for (const auto& v : vertices)
    for (const auto& x : v) key += x.get_str() + ",";
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[key];
  for (const auto& t : slot)
    if (t->max_degree() >= min_degree) return *t;
  int deg = std::max(min_degree, slot.empty() ? 0 : slot.back()->max_degree() + 4);
  slot.push_back(std::make_unique<MomentTable>(vertices, deg));
  return *slot.back();
}

bool SimplexIntegral::rational_measure() const {
  return mpz_perfect_square_p(measure2.get_num_mpz_t()) &&
         mpz_perfect_square_p(measure2.get_den_mpz_t());
}

Rational SimplexIntegral::value() const {
  if (!rational_measure()) throw std::domain_error("SimplexIntegral: measure is irrational");
  Integer n, d;
  mpz_sqrt(n.get_mpz_t(), measure2.get_num_mpz_t());
  mpz_sqrt(d.get_mpz_t(), measure2.get_den_mpz_t());
  return mean * Rational(n, d);
}

double SimplexIntegral::approx() const { return mean.get_d() * std::sqrt(measure2.get_d()); }

SimplexIntegral integrate_simplex(const ScalarPoly& p, const std::vector<Vec3Q>& vertices) {
  const MomentTable& t = moment_table(vertices, std::max(p.degree(), 0));
  return {t.mean(p), t.measure2()};
}

Rational integrate_tet(const ScalarPoly& p, const std::array<Vec3Q, 4>& v) {
  return integrate_simplex(p, std::vector<Vec3Q>(v.begin(), v.end())).value();
}

// ---- random fields ---------------------------------------------------------------

ScalarPoly random_scalar(int degree, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(-9, 9);
  ScalarPoly p;
  for (MonoKey k : monomials_upto(degree)) p.add_term(k, Rational(dist(rng)));
  return p;
}

ExactPoly random_poly(Shape shape, int degree, std::mt19937_64& rng) {
  switch (shape) {
    case Shape::scalar: return ExactPoly::scalar(random_scalar(degree, rng));
    case Shape::vec3: {
      auto a = random_scalar(degree, rng);
      auto b = random_scalar(degree, rng);
      auto c = random_scalar(degree, rng);
      return ExactPoly::vector(a, b, c);
    }
    case Shape::mat3: {
      std::vector<ScalarPoly> c(9);
      for (auto& x : c) x = random_scalar(degree, rng);
      return ExactPoly(Shape::mat3, std::move(c));
    }
    case Shape::sym3: {
      std::vector<ScalarPoly> c(9);
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) c[3 * i + j] = c[3 * j + i] = random_scalar(degree, rng);
      return ExactPoly(Shape::sym3, std::move(c));
    }
    case Shape::skew3: {
      std::vector<ScalarPoly> c(9);
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
          c[3 * i + j] = random_scalar(degree, rng);
          c[3 * j + i] = -c[3 * i + j];
        }
      return ExactPoly(Shape::skew3, std::move(c));
    }
  }
  return ExactPoly(shape);
}

}  // namespace tetstress
