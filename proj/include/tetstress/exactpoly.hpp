#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "tetstress/rational.hpp"

namespace tetstress {

// Monomial x1^a x2^b x3^c packed so that integer order is lexicographic in (a,b,c).
using MonoKey = std::uint32_t;

constexpr MonoKey mono_key(int a, int b, int c) {
  return (static_cast<MonoKey>(a) << 20) | (static_cast<MonoKey>(b) << 10) |
         static_cast<MonoKey>(c);
}
constexpr int mono_exp(MonoKey k, int axis) {
  return static_cast<int>((k >> (10 * (2 - axis))) & 0x3ffu);
}
constexpr int mono_deg(MonoKey k) { return mono_exp(k, 0) + mono_exp(k, 1) + mono_exp(k, 2); }

// All monomials of total degree <= d (or == d), in graded lexicographic order.
std::vector<MonoKey> monomials_upto(int d);
std::vector<MonoKey> monomials_of_degree(int d);

class ScalarPoly {
 public:
  ScalarPoly() = default;
  explicit ScalarPoly(const Rational& c);
  static ScalarPoly monomial(int a, int b, int c, const Rational& coeff = 1);
  static ScalarPoly coordinate(int axis);
  // a0 + a . x
  static ScalarPoly affine(const Rational& a0, const Vec3Q& a);

  const std::map<MonoKey, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;  // -1 for the zero polynomial
  Rational coeff(MonoKey k) const;

  void add_term(MonoKey k, const Rational& c);
  ScalarPoly& operator+=(const ScalarPoly& o);
  ScalarPoly& operator-=(const ScalarPoly& o);
  ScalarPoly& operator*=(const Rational& s);
  // Adds s * o.
  void axpy(const Rational& s, const ScalarPoly& o);

  ScalarPoly derivative(int axis) const;
  ScalarPoly directional(const Vec3Q& d) const;
  Rational eval(const Vec3Q& x) const;
  // p(M x + c)
  ScalarPoly compose_affine(const Mat3Q& m, const Vec3Q& c) const;
  // Terms of exact total degree d.
  ScalarPoly homogeneous_part(int d) const;

  friend bool operator==(const ScalarPoly& a, const ScalarPoly& b) { return a.terms_ == b.terms_; }

 private:
  std::map<MonoKey, Rational> terms_;
};

ScalarPoly operator+(ScalarPoly a, const ScalarPoly& b);
ScalarPoly operator-(ScalarPoly a, const ScalarPoly& b);
ScalarPoly operator-(ScalarPoly a);
ScalarPoly operator*(const ScalarPoly& a, const ScalarPoly& b);
ScalarPoly operator*(const Rational& s, ScalarPoly a);
ScalarPoly pow(const ScalarPoly& a, int e);

enum class Shape { scalar, vec3, mat3, sym3, skew3 };

const char* shape_name(Shape s);
int shape_components(Shape s);  // stored components: 1, 3 or 9
bool is_matrix(Shape s);

// Polynomial field on R^3 with rational coefficients. Matrix shapes store all 9
// entries row-major; sym3/skew3 are validated on construction.
class ExactPoly {
 public:
  explicit ExactPoly(Shape shape = Shape::scalar);
  ExactPoly(Shape shape, std::vector<ScalarPoly> comps);

  static ExactPoly scalar(ScalarPoly p);
  static ExactPoly vector(ScalarPoly p0, ScalarPoly p1, ScalarPoly p2);
  static ExactPoly constant_vector(const Vec3Q& v);
  static ExactPoly constant_matrix(const Mat3Q& m, Shape shape = Shape::mat3);
  // Symmetric basis matrix for component pair (i,j): e_i e_j' + e_j e_i' (i != j) or e_i e_i'.
  static ExactPoly sym_unit(int i, int j, const ScalarPoly& p);

  Shape shape() const { return shape_; }
  int degree_bound() const { return degree_bound_; }
  int degree() const;
  bool is_zero() const;
  int ncomp() const { return static_cast<int>(comp_.size()); }

  const ScalarPoly& operator[](int i) const { return comp_[i]; }
  const ScalarPoly& operator()(int i, int j) const { return comp_[3 * i + j]; }
  const std::vector<ScalarPoly>& components() const { return comp_; }

  // Reinterpret a matrix-valued field under another matrix shape, validating it.
  ExactPoly as(Shape s) const;

  ExactPoly& operator+=(const ExactPoly& o);
  ExactPoly& operator-=(const ExactPoly& o);
  ExactPoly& operator*=(const Rational& s);

  friend bool operator==(const ExactPoly& a, const ExactPoly& b);

  // One line per term: "coeff · x1^a x2^b x3^c", grouped by component and
  // sorted lexicographically by exponent.
  std::string dump() const;

 private:
  void validate() const;
  Shape shape_;
  int degree_bound_ = 0;
  std::vector<ScalarPoly> comp_;
};

ExactPoly operator+(ExactPoly a, const ExactPoly& b);
ExactPoly operator-(ExactPoly a, const ExactPoly& b);
ExactPoly operator-(ExactPoly a);
ExactPoly operator*(const Rational& s, ExactPoly a);
ExactPoly operator*(const ScalarPoly& s, const ExactPoly& a);
// scalar*any, matrix*vector, matrix*matrix.
ExactPoly operator*(const ExactPoly& a, const ExactPoly& b);

enum class PolyOp { add, sub, mul, scale };
ExactPoly poly_arith(PolyOp op, const ExactPoly& p, const ExactPoly& q);
ExactPoly poly_arith(PolyOp op, const ExactPoly& p, const Rational& q);

// Constant-matrix products: M p, p M, and the matrix field times a constant vector.
ExactPoly lmul(const Mat3Q& m, const ExactPoly& p);
ExactPoly rmul(const ExactPoly& p, const Mat3Q& m);
ExactPoly matvec(const ExactPoly& p, const Vec3Q& v);
// v' p (row vector times matrix field) as vec3.
ExactPoly vecmat(const Vec3Q& v, const ExactPoly& p);
// Frobenius product for matrices, dot product for vectors, product for scalars.
ScalarPoly contract(const ExactPoly& a, const ExactPoly& b);
// a' p b for a matrix field p.
ScalarPoly bilinear(const Vec3Q& a, const ExactPoly& p, const Vec3Q& b);
ScalarPoly vdot(const Vec3Q& a, const ExactPoly& v);

ExactPoly differentiate(const ExactPoly& p, int axis);
ExactPoly differentiate(const ExactPoly& p, const Vec3Q& direction);

enum class DiffOp {
  grad,
  div,
  curl,
  curl_star,
  eps,
  sym,
  skw,
  vect,
  vect_inv,
  Xi,
  Xi_inv,
  curlcurl_star,
  trace,
  transpose,
  hess
};
ExactPoly apply_operator(DiffOp tag, const ExactPoly& p);

namespace op {
ExactPoly grad(const ExactPoly& p);  // scalar -> vec3, vec3 -> mat3 (rows are gradients)
ExactPoly div(const ExactPoly& p);   // vec3 -> scalar, matrix -> vec3 (row-wise)
ExactPoly curl(const ExactPoly& p);  // vec3 -> vec3, matrix -> mat3 (row-wise)
ExactPoly curl_star(const ExactPoly& p);
ExactPoly curlcurl_star(const ExactPoly& p);
ExactPoly eps(const ExactPoly& p);
ExactPoly sym(const ExactPoly& p);
ExactPoly skw(const ExactPoly& p);
ExactPoly vect(const ExactPoly& p);
ExactPoly vect_inv(const ExactPoly& p);
ExactPoly Xi(const ExactPoly& p);
ExactPoly Xi_inv(const ExactPoly& p);
ExactPoly trace(const ExactPoly& p);
ExactPoly transpose(const ExactPoly& p);
ExactPoly hess(const ExactPoly& p);
}  // namespace op

// Possibly non-unit direction, carried with its squared norm.
class FrameVector {
 public:
  FrameVector() = default;
  explicit FrameVector(const Vec3Q& v);
  const Vec3Q& v() const { return v_; }
  const Rational& norm2() const { return norm2_; }
  const Rational& operator[](int i) const { return v_[i]; }
  FrameVector negated() const;
  // Constant matrices; P and Q are normalization-free, C is linear in the vector.
  Mat3Q P() const;
  Mat3Q Q() const;
  Mat3Q C() const;

 private:
  Vec3Q v_{};
  Rational norm2_;
};

enum class FaceOp {
  P_n,
  Q_n,
  C_n,
  grad_f,
  grad_f_star,
  eps_f,
  rot_f,
  curl_f,
  rot_f_star,
  curl_f_star,
  Lambda_f,
  grad_f_grad_f_star,
  partial_n
};

// Tangential calculus relative to the plane normal to n. Operators are written
// for the (possibly non-unit) vector n; each has a fixed homogeneity degree in
// n (P,Q,rot,curl: 0; C, partial_n, Lambda: 1) as given by face_op_degree.
ExactPoly face_calculus(FaceOp tag, const ExactPoly& p, const FrameVector& n);
int face_op_degree(FaceOp tag);

namespace face {
ExactPoly grad_f(const ExactPoly& p, const FrameVector& n);
ExactPoly grad_f_star(const ExactPoly& p, const FrameVector& n);
ExactPoly eps_f(const ExactPoly& p, const FrameVector& n);
ExactPoly rot_f(const ExactPoly& p, const FrameVector& n);
ExactPoly curl_f(const ExactPoly& p, const FrameVector& n);
ExactPoly rot_f_star(const ExactPoly& p, const FrameVector& n);
ExactPoly curl_f_star(const ExactPoly& p, const FrameVector& n);
ExactPoly Lambda_f(const ExactPoly& p, const FrameVector& n);
ExactPoly grad_f_grad_f_star(const ExactPoly& p, const FrameVector& n);
ExactPoly partial_n(const ExactPoly& p, const FrameVector& n);
}  // namespace face

// ---- integration over simplices -------------------------------------------------

// Exact mean values of all monomials of degree <= max_degree over a simplex of
// dimension 1, 2 or 3 given by its vertices.
class MomentTable {
 public:
  MomentTable(std::vector<Vec3Q> vertices, int max_degree);
  int dim() const { return static_cast<int>(vertices_.size()) - 1; }
  int max_degree() const { return max_degree_; }
  const std::vector<Vec3Q>& vertices() const { return vertices_; }
  const Rational& mean(MonoKey k) const;
  // Mean value of p over the simplex; throws if deg p exceeds the table.
  Rational mean(const ScalarPoly& p) const;
  // Squared measure (length^2, area^2, volume^2).
  const Rational& measure2() const { return measure2_; }

 private:
  std::size_t slot(MonoKey k) const;
  std::vector<Vec3Q> vertices_;
  int max_degree_;
  std::vector<Rational> table_;
  Rational measure2_;
};

// Shared, lazily populated tables (thread-safe).
const MomentTable& moment_table(const std::vector<Vec3Q>& vertices, int min_degree);

struct SimplexIntegral {
  Rational mean;      // integral divided by the measure
  Rational measure2;  // squared measure
  // Exact integral when the measure is rational (always for dim 3).
  bool rational_measure() const;
  Rational value() const;
  double approx() const;
};

SimplexIntegral integrate_simplex(const ScalarPoly& p, const std::vector<Vec3Q>& vertices);
Rational integrate_tet(const ScalarPoly& p, const std::array<Vec3Q, 4>& vertices);
Rational simplex_measure2(const std::vector<Vec3Q>& vertices);

// Random field with integer coefficients in [-9, 9] for all monomials of degree <= d.
ExactPoly random_poly(Shape shape, int degree, std::mt19937_64& rng);
ScalarPoly random_scalar(int degree, std::mt19937_64& rng);

}  // namespace tetstress
