#pragma once

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tetstress {

// mpq_class keeps values canonical (lowest terms, positive denominator)
// after every arithmetic operation.
using Rational = mpq_class;
using Integer = mpz_class;

using Vec3Q = std::array<Rational, 3>;
using Mat3Q = std::array<std::array<Rational, 3>, 3>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Rational rat(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

inline Vec3Q vec3(long a, long b, long c) { return {rat(a), rat(b), rat(c)}; }

inline Vec3Q operator+(const Vec3Q& a, const Vec3Q& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3Q operator-(const Vec3Q& a, const Vec3Q& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3Q operator*(const Rational& s, const Vec3Q& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline Rational dot(const Vec3Q& a, const Vec3Q& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3Q cross(const Vec3Q& a, const Vec3Q& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
inline bool is_zero(const Vec3Q& a) {
  return sgn(a[0]) == 0 && sgn(a[1]) == 0 && sgn(a[2]) == 0;
}

Mat3Q identity3();
Mat3Q zero3();
Mat3Q outer(const Vec3Q& a, const Vec3Q& b);
Mat3Q transpose(const Mat3Q& m);
Mat3Q operator*(const Mat3Q& a, const Mat3Q& b);
Mat3Q operator+(const Mat3Q& a, const Mat3Q& b);
Mat3Q operator-(const Mat3Q& a, const Mat3Q& b);
Mat3Q operator*(const Rational& s, const Mat3Q& a);
Vec3Q operator*(const Mat3Q& m, const Vec3Q& v);
Rational det(const Mat3Q& m);
// Throws GeometryError when singular.
Mat3Q inverse(const Mat3Q& m);

}  // namespace tetstress
