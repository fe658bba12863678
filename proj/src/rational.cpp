#include "tetstress/rational.hpp"

namespace tetstress {

Mat3Q zero3() {
  Mat3Q m;
  for (auto& r : m)
    for (auto& x : r) x = 0;
  return m;
}

Mat3Q identity3() {
  Mat3Q m = zero3();
  for (int i = 0; i < 3; ++i) m[i][i] = 1;
  return m;
}

Mat3Q outer(const Vec3Q& a, const Vec3Q& b) {
  Mat3Q m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = a[i] * b[j];
  return m;
}

Mat3Q transpose(const Mat3Q& m) {
  Mat3Q t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = m[j][i];
  return t;
}

Mat3Q operator*(const Mat3Q& a, const Mat3Q& b) {
  Mat3Q c = zero3();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

Mat3Q operator+(const Mat3Q& a, const Mat3Q& b) {
  Mat3Q c;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[i][j] = a[i][j] + b[i][j];
  return c;
}

Mat3Q operator-(const Mat3Q& a, const Mat3Q& b) {
  Mat3Q c;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[i][j] = a[i][j] - b[i][j];
  return c;
}

Mat3Q operator*(const Rational& s, const Mat3Q& a) {
  Mat3Q c;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[i][j] = s * a[i][j];
  return c;
}

Vec3Q operator*(const Mat3Q& m, const Vec3Q& v) {
  Vec3Q r;
  for (int i = 0; i < 3; ++i) r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  return r;
}

Rational det(const Mat3Q& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Mat3Q inverse(const Mat3Q& m) {
  Rational d = det(m);
  if (sgn(d) == 0) throw GeometryError("inverse: singular 3x3 matrix");
  Mat3Q r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
      r[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / d;
    }
  return r;
}

}  // namespace tetstress
