#pragma once
// Independent numerical quadrature used as a test oracle: collapsed
// Gauss-Legendre products on the unit simplex, mapped affinely.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

struct GaussLegendre {
  std::vector<double> x, w;  // on [0, 1]
  explicit GaussLegendre(int n) : x(n), w(n) {
    for (int i = 0; i < n; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = z;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        double dp = n * (z * p1 - p0) / (z * z - 1);
        double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (z * p1 - p0) / (z * z - 1);
      x[i] = 0.5 * (1 - z);
      w[i] = 1.0 / ((1 - z * z) * dp * dp);
    }
  }
};

using P3 = std::array<double, 3>;

// Mean value of f over the simplex with the given 2, 3 or 4 vertices.
inline double simplex_mean(const std::vector<P3>& v, const std::function<double(const P3&)>& f,
                           int n = 16) {
  GaussLegendre g(n);
  const int m = static_cast<int>(v.size()) - 1;
  auto at = [&](const std::array<double, 3>& y) {
    P3 x = v[0];
    for (int j = 0; j < m; ++j)
      for (int d = 0; d < 3; ++d) x[d] += y[j] * (v[j + 1][d] - v[0][d]);
    return f(x);
  };
  double s = 0;
  if (m == 1) {
    for (int i = 0; i < n; ++i) s += g.w[i] * at({g.x[i], 0, 0});
    return s;
  }
  if (m == 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double u = g.x[i], t = g.x[j];
        s += g.w[i] * g.w[j] * (1 - u) * at({u, (1 - u) * t, 0});
      }
    return 2 * s;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double u = g.x[i], t = g.x[j], r = g.x[k];
        double jac = (1 - u) * (1 - u) * (1 - t);
        s += g.w[i] * g.w[j] * g.w[k] * jac * at({u, (1 - u) * t, (1 - u) * (1 - t) * r});
      }
  return 6 * s;
}

}  // namespace oracle
