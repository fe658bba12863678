#include <gtest/gtest.h>

#include <random>

#include "tetstress/linalg.hpp"

using namespace tetstress;

namespace {

QMatrix random_matrix(int r, int c, std::mt19937_64& rng, int lo = -9, int hi = 9) {
  std::uniform_int_distribution<int> d(lo, hi), den(1, 7);
  QMatrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rat(d(rng), den(rng));
  return m;
}

// Plain fraction Gaussian elimination, used as an oracle.
int naive_rank(QMatrix a) {
  int r = 0;
  for (int c = 0; c < a.cols() && r < a.rows(); ++c) {
    int p = -1;
    for (int i = r; i < a.rows(); ++i)
      if (sgn(a(i, c)) != 0) {
        p = i;
        break;
      }
    if (p < 0) continue;
    for (int j = 0; j < a.cols(); ++j) std::swap(a(p, j), a(r, j));
    for (int i = r + 1; i < a.rows(); ++i) {
      Rational f = a(i, c) / a(r, c);
      for (int j = c; j < a.cols(); ++j) a(i, j) -= f * a(r, j);
    }
    ++r;
  }
  return r;
}

}  // namespace

TEST(Linalg, SolveMatchesProduct) {
  std::mt19937_64 rng(1);
  for (int n : {1, 5, 30}) {
    QMatrix a = random_matrix(n, n, rng);
    QMatrix b = random_matrix(n, 3, rng);
    QMatrix x = solve(a, b);
    QMatrix ax = a * x;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_EQ(ax(i, j), b(i, j));
  }
}

TEST(Linalg, InverseOfHilbert) {
  const int n = 8;
  QMatrix h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h(i, j) = rat(1, i + j + 1);
  QMatrix hi = inverse(h);
  EXPECT_EQ(hi(0, 0), 64);
  QMatrix id = h * hi;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) EXPECT_EQ(id(i, j), i == j ? 1 : 0);
}

TEST(Linalg, NullspaceOfLowRankProduct) {
  std::mt19937_64 rng(2);
  QMatrix u = random_matrix(12, 4, rng), v = random_matrix(4, 10, rng);
  QMatrix a = u * v;
  Nullspace ns = nullspace(a);
  EXPECT_EQ(ns.rank, naive_rank(a));
  EXPECT_EQ(ns.rank, 4);
  ASSERT_EQ(ns.basis.size(), 6u);
  for (const auto& z : ns.basis) {
    auto az = a * z;
    for (const auto& e : az) EXPECT_EQ(sgn(e), 0);
  }
}

TEST(Linalg, RankAgreesWithNaive) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    QMatrix a = random_matrix(7, 9, rng, -1, 1);
    EXPECT_EQ(exact_rank(a), naive_rank(a));
  }
}

TEST(Linalg, SingularSolveCarriesNullvector) {
  QMatrix a(3, 3);
  a(0, 0) = 1;
  a(0, 1) = 2;
  a(1, 0) = 2;
  a(1, 1) = 4;
  a(2, 2) = 1;
  QMatrix b(3, 1);
  try {
    solve(a, b);
    FAIL() << "expected SingularMatrixError";
  } catch (const SingularMatrixError& e) {
    auto z = a * e.nullvector();
    for (const auto& v : z) EXPECT_EQ(sgn(v), 0);
  }
  auto cert = certify_nonsingular(a);
  EXPECT_FALSE(cert.nonsingular);
  EXPECT_EQ(cert.rank, 2);
}

TEST(Linalg, ModularRankIsLowerBound) {
  // Entries divisible by the first prime vanish modulo it.
  QMatrix a(2, 2);
  a(0, 0) = Rational(Integer(lifting_primes()[0]));
  a(0, 1) = 1;
  a(1, 1) = 1;
  EXPECT_EQ(rank_profile_mod_p(a, lifting_primes()[0]).rank, 1);
  EXPECT_EQ(exact_rank(a), 2);
}
