#include "tetstress/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tetstress {

// ---- QMatrix ---------------------------------------------------------------------

std::vector<Rational> QMatrix::row(int i) const {
  return {data_.begin() + static_cast<std::ptrdiff_t>(i) * cols_,
          data_.begin() + static_cast<std::ptrdiff_t>(i + 1) * cols_};
}

std::vector<Rational> QMatrix::col(int j) const {
  std::vector<Rational> c(rows_);
  for (int i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

void QMatrix::append_row(const std::vector<Rational>& r) {
  if (rows_ == 0 && cols_ == 0) cols_ = static_cast<int>(r.size());
  if (static_cast<int>(r.size()) != cols_) throw std::invalid_argument("append_row: width mismatch");
  data_.insert(data_.end(), r.begin(), r.end());
  ++rows_;
}

QMatrix QMatrix::transpose() const {
  QMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

QMatrix QMatrix::select_rows(const std::vector<int>& idx) const {
  QMatrix s(static_cast<int>(idx.size()), cols_);
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < cols_; ++j) s(i, j) = (*this)(idx[i], j);
  return s;
}

QMatrix QMatrix::select_cols(const std::vector<int>& idx) const {
  QMatrix s(rows_, static_cast<int>(idx.size()));
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < s.cols(); ++j) s(i, j) = (*this)(i, idx[j]);
  return s;
}

bool QMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](const Rational& x) { return sgn(x) == 0; });
}

QMatrix operator*(const QMatrix& a, const QMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("QMatrix product: shape mismatch");
  QMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const Rational& x = a(i, k);
      if (sgn(x) == 0) continue;
      for (int j = 0; j < b.cols(); ++j)
        if (sgn(b(k, j)) != 0) c(i, j) += x * b(k, j);
    }
  return c;
}

std::vector<Rational> operator*(const QMatrix& a, const std::vector<Rational>& x) {
  std::vector<Rational> y(a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (sgn(a(i, j)) != 0 && sgn(x[j]) != 0) y[i] += a(i, j) * x[j];
  return y;
}

QMatrix vstack(const QMatrix& a, const QMatrix& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.cols() != b.cols()) throw std::invalid_argument("vstack: width mismatch");
  QMatrix c(a.rows() + b.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(a.rows() + i, j) = b(i, j);
  return c;
}

QMatrix hstack(const QMatrix& a, const QMatrix& b) { return vstack(a.transpose(), b.transpose()).transpose(); }

// ---- modular and integer helpers -----------------------------------------------

namespace {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using u128 = unsigned __int128;
using i128 = __int128;

u64 powmod(u64 a, u64 e, u64 p) {
  u64 r = 1;
  a %= p;
  while (e) {
    if (e & 1) r = r * a % p;
    a = a * a % p;
    e >>= 1;
  }
  return r;
}

u32 invmod(u32 a, u32 p) { return static_cast<u32>(powmod(a, p - 2, p)); }

// Integer matrix obtained by clearing denominators row by row.
struct IntMatrix {
  int rows = 0, cols = 0;
  std::vector<Integer> d;
  bool small = true;  // every entry fits in int64 with headroom
  std::vector<std::int64_t> s;
  const Integer& at(int i, int j) const { return d[static_cast<std::size_t>(i) * cols + j]; }
  void finalize() {
    small = true;
    for (const auto& x : d)
      if (!mpz_fits_slong_p(x.get_mpz_t()) || abs(x) > Integer("4611686018427387904")) {
        small = false;
        break;
      }
    if (small) {
      s.resize(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) s[i] = mpz_get_si(d[i].get_mpz_t());
    }
  }
};

// Scales each row of [a | b] by the lcm of its denominators divided by the gcd
// of its numerators; returns integer blocks with identical row scaling.
void integerize(const QMatrix& a, const QMatrix* b, IntMatrix& ai, IntMatrix* bi) {
  const int n = a.rows();
  ai.rows = n;
  ai.cols = a.cols();
  ai.d.assign(static_cast<std::size_t>(n) * a.cols(), Integer(0));
  if (bi) {
    bi->rows = n;
    bi->cols = b->cols();
    bi->d.assign(static_cast<std::size_t>(n) * b->cols(), Integer(0));
  }
  for (int i = 0; i < n; ++i) {
    Integer l = 1, g = 0;
    auto scan = [&](const Rational& x) {
      if (sgn(x) == 0) return;
      mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den_mpz_t());
      mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_num_mpz_t());
    };
    for (int j = 0; j < a.cols(); ++j) scan(a(i, j));
    if (b)
      for (int j = 0; j < b->cols(); ++j) scan((*b)(i, j));
    if (g == 0) continue;
    Rational f(l, g);
    f.canonicalize();
    for (int j = 0; j < a.cols(); ++j)
      if (sgn(a(i, j)) != 0) {
        Rational y = a(i, j) * f;
        ai.d[static_cast<std::size_t>(i) * a.cols() + j] = y.get_num();
      }
    if (b)
      for (int j = 0; j < b->cols(); ++j)
        if (sgn((*b)(i, j)) != 0) {
          Rational y = (*b)(i, j) * f;
          bi->d[static_cast<std::size_t>(i) * b->cols() + j] = y.get_num();
        }
  }
  ai.finalize();
  if (bi) bi->finalize();
}

std::vector<u32> reduce(const IntMatrix& m, u32 p) {
  std::vector<u32> r(m.d.size());
  for (std::size_t i = 0; i < m.d.size(); ++i)
    r[i] = static_cast<u32>(mpz_fdiv_ui(m.d[i].get_mpz_t(), p));
  return r;
}

RankProfile profile_mod_p(std::vector<u32> a, int rows, int cols, u32 p) {
  RankProfile rp;
  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  auto at = [&](int i, int j) -> u32& { return a[static_cast<std::size_t>(i) * cols + j]; };
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (at(i, c) != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    if (piv != r) {
      for (int j = 0; j < cols; ++j) std::swap(at(piv, j), at(r, j));
      std::swap(order[piv], order[r]);
    }
    u64 inv = invmod(at(r, c), p);
    for (int j = c; j < cols; ++j) at(r, j) = static_cast<u32>(at(r, j) * inv % p);
    for (int i = r + 1; i < rows; ++i) {
      u64 f = at(i, c);
      if (f == 0) continue;
      u64 nf = p - f;
      for (int j = c; j < cols; ++j) {
        u32 x = at(r, j);
        if (x) at(i, j) = static_cast<u32>((at(i, j) + nf * x) % p);
      }
    }
    rp.pivot_rows.push_back(order[r]);
    rp.pivot_cols.push_back(c);
    ++r;
  }
  rp.rank = r;
  return rp;
}

// Inverse of an n x n matrix modulo p; returns false if singular.
bool inverse_mod_p(std::vector<u32> a, int n, u32 p, std::vector<u32>& inv) {
  inv.assign(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i) * n + i] = 1;
  auto A = [&](int i, int j) -> u32& { return a[static_cast<std::size_t>(i) * n + j]; };
  auto I = [&](int i, int j) -> u32& { return inv[static_cast<std::size_t>(i) * n + j]; };
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    for (int i = c; i < n; ++i)
      if (A(i, c)) {
        piv = i;
        break;
      }
    if (piv < 0) return false;
    if (piv != c)
      for (int j = 0; j < n; ++j) {
        std::swap(A(piv, j), A(c, j));
        std::swap(I(piv, j), I(c, j));
      }
    u64 iv = invmod(A(c, c), p);
    for (int j = 0; j < n; ++j) {
      A(c, j) = static_cast<u32>(A(c, j) * iv % p);
      I(c, j) = static_cast<u32>(I(c, j) * iv % p);
    }
    for (int i = 0; i < n; ++i) {
      if (i == c || A(i, c) == 0) continue;
      u64 nf = p - A(i, c);
      for (int j = 0; j < n; ++j) {
        if (A(c, j)) A(i, j) = static_cast<u32>((A(i, j) + nf * A(c, j)) % p);
        if (I(c, j)) I(i, j) = static_cast<u32>((I(i, j) + nf * I(c, j)) % p);
      }
    }
  }
  return true;
}

void sub_i128(Integer& r, i128 v) {
  if (v == 0) return;
  bool neg = v < 0;
  u128 u = neg ? static_cast<u128>(-v) : static_cast<u128>(v);
  u64 hi = static_cast<u64>(u >> 64), lo = static_cast<u64>(u);
  Integer t;
  if (hi) {
    mpz_set_ui(t.get_mpz_t(), hi);
    mpz_mul_2exp(t.get_mpz_t(), t.get_mpz_t(), 64);
    mpz_add_ui(t.get_mpz_t(), t.get_mpz_t(), lo);
  } else {
    mpz_set_ui(t.get_mpz_t(), lo);
  }
  if (neg)
    r += t;
  else
    r -= t;
}

void addmul_si(Integer& r, const Integer& x, std::int64_t a) {
  if (a >= 0)
    mpz_addmul_ui(r.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(a));
  else
    mpz_submul_ui(r.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(-a));
}

// Rational reconstruction of u modulo m with |num|, den <= bound.
bool ratrecon(const Integer& u, const Integer& m, const Integer& bound, Integer& num, Integer& den) {
  Integer r0 = m, r1 = u, t0 = 0, t1 = 1, q, tmp;
  while (r1 > bound) {
    mpz_fdiv_q(q.get_mpz_t(), r0.get_mpz_t(), r1.get_mpz_t());
    tmp = r0 - q * r1;
    r0 = r1;
    r1 = tmp;
    tmp = t0 - q * t1;
    t0 = t1;
    t1 = tmp;
  }
  if (abs(t1) > bound || t1 == 0) return false;
  Integer g;
  mpz_gcd(g.get_mpz_t(), r1.get_mpz_t(), t1.get_mpz_t());
  if (g != 1) return false;
  if (t1 < 0) {
    num = -r1;
    den = -t1;
  } else {
    num = r1;
    den = t1;
  }
  return true;
}

// Checks A * num == den * B exactly (num, B: n x m column blocks).
bool verify_solution(const IntMatrix& a, const std::vector<Integer>& num, const Integer& den,
                     const IntMatrix& b) {
  const int n = a.rows, k = a.cols, m = b.cols;
  Integer acc;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      acc = 0;
      for (int l = 0; l < k; ++l) {
        const std::size_t ai = static_cast<std::size_t>(i) * k + l;
        const Integer& x = num[static_cast<std::size_t>(l) * m + j];
        if (a.small) {
          if (a.s[ai]) addmul_si(acc, x, a.s[ai]);
        } else if (a.d[ai] != 0) {
          acc += a.d[ai] * x;
        }
      }
      mpz_submul(acc.get_mpz_t(), den.get_mpz_t(), b.at(i, j).get_mpz_t());
      if (acc != 0) return false;
    }
  return true;
}

// Dixon p-adic lifting for A X = B with A square and invertible mod p.
// Returns integer numerators and a common denominator, verified exactly.
void dixon(const IntMatrix& a, const IntMatrix& b, u32 p, const std::vector<u32>& ainv,
           std::vector<Integer>& num, Integer& den) {
  const int n = a.rows, m = b.cols;
  const std::size_t nm = static_cast<std::size_t>(n) * m;
  num.assign(nm, Integer(0));
  den = 1;
  if (n == 0 || m == 0) return;
  std::vector<Integer> R = b.d;
  std::vector<Integer> X(nm, Integer(0));
  std::vector<u32> rm(nm), y(nm);
  std::vector<u128> acc(m);
  std::vector<i128> ay(m);
  Integer pk = 1;
  // Stop lifting well beyond the Hadamard-type bound (guards against loops).
  // per row: log2 of the row norm <= log2(max entry) + log2(row length) / 2
  double logbound = 0;
  for (int i = 0; i < n; ++i) {
    std::size_t bits = 1;
    for (int j = 0; j < n; ++j) bits = std::max(bits, mpz_sizeinbase(a.at(i, j).get_mpz_t(), 2));
    for (int j = 0; j < m; ++j) bits = std::max(bits, mpz_sizeinbase(b.at(i, j).get_mpz_t(), 2));
    logbound += static_cast<double>(bits) + 0.5 * std::log2(static_cast<double>(n + m));
  }
  const int max_steps = static_cast<int>(2 * logbound / std::log2(static_cast<double>(p))) + 64;
  int next_try = 4;
  for (int step = 1; step <= max_steps; ++step) {
    for (std::size_t i = 0; i < nm; ++i) rm[i] = static_cast<u32>(mpz_fdiv_ui(R[i].get_mpz_t(), p));
    for (int i = 0; i < n; ++i) {
      std::fill(acc.begin(), acc.end(), 0);
      for (int l = 0; l < n; ++l) {
        u64 c = ainv[static_cast<std::size_t>(i) * n + l];
        if (!c) continue;
        const u32* r = &rm[static_cast<std::size_t>(l) * m];
        for (int j = 0; j < m; ++j) acc[j] += static_cast<u128>(c * r[j]);
      }
      for (int j = 0; j < m; ++j) y[static_cast<std::size_t>(i) * m + j] = static_cast<u32>(acc[j] % p);
    }
    for (std::size_t i = 0; i < nm; ++i)
      if (y[i]) mpz_addmul_ui(X[i].get_mpz_t(), pk.get_mpz_t(), y[i]);
    for (int i = 0; i < n; ++i) {
      if (a.small) {
        std::fill(ay.begin(), ay.end(), 0);
        for (int l = 0; l < n; ++l) {
          std::int64_t c = a.s[static_cast<std::size_t>(i) * n + l];
          if (!c) continue;
          const u32* yl = &y[static_cast<std::size_t>(l) * m];
          for (int j = 0; j < m; ++j) ay[j] += static_cast<i128>(c) * yl[j];
        }
        for (int j = 0; j < m; ++j) sub_i128(R[static_cast<std::size_t>(i) * m + j], ay[j]);
      } else {
        for (int l = 0; l < n; ++l) {
          const Integer& c = a.at(i, l);
          if (c == 0) continue;
          for (int j = 0; j < m; ++j) {
            u32 yl = y[static_cast<std::size_t>(l) * m + j];
            if (yl) mpz_submul_ui(R[static_cast<std::size_t>(i) * m + j].get_mpz_t(), c.get_mpz_t(), yl);
          }
        }
      }
      for (int j = 0; j < m; ++j) {
        Integer& r = R[static_cast<std::size_t>(i) * m + j];
        mpz_divexact_ui(r.get_mpz_t(), r.get_mpz_t(), p);
      }
    }
    pk *= p;
    bool residual_zero = std::all_of(R.begin(), R.end(), [](const Integer& v) { return v == 0; });
    if (step < next_try && !residual_zero) continue;
    next_try = step + std::max(4, step / 3);
    if (residual_zero) {
      // X is an exact integer solution.
      num = X;
      den = 1;
      if (verify_solution(a, num, den, b)) return;
    }
    // Reconstruct with a running common denominator.
    Integer bound;
    mpz_fdiv_q_2exp(bound.get_mpz_t(), pk.get_mpz_t(), 1);
    mpz_sqrt(bound.get_mpz_t(), bound.get_mpz_t());
    Integer L = 1, half = pk / 2, yv, nn, dd;
    bool ok = true;
    std::vector<Integer> cand(nm);
    for (std::size_t i = 0; i < nm && ok; ++i) {
      yv = X[i] * L;
      mpz_fdiv_r(yv.get_mpz_t(), yv.get_mpz_t(), pk.get_mpz_t());
      if (yv > half) yv -= pk;
      if (abs(yv) <= bound) {
        cand[i] = yv;  // numerator relative to L
        continue;
      }
      if (yv < 0) yv += pk;
      if (!ratrecon(yv, pk, bound, nn, dd)) {
        ok = false;
        break;
      }
      // entry = nn / (dd * L); rescale earlier numerators to the new denominator
      for (std::size_t q = 0; q < i; ++q) cand[q] *= dd;
      cand[i] = nn;
      L *= dd;
      if (L > bound) ok = false;
    }
    if (!ok) continue;
    if (verify_solution(a, cand, L, b)) {
      num = std::move(cand);
      den = L;
      return;
    }
  }
  throw std::runtime_error("dixon: lifting did not converge");
}

}  // namespace

const std::vector<std::uint32_t>& lifting_primes() {
  static const std::vector<std::uint32_t> primes = {2147483629u, 2147483587u, 2147483579u,
                                                     2147483563u, 2147483549u};
  return primes;
}

RankProfile rank_profile_mod_p(const QMatrix& a, std::uint32_t p) {
  IntMatrix ai;
  integerize(a, nullptr, ai, nullptr);
  return profile_mod_p(reduce(ai, p), a.rows(), a.cols(), p);
}

Nullspace nullspace(const QMatrix& a) {
  const int rows = a.rows(), cols = a.cols();
  IntMatrix ai;
  integerize(a, nullptr, ai, nullptr);
  for (u32 p : lifting_primes()) {
    RankProfile rp = profile_mod_p(reduce(ai, p), rows, cols, p);
    const int r = rp.rank;
    Nullspace ns;
    ns.rank = r;
    ns.pivot_cols = rp.pivot_cols;
    ns.prime = p;
    std::vector<int> free;
    {
      std::vector<char> is_piv(cols, 0);
      for (int c : rp.pivot_cols) is_piv[c] = 1;
      for (int c = 0; c < cols; ++c)
        if (!is_piv[c]) free.push_back(c);
    }
    if (free.empty()) return ns;  // full column rank mod p implies over Q
    // Square system on pivot rows/cols, right-hand side -A[R, F].
    IntMatrix sq, rhs;
    sq.rows = sq.cols = r;
    sq.d.resize(static_cast<std::size_t>(r) * r);
    rhs.rows = r;
    rhs.cols = static_cast<int>(free.size());
    rhs.d.resize(static_cast<std::size_t>(r) * free.size());
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) sq.d[static_cast<std::size_t>(i) * r + j] = ai.at(rp.pivot_rows[i], rp.pivot_cols[j]);
      for (std::size_t j = 0; j < free.size(); ++j)
        rhs.d[i * free.size() + j] = -ai.at(rp.pivot_rows[i], free[j]);
    }
    sq.finalize();
    rhs.finalize();
    std::vector<Integer> num;
    Integer den = 1;
    if (r > 0) {
      std::vector<u32> inv;
      if (!inverse_mod_p(reduce(sq, p), r, p, inv)) throw std::logic_error("nullspace: pivot block singular");
      dixon(sq, rhs, p, inv, num, den);
    }
    // Verify against every row: A[:,P] num + den * A[:,F] == 0.
    const std::size_t nf = free.size();
    std::vector<Integer> full(static_cast<std::size_t>(cols) * nf, Integer(0));
    for (int i = 0; i < r; ++i)
      for (std::size_t j = 0; j < nf; ++j) full[static_cast<std::size_t>(rp.pivot_cols[i]) * nf + j] = num[i * nf + j];
    for (std::size_t j = 0; j < nf; ++j) full[static_cast<std::size_t>(free[j]) * nf + j] = den;
    IntMatrix zero;
    zero.rows = rows;
    zero.cols = static_cast<int>(nf);
    zero.d.assign(static_cast<std::size_t>(rows) * nf, Integer(0));
    if (!verify_solution(ai, full, Integer(1), zero)) continue;  // unlucky prime
    ns.basis.assign(nf, std::vector<Rational>(cols));
    for (std::size_t j = 0; j < nf; ++j)
      for (int c = 0; c < cols; ++c) {
        Rational v(full[static_cast<std::size_t>(c) * nf + j], den);
        v.canonicalize();
        ns.basis[j][c] = v;
      }
    return ns;
  }
  throw std::runtime_error("nullspace: no lucky prime found");
}

int exact_rank(const QMatrix& a) { return nullspace(a).rank; }

QMatrix solve(const QMatrix& a, const QMatrix& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) throw std::invalid_argument("solve: shape mismatch");
  const int n = a.rows();
  IntMatrix ai, bi;
  integerize(a, &b, ai, &bi);
  for (u32 p : lifting_primes()) {
    std::vector<u32> inv;
    if (!inverse_mod_p(reduce(ai, p), n, p, inv)) continue;
    std::vector<Integer> num;
    Integer den;
    dixon(ai, bi, p, inv, num, den);
    QMatrix x(n, b.cols());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < b.cols(); ++j) {
        Rational v(num[static_cast<std::size_t>(i) * b.cols() + j], den);
        v.canonicalize();
        x(i, j) = v;
      }
    return x;
  }
  Nullspace ns = nullspace(a);
  if (ns.basis.empty()) throw std::runtime_error("solve: nonsingular matrix singular modulo all primes");
  throw SingularMatrixError("solve: matrix is singular (rank " + std::to_string(ns.rank) + " of " +
                                std::to_string(n) + ")",
                            ns.basis.front());
}

QMatrix inverse(const QMatrix& a) {
  QMatrix id(a.rows(), a.rows());
  for (int i = 0; i < a.rows(); ++i) id(i, i) = 1;
  return solve(a, id);
}

NonsingularityCertificate certify_nonsingular(const QMatrix& a) {
  NonsingularityCertificate c;
  c.size = a.rows();
  if (a.rows() != a.cols()) throw std::invalid_argument("certify_nonsingular: matrix not square");
  IntMatrix ai;
  integerize(a, nullptr, ai, nullptr);
  const u32 p = lifting_primes().front();
  RankProfile rp = profile_mod_p(reduce(ai, p), a.rows(), a.cols(), p);
  c.prime = p;
  c.rank = rp.rank;
  if (rp.rank == a.rows()) {
    c.nonsingular = true;
    return c;
  }
  Nullspace ns = nullspace(a);
  c.rank = ns.rank;
  c.prime = ns.prime;
  c.nonsingular = ns.basis.empty();
  if (!ns.basis.empty()) c.nullvector = ns.basis.front();
  return c;
}

}  // namespace tetstress
