#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tetstress/rational.hpp"

namespace tetstress {

// Dense matrix over Q, row-major.
class QMatrix {
 public:
  QMatrix() = default;
  QMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Rational& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  const Rational& operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }
  std::vector<Rational> row(int i) const;
  std::vector<Rational> col(int j) const;
  void append_row(const std::vector<Rational>& r);

  QMatrix transpose() const;
  QMatrix select_rows(const std::vector<int>& idx) const;
  QMatrix select_cols(const std::vector<int>& idx) const;
  bool is_zero() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Rational> data_;
};

QMatrix operator*(const QMatrix& a, const QMatrix& b);
std::vector<Rational> operator*(const QMatrix& a, const std::vector<Rational>& x);
// Stack a on top of b (same column count).
QMatrix vstack(const QMatrix& a, const QMatrix& b);
QMatrix hstack(const QMatrix& a, const QMatrix& b);

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, std::vector<Rational> nullvector)
      : std::runtime_error(what), nullvector_(std::move(nullvector)) {}
  const std::vector<Rational>& nullvector() const { return nullvector_; }

 private:
  std::vector<Rational> nullvector_;
};

// Word-size primes used for modular elimination.
const std::vector<std::uint32_t>& lifting_primes();

struct RankProfile {
  int rank = 0;
  std::vector<int> pivot_rows;  // original row indices
  std::vector<int> pivot_cols;  // increasing
};

// Row echelon form modulo p with leftmost pivots. rank mod p <= rank over Q,
// and the pivot columns/rows found are independent over Q.
RankProfile rank_profile_mod_p(const QMatrix& a, std::uint32_t p);

struct Nullspace {
  int rank = 0;                             // exact rank of the input
  std::vector<int> pivot_cols;              // a certified column basis
  std::vector<std::vector<Rational>> basis; // kernel vectors, unit on one free column each
  std::uint32_t prime = 0;
};

// Exact kernel. Candidate vectors come from a modular rank profile and Dixon
// lifting; every vector is verified against all rows, so the result is a proof
// of rank(A) = cols - basis.size().
Nullspace nullspace(const QMatrix& a);
int exact_rank(const QMatrix& a);

// Exact solution of A X = B for square A; throws SingularMatrixError with an
// exact kernel vector if A is singular.
QMatrix solve(const QMatrix& a, const QMatrix& b);
QMatrix inverse(const QMatrix& a);

// Nonsingularity by full rank modulo a prime (sufficient over Q); falls back to
// the exact kernel when the prime is unlucky.
struct NonsingularityCertificate {
  bool nonsingular = false;
  int size = 0;
  int rank = 0;
  std::uint32_t prime = 0;
  std::vector<Rational> nullvector;  // when singular
};
NonsingularityCertificate certify_nonsingular(const QMatrix& a);

}  // namespace tetstress
