#pragma once

// Exact-size dense algebra for the quadratic line-search models.
//
// Systems are at most 4x3. Columns are equilibrated (scaled by their largest
// magnitude) before elimination, so the pivot test compares against a
// threshold of kSingularityTolerance times the largest entry of the scaled
// matrix. Scaling keeps the test independent of the step-size magnitude: the
// alpha^2 and alpha columns of the model matrices shrink together as alpha
// goes to zero.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>

#include "qls/error.hpp"

namespace qls {

inline constexpr double kSingularityTolerance = 1e-12;

class SmallVector {
 public:
  static constexpr std::size_t max_size = 4;

  SmallVector() = default;
  explicit SmallVector(std::size_t n) : size_(n) {
    if (n > max_size) throw DimensionMismatch("SmallVector: length exceeds 4");
  }
  SmallVector(std::initializer_list<double> values) : SmallVector(values.size()) {
    std::copy(values.begin(), values.end(), data_.begin());
  }

  std::size_t size() const { return size_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size_; ++i) m = std::max(m, std::abs(data_[i]));
    return m;
  }

 private:
  std::size_t size_ = 0;
  std::array<double, max_size> data_{};
};

/// Row-major dense matrix, at most 4x4 (the model systems are 2x2, 3x3, 4x3).
class SmallMatrix {
 public:
  static constexpr std::size_t max_rows = 4;
  static constexpr std::size_t max_cols = 4;

  SmallMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows > max_rows || cols > max_cols) {
      throw DimensionMismatch("SmallMatrix: dimensions exceed 4x4");
    }
  }
  SmallMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : SmallMatrix(rows.size(), rows.size() == 0 ? 0 : rows.begin()->size()) {
    std::size_t r = 0;
    for (const auto& row : rows) {
      if (row.size() != cols_) throw DimensionMismatch("SmallMatrix: ragged initializer");
      std::size_t c = 0;
      for (double v : row) (*this)(r, c++) = v;
      ++r;
    }
  }

  static SmallMatrix identity(std::size_t n) {
    SmallMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * max_cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * max_cols + c]; }

  SmallVector operator*(const SmallVector& k) const {
    if (k.size() != cols_) throw DimensionMismatch("SmallMatrix * SmallVector");
    SmallVector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols_; ++c) acc += (*this)(r, c) * k[c];
      out[r] = acc;
    }
    return out;
  }

  SmallMatrix transpose() const {
    SmallMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::array<double, max_rows * max_cols> data_{};
};

namespace detail {

struct Equilibrated {
  SmallMatrix scaled;
  std::array<double, SmallMatrix::max_cols> scale{};
};

inline Equilibrated equilibrate_columns(const SmallMatrix& a) {
  Equilibrated e{a, {}};
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double m = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) m = std::max(m, std::abs(a(r, c)));
    e.scale[c] = m;
    if (m > 0.0) {
      for (std::size_t r = 0; r < a.rows(); ++r) e.scaled(r, c) = a(r, c) / m;
    }
  }
  return e;
}

inline void swap_rows(SmallMatrix& a, std::size_t i, std::size_t j) {
  for (std::size_t c = 0; c < a.cols(); ++c) std::swap(a(i, c), a(j, c));
}

}  // namespace detail

/// Numerical column rank by partial-pivoting elimination on the
/// column-equilibrated matrix. A pivot of magnitude <= tol is treated as zero.
inline std::size_t column_rank(const SmallMatrix& a, double tol = kSingularityTolerance) {
  auto [m, scale] = detail::equilibrate_columns(a);
  std::size_t rank = 0;
  for (std::size_t c = 0; c < m.cols() && rank < m.rows(); ++c) {
    if (scale[c] == 0.0) continue;
    std::size_t pivot = rank;
    for (std::size_t r = rank + 1; r < m.rows(); ++r) {
      if (std::abs(m(r, c)) > std::abs(m(pivot, c))) pivot = r;
    }
    if (!(std::abs(m(pivot, c)) > tol)) continue;
    detail::swap_rows(m, rank, pivot);
    for (std::size_t r = rank + 1; r < m.rows(); ++r) {
      const double factor = m(r, c) / m(rank, c);
      for (std::size_t cc = c; cc < m.cols(); ++cc) m(r, cc) -= factor * m(rank, cc);
    }
    ++rank;
  }
  return rank;
}

/// Solves A k = b for square A by Gaussian elimination with partial pivoting.
/// Throws SingularMatrix when a pivot falls below the scaled tolerance.
inline SmallVector solve_square(const SmallMatrix& a, const SmallVector& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionMismatch("solve_square: matrix is not square");
  if (b.size() != n) throw DimensionMismatch("solve_square: rhs length mismatch");

  auto [m, scale] = detail::equilibrate_columns(a);
  SmallVector rhs = b;
  for (std::size_t c = 0; c < n; ++c) {
    if (scale[c] == 0.0) throw SingularMatrix("solve_square: zero column " + std::to_string(c));
  }

  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(m(r, c)) > std::abs(m(pivot, c))) pivot = r;
    }
    if (!(std::abs(m(pivot, c)) >= kSingularityTolerance)) {
      throw SingularMatrix("solve_square: pivot below tolerance in column " + std::to_string(c));
    }
    if (pivot != c) {
      detail::swap_rows(m, c, pivot);
      std::swap(rhs[c], rhs[pivot]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double factor = m(r, c) / m(c, c);
      if (factor == 0.0) continue;
      for (std::size_t cc = c; cc < n; ++cc) m(r, cc) -= factor * m(c, cc);
      rhs[r] -= factor * rhs[c];
    }
  }

  SmallVector k(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= m(i, c) * k[c];
    k[i] = acc / m(i, i);
  }
  for (std::size_t c = 0; c < n; ++c) k[c] /= scale[c];
  return k;
}

/// Least-squares solution of an overdetermined system via the normal
/// equations A^T A k = A^T b. Throws RankDeficient without full column rank.
inline SmallVector solve_least_squares(const SmallMatrix& a, const SmallVector& b) {
  if (a.rows() < a.cols()) throw DimensionMismatch("solve_least_squares: rows < cols");
  if (b.size() != a.rows()) throw DimensionMismatch("solve_least_squares: rhs length mismatch");
  if (column_rank(a) < a.cols()) throw RankDeficient("solve_least_squares: column rank < cols");

  auto [m, scale] = detail::equilibrate_columns(a);
  const std::size_t n = a.cols();
  SmallMatrix normal(n, n);
  SmallVector rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < m.rows(); ++r) acc += m(r, i) * m(r, j);
      normal(i, j) = acc;
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) acc += m(r, i) * b[r];
    rhs[i] = acc;
  }

  SmallVector k;
  try {
    k = solve_square(normal, rhs);
  } catch (const SingularMatrix& e) {
    throw RankDeficient(std::string("solve_least_squares: ") + e.what());
  }
  for (std::size_t c = 0; c < n; ++c) k[c] /= scale[c];
  return k;
}

}  // namespace qls
