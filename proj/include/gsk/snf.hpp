#pragma once

/**
 * @file snf.hpp
 * @brief Exact integer matrices and Smith normal form.
 *
 * All module arithmetic in the library reduces to Smith normal form of
 * integer matrices: U * M * V = D with U, V unimodular and D diagonal with
 * d_i | d_{i+1}.  Matrices are small (desk scale), so we use a dense
 * representation with 64-bit entries and gcd-pivot reduction.
 */

#include <cassert>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace gsk {

using Int = std::int64_t;

/// Dense row-major integer matrix.
class IntMat {
public:
  IntMat() : rows_(0), cols_(0) {}
  IntMat(int rows, int cols, Int fill = 0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    assert(rows >= 0 && cols >= 0);
  }

  static IntMat identity(int n) {
    IntMat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  static IntMat from_rows(std::vector<std::vector<Int>> rows) {
    int r = static_cast<int>(rows.size());
    int c = r == 0 ? 0 : static_cast<int>(rows[0].size());
    IntMat m(r, c);
    for (int i = 0; i < r; ++i) {
      if (static_cast<int>(rows[i].size()) != c)
        throw std::invalid_argument("ragged matrix rows");
      for (int j = 0; j < c; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Int& operator()(int i, int j) {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return data_[static_cast<size_t>(i) * cols_ + j];
  }
  Int operator()(int i, int j) const {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return data_[static_cast<size_t>(i) * cols_ + j];
  }

  bool operator==(const IntMat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

  bool is_zero() const {
    for (Int v : data_)
      if (v != 0) return false;
    return true;
  }

  IntMat transposed() const {
    IntMat t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  IntMat operator*(const IntMat& o) const {
    if (cols_ != o.rows_) throw std::invalid_argument("matmul shape mismatch");
    IntMat r(rows_, o.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        Int a = (*this)(i, k);
        if (a == 0) continue;
        for (int j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
      }
    return r;
  }

  IntMat operator+(const IntMat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("matadd shape mismatch");
    IntMat r = *this;
    for (size_t i = 0; i < data_.size(); ++i) r.data_[i] += o.data_[i];
    return r;
  }

  IntMat operator-(const IntMat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("matsub shape mismatch");
    IntMat r = *this;
    for (size_t i = 0; i < data_.size(); ++i) r.data_[i] -= o.data_[i];
    return r;
  }

  IntMat operator-() const {
    IntMat r = *this;
    for (auto& v : r.data_) v = -v;
    return r;
  }

  std::vector<Int> apply(const std::vector<Int>& x) const {
    if (static_cast<int>(x.size()) != cols_)
      throw std::invalid_argument("matvec shape mismatch");
    std::vector<Int> y(rows_, 0);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  std::vector<Int> col(int j) const {
    std::vector<Int> c(rows_);
    for (int i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  /// Horizontal concatenation [A | B].
  static IntMat hcat(const IntMat& a, const IntMat& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("hcat shape mismatch");
    IntMat r(a.rows(), a.cols() + b.cols());
    for (int i = 0; i < a.rows(); ++i) {
      for (int j = 0; j < a.cols(); ++j) r(i, j) = a(i, j);
      for (int j = 0; j < b.cols(); ++j) r(i, a.cols() + j) = b(i, j);
    }
    return r;
  }

  /// Vertical concatenation [A ; B].
  static IntMat vcat(const IntMat& a, const IntMat& b) {
    if (a.cols() != b.cols()) throw std::invalid_argument("vcat shape mismatch");
    IntMat r(a.rows() + b.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j) r(i, j) = a(i, j);
    for (int i = 0; i < b.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j) r(a.rows() + i, j) = b(i, j);
    return r;
  }

  static IntMat block_diag(const IntMat& a, const IntMat& b) {
    IntMat r(a.rows() + b.rows(), a.cols() + b.cols());
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j) r(i, j) = a(i, j);
    for (int i = 0; i < b.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j) r(a.rows() + i, a.cols() + j) = b(i, j);
    return r;
  }

private:
  int rows_, cols_;
  std::vector<Int> data_;
};

/// Result of a Smith normal form computation: U * M * V = D.
struct SnfResult {
  IntMat d;                       ///< diagonal, d_i | d_{i+1}, nonneg
  IntMat u;                       ///< unimodular, rows x rows
  IntMat v;                       ///< unimodular, cols x cols
  IntMat u_inv;                   ///< inverse of u
  IntMat v_inv;                   ///< inverse of v
  std::vector<Int> divisors;      ///< diagonal entries (length min(r,c))
  int rank = 0;                   ///< number of nonzero divisors
};

namespace detail {

inline void swap_rows(IntMat& m, int a, int b) {
  for (int j = 0; j < m.cols(); ++j) std::swap(m(a, j), m(b, j));
}
inline void swap_cols(IntMat& m, int a, int b) {
  for (int i = 0; i < m.rows(); ++i) std::swap(m(i, a), m(i, b));
}
// row[a] += q * row[b]
inline void add_row(IntMat& m, int a, int b, Int q) {
  for (int j = 0; j < m.cols(); ++j) m(a, j) += q * m(b, j);
}
inline void add_col(IntMat& m, int a, int b, Int q) {
  for (int i = 0; i < m.rows(); ++i) m(i, a) += q * m(i, b);
}
inline void negate_row(IntMat& m, int a) {
  for (int j = 0; j < m.cols(); ++j) m(a, j) = -m(a, j);
}
inline void negate_col(IntMat& m, int a) {
  for (int i = 0; i < m.rows(); ++i) m(i, a) = -m(i, a);
}

}  // namespace detail

/// Smith normal form with unimodular transforms, U*M*V = D.
inline SnfResult smith_normal_form(const IntMat& m_in) {
  using namespace detail;
  IntMat d = m_in;
  int nr = d.rows(), nc = d.cols();
  IntMat u = IntMat::identity(nr), ui = IntMat::identity(nr);
  IntMat v = IntMat::identity(nc), vi = IntMat::identity(nc);

  // Mirror every row op on u (and inverse op on ui), col op on v/vi.
  auto row_add = [&](int a, int b, Int q) {
    add_row(d, a, b, q);
    add_row(u, a, b, q);
    add_col(ui, b, a, -q);
  };
  auto col_add = [&](int a, int b, Int q) {
    add_col(d, a, b, q);
    add_col(v, a, b, q);
    add_row(vi, b, a, -q);
  };
  auto row_swap = [&](int a, int b) {
    swap_rows(d, a, b);
    swap_rows(u, a, b);
    swap_cols(ui, a, b);
  };
  auto col_swap = [&](int a, int b) {
    swap_cols(d, a, b);
    swap_cols(v, a, b);
    swap_rows(vi, a, b);
  };
  auto row_neg = [&](int a) {
    negate_row(d, a);
    negate_row(u, a);
    negate_col(ui, a);
  };

  int n = std::min(nr, nc);
  for (int t = 0; t < n; ++t) {
    // Find a pivot of minimal absolute value in the remaining block.
    for (;;) {
      int pi = -1, pj = -1;
      Int best = 0;
      for (int i = t; i < nr; ++i)
        for (int j = t; j < nc; ++j) {
          Int a = std::abs(d(i, j));
          if (a != 0 && (best == 0 || a < best)) {
            best = a;
            pi = i;
            pj = j;
          }
        }
      if (pi < 0) break;  // remaining block zero
      if (pi != t) row_swap(t, pi);
      if (pj != t) col_swap(t, pj);
      if (d(t, t) < 0) row_neg(t);

      bool clean = true;
      for (int i = t + 1; i < nr; ++i) {
        if (d(i, t) % d(t, t) != 0) clean = false;
        Int q = d(i, t) / d(t, t);
        if (q != 0) row_add(i, t, -q);
      }
      for (int j = t + 1; j < nc; ++j) {
        if (d(t, j) % d(t, t) != 0) clean = false;
        Int q = d(t, j) / d(t, t);
        if (q != 0) col_add(j, t, -q);
      }
      if (!clean) continue;  // remainders left behind, pick a new pivot

      // Row and column are clear; enforce divisibility of the rest.
      bool divides_all = true;
      for (int i = t + 1; i < nr && divides_all; ++i)
        for (int j = t + 1; j < nc; ++j)
          if (d(i, j) % d(t, t) != 0) {
            row_add(t, i, 1);  // fold the offending row in and redo
            divides_all = false;
            break;
          }
      if (divides_all) break;
    }
  }

  SnfResult res;
  res.u = std::move(u);
  res.u_inv = std::move(ui);
  res.v = std::move(v);
  res.v_inv = std::move(vi);
  res.divisors.resize(n);
  for (int i = 0; i < n; ++i) {
    res.divisors[i] = d(i, i);
    if (d(i, i) != 0) ++res.rank;
  }
  res.d = std::move(d);
  return res;
}

/// Rank of an integer matrix over the rationals.
inline int int_rank(const IntMat& m) { return smith_normal_form(m).rank; }

/// Solve M x = b over the integers; returns false when no integral solution.
inline bool solve_integer(const IntMat& m, const std::vector<Int>& b,
                          std::vector<Int>& x_out) {
  SnfResult s = smith_normal_form(m);
  std::vector<Int> c = s.u.apply(b);  // D y = U b, x = V y
  int n = std::min(m.rows(), m.cols());
  std::vector<Int> y(m.cols(), 0);
  for (int i = 0; i < m.rows(); ++i) {
    Int di = i < n ? s.divisors[i] : 0;
    if (di == 0) {
      if (c[i] != 0) return false;
    } else {
      if (c[i] % di != 0) return false;
      y[i] = c[i] / di;
    }
  }
  x_out = s.v.apply(y);
  return true;
}

}  // namespace gsk
