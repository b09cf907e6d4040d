#pragma once

#include <cmath>
#include <cstddef>
#include <type_traits>
#include <utility>
#include <vector>

#include "nearrat/errors.hpp"
#include "nearrat/rational.hpp"

namespace nearrat {

// Small dense row-major matrix. T is double, long double or Rational; the
// exact instantiation is what the structured-matrix identities are checked in.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, T(0)) {}

  static Matrix identity(int k) {
    Matrix m(k, k);
    for (int i = 0; i < k; ++i) m(i, i) = T(1);
    return m;
  }

  static Matrix diagonal(const std::vector<T>& diag) {
    const int k = static_cast<int>(diag.size());
    Matrix m(k, k);
    for (int i = 0; i < k; ++i) m(i, i) = diag[i];
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  T& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  const T& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  std::vector<T> column(int j) const {
    std::vector<T> c(rows_);
    for (int i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix operator*(const Matrix& o) const {
    if (cols_ != o.rows_) throw InvalidArgument("matrix product: dimension mismatch");
    Matrix r(rows_, o.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        const T& a = (*this)(i, k);
        if (a == T(0)) continue;
        for (int j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
      }
    return r;
  }

  std::vector<T> operator*(const std::vector<T>& v) const {
    if (static_cast<int>(v.size()) != cols_) throw InvalidArgument("matrix-vector product: dimension mismatch");
    std::vector<T> r(rows_, T(0));
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) r[i] += (*this)(i, j) * v[j];
    return r;
  }

  Matrix operator*(const T& s) const {
    Matrix r = *this;
    for (auto& x : r.data_) x *= s;
    return r;
  }

  Matrix operator-(const Matrix& o) const {
    Matrix r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] -= o.data_[i];
    return r;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

  // Gaussian elimination. Floating types use partial pivoting; Rational picks
  // the first nonzero pivot.
  T determinant() const {
    if (!square()) throw InvalidArgument("determinant of non-square matrix");
    Matrix a = *this;
    T det(1);
    for (int c = 0; c < rows_; ++c) {
      int piv = pivot_row(a, c);
      if (piv < 0) return T(0);
      if (piv != c) {
        a.swap_rows(piv, c);
        det = -det;
      }
      det *= a(c, c);
      for (int r = c + 1; r < rows_; ++r) {
        if (a(r, c) == T(0)) continue;
        T f = a(r, c) / a(c, c);
        for (int j = c; j < cols_; ++j) a(r, j) -= f * a(c, j);
      }
    }
    return det;
  }

  Matrix inverse() const {
    if (!square()) throw InvalidArgument("inverse of non-square matrix");
    const int k = rows_;
    Matrix a = *this;
    Matrix inv = identity(k);
    for (int c = 0; c < k; ++c) {
      int piv = pivot_row(a, c);
      if (piv < 0) throw SingularMatrix("matrix is singular");
      a.swap_rows(piv, c);
      inv.swap_rows(piv, c);
      T p = a(c, c);
      for (int j = 0; j < k; ++j) {
        a(c, j) /= p;
        inv(c, j) /= p;
      }
      for (int r = 0; r < k; ++r) {
        if (r == c || a(r, c) == T(0)) continue;
        T f = a(r, c);
        for (int j = 0; j < k; ++j) {
          a(r, j) -= f * a(c, j);
          inv(r, j) -= f * inv(c, j);
        }
      }
    }
    return inv;
  }

  void swap_rows(int i, int j) {
    if (i == j) return;
    for (int c = 0; c < cols_; ++c) std::swap((*this)(i, c), (*this)(j, c));
  }

  const std::vector<T>& data() const { return data_; }

 private:
  static int pivot_row(const Matrix& a, int c) {
    if constexpr (std::is_floating_point_v<T>) {
      int best = -1;
      T best_abs(0);
      for (int r = c; r < a.rows_; ++r) {
        T v = std::abs(a(r, c));
        if (v > best_abs) {
          best_abs = v;
          best = r;
        }
      }
      return best;
    } else {
      for (int r = c; r < a.rows_; ++r)
        if (a(r, c) != T(0)) return r;
      return -1;
    }
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

template <class T>
Matrix<double> to_double(const Matrix<T>& m) {
  Matrix<double> r(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      if constexpr (std::is_same_v<T, Rational>)
        r(i, j) = m(i, j).get_d();
      else
        r(i, j) = static_cast<double>(m(i, j));
    }
  return r;
}

// Largest entrywise absolute difference.
inline double max_abs_diff(const Matrix<double>& a, const Matrix<double>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace nearrat
