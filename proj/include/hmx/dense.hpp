#pragma once
//
// Row-major dense matrix, the universal exchange type of the library,
// plus the elementary operations everything else consumes.
//

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmx {

struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries; // row-major, rows * cols

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), entries(r * c, 0.0) {}
  DenseMatrix(std::size_t r, std::size_t c, std::vector<double> e)
      : rows(r), cols(c), entries(std::move(e)) {
    if (entries.size() != rows * cols)
      throw std::invalid_argument("DenseMatrix: entry count mismatch");
  }

  double& at(std::size_t i, std::size_t j) { return entries[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }

  bool all_finite() const {
    for (double x : entries)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline void require_finite(const DenseMatrix& a, const char* where) {
  if (!a.all_finite())
    throw std::invalid_argument(std::string(where) + ": non-finite input entry");
}

inline double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.entries) s += x * x;
  return std::sqrt(s);
}

inline double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("frobenius_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const double d = a.entries[i] - b.entries[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline std::vector<double> matvec_dense(const DenseMatrix& a,
                                        std::span<const double> x) {
  if (x.size() != a.cols)
    throw std::invalid_argument("matvec_dense: dimension mismatch");
  std::vector<double> y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* row = a.entries.data() + i * a.cols;
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

inline std::vector<double> matvec_transposed(const DenseMatrix& a,
                                             std::span<const double> x) {
  if (x.size() != a.rows)
    throw std::invalid_argument("matvec_transposed: dimension mismatch");
  std::vector<double> y(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double xi = x[i];
    const double* row = a.entries.data() + i * a.cols;
    for (std::size_t j = 0; j < a.cols; ++j) y[j] += row[j] * xi;
  }
  return y;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("multiply: dimension mismatch");
  DenseMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.entries.data() + k * b.cols;
      double* crow = c.entries.data() + i * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

inline DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("subtract: dimension mismatch");
  DenseMatrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    c.entries[i] = a.entries[i] - b.entries[i];
  return c;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("add: dimension mismatch");
  DenseMatrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    c.entries[i] = a.entries[i] + b.entries[i];
  return c;
}

inline DenseMatrix extract_block(const DenseMatrix& a, std::size_t row0,
                                 std::size_t rows, std::size_t col0,
                                 std::size_t cols) {
  DenseMatrix b(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      b.at(i, j) = a.at(row0 + i, col0 + j);
  return b;
}

} // namespace hmx
