#pragma once
//
// Shared fixtures and independent oracles for the test suites. Everything
// here stays off the library's implementation paths on purpose: dense
// reconstructions, scalar loops and exhaustive scans.
//

#include <cstdint>
#include <vector>

#include "hmx/dense.hpp"
#include "hmx/rng.hpp"

namespace testutil {

inline hmx::DenseMatrix random_matrix(std::size_t rows, std::size_t cols,
                                      std::uint64_t seed) {
  hmx::Rng rng(seed);
  hmx::DenseMatrix a(rows, cols);
  for (double& x : a.entries) x = rng.gaussian();
  return a;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  hmx::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

// ||M^T M - I||_F, the orthonormality defect of M's columns
inline double ortho_defect(const hmx::DenseMatrix& m) {
  double s = 0.0;
  for (std::size_t a = 0; a < m.cols; ++a)
    for (std::size_t b = 0; b < m.cols; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < m.rows; ++i) dot += m.at(i, a) * m.at(i, b);
      const double target = a == b ? 1.0 : 0.0;
      s += (dot - target) * (dot - target);
    }
  return std::sqrt(s);
}

// dense rebuild U diag(sigma) V^T, the reconstruction oracle
inline hmx::DenseMatrix svd_rebuild(const hmx::DenseMatrix& u,
                                    const std::vector<double>& sigma,
                                    const hmx::DenseMatrix& v) {
  hmx::DenseMatrix a(u.rows, v.rows);
  for (std::size_t i = 0; i < u.rows; ++i)
    for (std::size_t j = 0; j < v.rows; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < sigma.size(); ++l)
        s += u.at(i, l) * sigma[l] * v.at(j, l);
      a.at(i, j) = s;
    }
  return a;
}

// exhaustive-scan oracle for the Frobenius-tail truncation rule
inline std::size_t truncation_rank_bruteforce(const std::vector<double>& sv,
                                              double eps) {
  for (std::size_t k = 0; k <= sv.size(); ++k) {
    double tail = 0.0;
    for (std::size_t i = k; i < sv.size(); ++i) tail += sv[i] * sv[i];
    if (std::sqrt(tail) <= eps) return k;
  }
  return sv.size();
}

} // namespace testutil
