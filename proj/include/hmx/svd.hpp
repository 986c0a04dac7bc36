#pragma once
//
// Deterministic dense factorizations and spectra. The SVD is a one-sided
// Jacobi with a fixed sweep order: no pivot randomization, so identical
// input bits always produce identical factors.
//

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "hmx/dense.hpp"
#include "hmx/rng.hpp"

namespace hmx {

struct SVDFactorization {
  DenseMatrix u;                       // m x r, orthonormal columns
  std::vector<double> singular_values; // nonincreasing, length r = min(m,n)
  DenseMatrix v;                       // n x r, orthonormal columns
};

struct SpectrumReport {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double condition_number = 1.0; // +inf when sigma_min == 0
  bool singular = false;
};

namespace detail {

// column-major scratch used by the Jacobi sweeps
struct ColMat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> d; // column-major

  ColMat(std::size_t r, std::size_t c) : rows(r), cols(c), d(r * c, 0.0) {}
  double* col(std::size_t j) { return d.data() + j * rows; }
  const double* col(std::size_t j) const { return d.data() + j * rows; }
};

inline double col_dot(const ColMat& m, std::size_t p, std::size_t q) {
  const double* a = m.col(p);
  const double* b = m.col(q);
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) s += a[i] * b[i];
  return s;
}

inline void rotate_cols(ColMat& m, std::size_t p, std::size_t q, double c,
                        double s) {
  double* a = m.col(p);
  double* b = m.col(q);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double ap = a[i];
    const double bq = b[i];
    a[i] = c * ap - s * bq;
    b[i] = s * ap + c * bq;
  }
}

// One-sided Jacobi on the columns of g (rows >= cols assumed by caller).
// On return g holds U*Sigma and v holds V.
inline void jacobi_orthogonalize(ColMat& g, ColMat& v) {
  const std::size_t n = g.cols;
  const double thresh = 1.0e-15;
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = col_dot(g, p, p);
        const double beta = col_dot(g, q, q);
        const double gamma = col_dot(g, p, q);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= thresh * std::sqrt(alpha * beta)) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t =
            (zeta >= 0.0 ? 1.0 : -1.0) /
            (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate_cols(g, p, q, c, s);
        rotate_cols(v, p, q, c, s);
        rotated = true;
      }
    }
    if (!rotated) break;
  }
}

// replaces zero columns of u (m x r, column-major) with unit vectors
// orthogonal to all other columns; candidates are taken from the canonical
// basis in index order, so the completion is deterministic
inline void complete_orthonormal(ColMat& u, const std::vector<bool>& is_zero) {
  const std::size_t m = u.rows;
  const std::size_t r = u.cols;
  std::size_t candidate = 0;
  for (std::size_t j = 0; j < r; ++j) {
    if (!is_zero[j]) continue;
    for (; candidate < m; ++candidate) {
      std::vector<double> w(m, 0.0);
      w[candidate] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < r; ++k) {
          if (k == j || (is_zero[k] && k > j)) continue;
          const double* uk = u.col(k);
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += uk[i] * w[i];
          for (std::size_t i = 0; i < m; ++i) w[i] -= proj * uk[i];
        }
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 0.5) {
        double* uj = u.col(j);
        for (std::size_t i = 0; i < m; ++i) uj[i] = w[i] / norm;
        ++candidate;
        break;
      }
    }
  }
}

} // namespace detail

// Full factorization A = U diag(sigma) V^T with r = min(rows, cols).
inline SVDFactorization svd(const DenseMatrix& a) {
  require_finite(a, "svd");
  if (a.rows == 0 || a.cols == 0)
    throw std::invalid_argument("svd: empty matrix");

  const bool transposed = a.rows < a.cols;
  const std::size_t m = transposed ? a.cols : a.rows;
  const std::size_t n = transposed ? a.rows : a.cols;

  detail::ColMat g(m, n);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) {
      if (transposed)
        g.col(i)[j] = a.at(i, j);
      else
        g.col(j)[i] = a.at(i, j);
    }

  detail::ColMat v(n, n);
  for (std::size_t j = 0; j < n; ++j) v.col(j)[j] = 1.0;

  detail::jacobi_orthogonalize(g, v);

  std::vector<double> sigma(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    const double* col = g.col(j);
    for (std::size_t i = 0; i < m; ++i) s += col[i] * col[i];
    sigma[j] = std::sqrt(s);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  detail::ColMat uu(m, n), vv(n, n);
  std::vector<double> sv(n);
  std::vector<bool> zero_col(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    sv[j] = sigma[src];
    const double* gc = g.col(src);
    double* uc = uu.col(j);
    if (sv[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) uc[i] = gc[i] / sv[j];
    } else {
      zero_col[j] = true;
    }
    const double* vc = v.col(src);
    double* vd = vv.col(j);
    for (std::size_t i = 0; i < n; ++i) vd[i] = vc[i];
  }
  detail::complete_orthonormal(uu, zero_col);

  SVDFactorization f;
  f.singular_values = std::move(sv);
  DenseMatrix big(m, n), small(n, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) big.at(i, j) = uu.col(j)[i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) small.at(i, j) = vv.col(j)[i];

  if (transposed) {
    f.u = std::move(small); // a.rows x r
    f.v = std::move(big);   // a.cols x r
  } else {
    f.u = std::move(big);
    f.v = std::move(small);
  }
  return f;
}

// Smallest k such that sqrt(sum_{i>k} sigma_i^2) <= epsilon. Input must be
// sorted nonincreasing. The tail is accumulated from the smallest values up
// so the scan is exact at epsilon = 0.
inline std::size_t truncation_rank(const std::vector<double>& sigma,
                                   double epsilon) {
  const double eps_sq = epsilon * epsilon;
  double tail = 0.0;
  std::size_t k = sigma.size();
  // walk from the back: tail(k-1) = tail(k) + sigma_k^2
  for (std::size_t i = sigma.size(); i-- > 0;) {
    const double next_tail = tail + sigma[i] * sigma[i];
    if (next_tail > eps_sq) break;
    tail = next_tail;
    k = i;
  }
  return k;
}

// sigma_max estimate via power iteration on A^T A; fixed start vector,
// capped at 500 iterations, Rayleigh-quotient tolerance 1e-12
inline double spectral_norm(const DenseMatrix& a) {
  require_finite(a, "spectral_norm");
  if (a.rows == 0 || a.cols == 0) return 0.0;
  Rng rng(0x5eedf00dULL);
  std::vector<double> x(a.cols);
  for (double& xi : x) xi = rng.uniform(-1.0, 1.0);
  double nx = 0.0;
  for (double xi : x) nx += xi * xi;
  nx = std::sqrt(nx);
  if (nx == 0.0) return 0.0;
  for (double& xi : x) xi /= nx;

  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    std::vector<double> w = matvec_dense(a, x);
    double wn = 0.0;
    for (double wi : w) wn += wi * wi;
    const double lambda_new = wn; // x unit: ||Ax||^2 = Rayleigh of A^T A
    std::vector<double> z = matvec_transposed(a, w);
    double zn = 0.0;
    for (double zi : z) zn += zi * zi;
    zn = std::sqrt(zn);
    if (zn == 0.0) return 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] / zn;
    if (std::abs(lambda_new - lambda) <= 1.0e-12 * std::max(lambda_new, 1.0e-300))
      return std::sqrt(lambda_new);
    lambda = lambda_new;
  }
  return std::sqrt(lambda);
}

inline SpectrumReport spectrum(const DenseMatrix& a) {
  const SVDFactorization f = svd(a);
  SpectrumReport r;
  r.sigma_max = f.singular_values.front();
  r.sigma_min = f.singular_values.back();
  if (r.sigma_min > 0.0) {
    r.condition_number = r.sigma_max / r.sigma_min;
  } else {
    r.condition_number = std::numeric_limits<double>::infinity();
    r.singular = true;
  }
  return r;
}

} // namespace hmx
