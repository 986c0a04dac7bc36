#pragma once
//
// Deterministic test-matrix families used by the experiment commands and
// the property suites.
//

#include <cstdint>
#include <stdexcept>
#include <string>

#include "hmx/dense.hpp"
#include "hmx/rng.hpp"

namespace hmx {

enum class MatrixKind { kernel_band, geometric_spectrum, rank_k, random_dense };

inline MatrixKind matrix_kind_from_string(const std::string& s) {
  if (s == "kernel_band") return MatrixKind::kernel_band;
  if (s == "geometric_spectrum") return MatrixKind::geometric_spectrum;
  if (s == "rank_k") return MatrixKind::rank_k;
  if (s == "random_dense") return MatrixKind::random_dense;
  throw std::invalid_argument("unknown matrix kind: " + s);
}

inline const char* to_string(MatrixKind k) {
  switch (k) {
    case MatrixKind::kernel_band: return "kernel_band";
    case MatrixKind::geometric_spectrum: return "geometric_spectrum";
    case MatrixKind::rank_k: return "rank_k";
    case MatrixKind::random_dense: return "random_dense";
  }
  return "?";
}

struct GeneratorParams {
  std::size_t rank = 5;        // rank_k
  double condition = 1.0e6;    // geometric_spectrum
};

namespace detail {

// seeded random orthogonal factor via modified Gram-Schmidt on a Gaussian
inline DenseMatrix random_orthogonal(std::size_t n, Rng& rng) {
  DenseMatrix q(n, n);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = rng.gaussian();
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t l = 0; l < j; ++l) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += q.at(i, l) * col[i];
        for (std::size_t i = 0; i < n; ++i) col[i] -= proj * q.at(i, l);
      }
    }
    double nrm = 0.0;
    for (double x : col) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < n; ++i) q.at(i, j) = col[i] / nrm;
  }
  return q;
}

} // namespace detail

inline DenseMatrix generate_matrix(MatrixKind kind, std::size_t n,
                                   const GeneratorParams& params,
                                   std::uint64_t seed) {
  switch (kind) {
    case MatrixKind::kernel_band: {
      DenseMatrix a(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double d = i > j ? double(i - j) : double(j - i);
          a.at(i, j) = 1.0 / (1.0 + d);
        }
      return a;
    }
    case MatrixKind::geometric_spectrum: {
      Rng rng(mix_seed(seed, 0x6e0u));
      DenseMatrix q = detail::random_orthogonal(n, rng);
      DenseMatrix qp = detail::random_orthogonal(n, rng);
      // A = Q diag(d) Qp^T with d geometric from 1 down to 1/condition
      std::vector<double> d(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : double(i) / double(n - 1);
        d[i] = std::pow(params.condition, -t);
      }
      DenseMatrix a(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0.0;
          for (std::size_t l = 0; l < n; ++l)
            s += q.at(i, l) * d[l] * qp.at(j, l);
          a.at(i, j) = s;
        }
      return a;
    }
    case MatrixKind::rank_k: {
      Rng rng(mix_seed(seed, 0x4aull));
      DenseMatrix a(n, n);
      for (std::size_t r = 0; r < params.rank; ++r) {
        std::vector<double> u(n), v(n);
        for (double& x : u) x = rng.gaussian();
        for (double& x : v) x = rng.gaussian();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) a.at(i, j) += u[i] * v[j];
      }
      return a;
    }
    case MatrixKind::random_dense: {
      Rng rng(mix_seed(seed, 0xd3ull));
      DenseMatrix a(n, n);
      for (double& x : a.entries) x = rng.gaussian();
      return a;
    }
  }
  throw std::invalid_argument("generate_matrix: bad kind");
}

} // namespace hmx
