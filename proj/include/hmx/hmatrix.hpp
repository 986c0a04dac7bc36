#pragma once
//
// Adaptive, error-bounded hierarchical matrix construction and the
// operations on the resulting block tree. Blocks are refined through a
// pure quadtree wherever the local low-rank error exceeds the build
// tolerance; every admitted low-rank leaf carries a certified Frobenius
// error <= tol, which is what makes the tol*sqrt(n_r) global bound hold
// by construction.
//

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "hmx/dense.hpp"
#include "hmx/rng.hpp"
#include "hmx/svd.hpp"

namespace hmx {

struct BuildConfig {
  double epsilon_tol = 1.0e-6;
  std::size_t min_block = 16; // leaf-size floor
  std::size_t max_depth = 32;
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0; // exclusive
  std::size_t size() const { return end - begin; }
};

struct LowRankFactor {
  DenseMatrix u; // m x k, singular values folded in
  DenseMatrix v; // n x k
  double local_error = 0.0;
  std::size_t rank() const { return u.cols; }
};

struct BlockNode {
  enum class Kind { branch, low_rank, dense_leaf };

  IndexRange row_span;
  IndexRange col_span;
  Kind kind = Kind::dense_leaf;
  LowRankFactor factor;                                   // low_rank
  DenseMatrix block;                                      // dense_leaf
  std::array<std::shared_ptr<const BlockNode>, 4> children{}; // branch,
                                                              // row-major quadrants
};

struct HMatrix {
  std::shared_ptr<const BlockNode> root;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double tol = 0.0;
  std::size_t n_r = 0;            // number of low-rank leaves
  std::size_t stored_scalars = 0; // sum of k(m+n) and m*n over leaves
  std::size_t depth = 0;          // deepest leaf level, root = 0
};

struct CompressionReport {
  double compression_ratio = 0.0;
  double measured_error = 0.0; // ||A - H||_F, requires reference matrix
  double error_bound = 0.0;    // tol * sqrt(n_r)
  std::size_t n_r = 0;
  std::size_t depth = 0;
  double build_seconds = 0.0;
};

enum class CompressOutcome {
  admitted,          // factor meets tolerance and saves storage
  exceeds_tolerance, // no storage-saving rank reaches the tolerance
  not_cheaper        // a tolerance-meeting rank exists but does not save
};

struct CompressResult {
  CompressOutcome outcome = CompressOutcome::exceeds_tolerance;
  LowRankFactor factor;
};

namespace detail {

// largest k with k(m+n) < m*n, i.e. the ranks worth storing
inline std::size_t saving_rank_cap(std::size_t m, std::size_t n) {
  const std::size_t denom = m + n;
  const std::size_t cap = (m * n - 1) / denom; // floor((mn-1)/(m+n))
  return std::min(cap, std::min(m, n));
}

inline LowRankFactor make_rank_zero(std::size_t m, std::size_t n,
                                    double error) {
  LowRankFactor f;
  f.u = DenseMatrix(m, 0);
  f.v = DenseMatrix(n, 0);
  f.local_error = error;
  return f;
}

// ||block - u v^T||_F without forming the residual
inline double direct_residual(const DenseMatrix& block, const DenseMatrix& u,
                              const DenseMatrix& v) {
  const std::size_t m = block.rows, n = block.cols, k = u.cols;
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* urow = u.entries.data() + i * k;
    const double* brow = block.entries.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* vrow = v.entries.data() + j * k;
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += urow[l] * vrow[l];
      const double d = brow[j] - acc;
      s += d * d;
    }
  }
  return std::sqrt(s);
}

// exact route: full Jacobi SVD, Frobenius-tail truncation
inline CompressResult compress_exact(const DenseMatrix& block,
                                     double epsilon) {
  const std::size_t m = block.rows, n = block.cols;
  const SVDFactorization f = svd(block);
  const std::size_t k = truncation_rank(f.singular_values, epsilon);
  const std::size_t cap = saving_rank_cap(m, n);

  CompressResult res;
  if (k > cap) {
    res.outcome = k < std::min(m, n) ? CompressOutcome::not_cheaper
                                     : CompressOutcome::exceeds_tolerance;
    return res;
  }
  double tail_sq = 0.0;
  for (std::size_t i = f.singular_values.size(); i-- > k;)
    tail_sq += f.singular_values[i] * f.singular_values[i];

  LowRankFactor lr;
  lr.u = DenseMatrix(m, k);
  lr.v = DenseMatrix(n, k);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l)
      lr.u.at(i, l) = f.u.at(i, l) * f.singular_values[l];
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < k; ++l) lr.v.at(j, l) = f.v.at(j, l);
  lr.local_error = std::sqrt(tail_sq);
  res.outcome = CompressOutcome::admitted;
  res.factor = std::move(lr);
  return res;
}

// randomized route for blocks too large for a full Jacobi SVD: a seeded
// Gaussian range sketch proposes a rank, then the Frobenius residual of the
// candidate factor is computed directly, so admission is still certified
// and never optimistic. Failure here only means "subdivide", which keeps
// every bound intact.
inline CompressResult compress_sketched(const DenseMatrix& block,
                                        double epsilon) {
  const std::size_t m = block.rows, n = block.cols;
  const std::size_t cap = saving_rank_cap(m, n);
  const double norm_f = frobenius_norm(block);
  CompressResult res;
  if (norm_f <= epsilon) {
    res.outcome = CompressOutcome::admitted;
    res.factor = make_rank_zero(m, n, norm_f);
    return res;
  }

  const std::size_t p_max = std::min<std::size_t>(std::min(m, n), 192);
  for (std::size_t p = 40; ; p = std::min(p * 2, p_max)) {
    Rng rng(mix_seed(m, n, p, 0xa11ceULL));
    DenseMatrix omega(n, p);
    for (double& x : omega.entries) x = rng.gaussian();

    DenseMatrix y = multiply(block, omega); // m x p

    // modified Gram-Schmidt, two passes, dropping dependent columns
    DenseMatrix q(m, p);
    std::size_t nq = 0;
    std::vector<double> col(m);
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < m; ++i) col[i] = y.at(i, j);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t l = 0; l < nq; ++l) {
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += q.at(i, l) * col[i];
          for (std::size_t i = 0; i < m; ++i) col[i] -= proj * q.at(i, l);
        }
      }
      double nrm = 0.0;
      for (double x : col) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 1.0e-13 * norm_f) {
        for (std::size_t i = 0; i < m; ++i) q.at(i, nq) = col[i] / nrm;
        ++nq;
      }
    }

    // b = Q^T A (nq x n), gram = b b^T (nq x nq)
    DenseMatrix b(nq, n);
    for (std::size_t l = 0; l < nq; ++l)
      for (std::size_t i = 0; i < m; ++i) {
        const double qil = q.at(i, l);
        if (qil == 0.0) continue;
        const double* arow = block.entries.data() + i * n;
        double* brow = b.entries.data() + l * n;
        for (std::size_t j = 0; j < n; ++j) brow[j] += qil * arow[j];
      }
    DenseMatrix gram(nq, nq);
    for (std::size_t r = 0; r < nq; ++r)
      for (std::size_t c = r; c < nq; ++c) {
        double s = 0.0;
        const double* br = b.entries.data() + r * n;
        const double* bc = b.entries.data() + c * n;
        for (std::size_t j = 0; j < n; ++j) s += br[j] * bc[j];
        gram.at(r, c) = s;
        gram.at(c, r) = s;
      }
    const SVDFactorization ge = svd(gram); // PSD: singular values = eigenvalues

    std::vector<double> lambda = ge.singular_values;
    const double lam_max = lambda.empty() ? 0.0 : lambda.front();
    std::size_t num_rank = 0;
    while (num_rank < lambda.size() &&
           lambda[num_rank] > lam_max * 1.0e-26 && lambda[num_rank] > 0.0)
      ++num_rank;

    const std::size_t k_cap = std::min({cap, nq, num_rank});
    const double total_sq = norm_f * norm_f;
    const double target_sq = 0.81 * epsilon * epsilon;
    std::vector<double> captured(k_cap + 1, 0.0);
    for (std::size_t k = 1; k <= k_cap; ++k)
      captured[k] = captured[k - 1] + lambda[k - 1];
    std::size_t k_est = k_cap + 1; // sentinel: not found
    for (std::size_t k = 0; k <= k_cap; ++k) {
      if (total_sq - captured[k] <= target_sq) {
        k_est = k;
        break;
      }
    }

    if (k_est <= k_cap) {
      for (int attempt = 0; attempt < 3; ++attempt) {
        const std::size_t k = std::min(k_est + 8 * std::size_t(attempt), k_cap);
        if (k == 0) {
          res.outcome = CompressOutcome::admitted;
          res.factor = make_rank_zero(m, n, norm_f);
          return res;
        }
        LowRankFactor lr;
        lr.u = DenseMatrix(m, k);
        lr.v = DenseMatrix(n, k);
        for (std::size_t l = 0; l < k; ++l) {
          const double sig = std::sqrt(lambda[l]);
          // u_l = Q * w_l * sigma_l ; v_l = B^T w_l / sigma_l
          for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t r = 0; r < nq; ++r)
              s += q.at(i, r) * ge.u.at(r, l);
            lr.u.at(i, l) = s * sig;
          }
          for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < nq; ++r)
              s += b.at(r, j) * ge.u.at(r, l);
            lr.v.at(j, l) = s / sig;
          }
        }
        const double err = direct_residual(block, lr.u, lr.v);
        if (err <= epsilon) {
          lr.local_error = err;
          res.outcome = CompressOutcome::admitted;
          res.factor = std::move(lr);
          return res;
        }
        if (k == k_cap) break;
      }
    }

    // escalate the sketch only while the tolerance looks within reach
    double best_tail_sq = total_sq - captured[k_cap];
    if (best_tail_sq < 0.0) best_tail_sq = 0.0;
    const bool promising = best_tail_sq <= 64.0 * epsilon * epsilon;
    if (p >= p_max || !promising) {
      res.outcome = CompressOutcome::exceeds_tolerance;
      return res;
    }
  }
}

constexpr std::size_t kExactSvdLimit = 128;

} // namespace detail

// Low-rank attempt on one block: SVD plus Frobenius-tail truncation, with
// admission requiring both local error <= epsilon and strict storage
// savings k(m+n) < mn.
inline CompressResult compress_block(const DenseMatrix& block,
                                     double epsilon) {
  require_finite(block, "compress_block");
  if (block.rows == 0 || block.cols == 0)
    throw std::invalid_argument("compress_block: empty block");
  const double norm_f = frobenius_norm(block);
  if (norm_f <= epsilon) {
    CompressResult res;
    res.outcome = CompressOutcome::admitted;
    res.factor = detail::make_rank_zero(block.rows, block.cols, norm_f);
    return res;
  }
  if (std::min(block.rows, block.cols) <= detail::kExactSvdLimit)
    return detail::compress_exact(block, epsilon);
  return detail::compress_sketched(block, epsilon);
}

namespace detail {

inline std::pair<IndexRange, IndexRange> split_span(const IndexRange& r) {
  const std::size_t mid = r.begin + (r.size() + 1) / 2; // ceil/floor split
  return {{r.begin, mid}, {mid, r.end}};
}

inline std::shared_ptr<const BlockNode> build_node(const DenseMatrix& a,
                                                   const BuildConfig& cfg,
                                                   IndexRange rows,
                                                   IndexRange cols,
                                                   std::size_t depth) {
  auto node = std::make_shared<BlockNode>();
  node->row_span = rows;
  node->col_span = cols;

  DenseMatrix block =
      extract_block(a, rows.begin, rows.size(), cols.begin, cols.size());
  CompressResult res = compress_block(block, cfg.epsilon_tol);
  if (res.outcome == CompressOutcome::admitted) {
    node->kind = BlockNode::Kind::low_rank;
    node->factor = std::move(res.factor);
    return node;
  }

  const bool splittable = rows.size() >= 2 * cfg.min_block &&
                          cols.size() >= 2 * cfg.min_block &&
                          depth < cfg.max_depth;
  if (!splittable) {
    node->kind = BlockNode::Kind::dense_leaf;
    node->block = std::move(block);
    return node;
  }

  const auto [r0, r1] = split_span(rows);
  const auto [c0, c1] = split_span(cols);
  node->kind = BlockNode::Kind::branch;
  node->children[0] = build_node(a, cfg, r0, c0, depth + 1);
  node->children[1] = build_node(a, cfg, r0, c1, depth + 1);
  node->children[2] = build_node(a, cfg, r1, c0, depth + 1);
  node->children[3] = build_node(a, cfg, r1, c1, depth + 1);
  return node;
}

template <typename F>
void for_each_leaf(const BlockNode& node, std::size_t depth, F&& fn) {
  if (node.kind == BlockNode::Kind::branch) {
    for (const auto& c : node.children) for_each_leaf(*c, depth + 1, fn);
  } else {
    fn(node, depth);
  }
}

inline void recount(HMatrix& h) {
  h.n_r = 0;
  h.stored_scalars = 0;
  h.depth = 0;
  for_each_leaf(*h.root, 0, [&](const BlockNode& leaf, std::size_t depth) {
    const std::size_t m = leaf.row_span.size();
    const std::size_t n = leaf.col_span.size();
    if (leaf.kind == BlockNode::Kind::low_rank) {
      ++h.n_r;
      h.stored_scalars += leaf.factor.rank() * (m + n);
    } else {
      h.stored_scalars += m * n;
    }
    h.depth = std::max(h.depth, depth);
  });
}

} // namespace detail

inline HMatrix build_adaptive(const DenseMatrix& a, const BuildConfig& cfg) {
  require_finite(a, "build_adaptive");
  if (a.rows == 0 || a.cols == 0)
    throw std::invalid_argument("build_adaptive: empty matrix");
  if (cfg.epsilon_tol <= 0.0)
    throw std::invalid_argument("build_adaptive: epsilon_tol must be positive");
  if (cfg.min_block < 2)
    throw std::invalid_argument("build_adaptive: min_block must be >= 2");

  HMatrix h;
  h.rows = a.rows;
  h.cols = a.cols;
  h.tol = cfg.epsilon_tol;
  h.root = detail::build_node(a, cfg, {0, a.rows}, {0, a.cols}, 0);
  detail::recount(h);
  return h;
}

namespace detail {

inline void hmatvec_node(const BlockNode& node, std::span<const double> x,
                         std::span<double> y) {
  const std::size_t r0 = node.row_span.begin;
  const std::size_t c0 = node.col_span.begin;
  switch (node.kind) {
    case BlockNode::Kind::branch:
      for (const auto& c : node.children) hmatvec_node(*c, x, y);
      break;
    case BlockNode::Kind::dense_leaf: {
      const DenseMatrix& blk = node.block;
      for (std::size_t i = 0; i < blk.rows; ++i) {
        const double* row = blk.entries.data() + i * blk.cols;
        double s = 0.0;
        for (std::size_t j = 0; j < blk.cols; ++j) s += row[j] * x[c0 + j];
        y[r0 + i] += s;
      }
      break;
    }
    case BlockNode::Kind::low_rank: {
      const DenseMatrix& u = node.factor.u;
      const DenseMatrix& v = node.factor.v;
      const std::size_t k = u.cols;
      if (k == 0) break;
      std::vector<double> t(k, 0.0); // t = V^T x
      for (std::size_t j = 0; j < v.rows; ++j) {
        const double xj = x[c0 + j];
        const double* vrow = v.entries.data() + j * k;
        for (std::size_t l = 0; l < k; ++l) t[l] += vrow[l] * xj;
      }
      for (std::size_t i = 0; i < u.rows; ++i) {
        const double* urow = u.entries.data() + i * k;
        double s = 0.0;
        for (std::size_t l = 0; l < k; ++l) s += urow[l] * t[l];
        y[r0 + i] += s;
      }
      break;
    }
  }
}

} // namespace detail

inline std::vector<double> hmatvec(const HMatrix& h,
                                   std::span<const double> x) {
  if (x.size() != h.cols)
    throw std::invalid_argument("hmatvec: dimension mismatch");
  std::vector<double> y(h.rows, 0.0);
  detail::hmatvec_node(*h.root, x, std::span<double>(y));
  return y;
}

inline DenseMatrix reconstruct(const HMatrix& h) {
  DenseMatrix a(h.rows, h.cols);
  detail::for_each_leaf(*h.root, 0, [&](const BlockNode& leaf, std::size_t) {
    const std::size_t r0 = leaf.row_span.begin;
    const std::size_t c0 = leaf.col_span.begin;
    const std::size_t m = leaf.row_span.size();
    const std::size_t n = leaf.col_span.size();
    if (leaf.kind == BlockNode::Kind::dense_leaf) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          a.at(r0 + i, c0 + j) = leaf.block.at(i, j);
    } else {
      const DenseMatrix& u = leaf.factor.u;
      const DenseMatrix& v = leaf.factor.v;
      const std::size_t k = u.cols;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0.0;
          for (std::size_t l = 0; l < k; ++l)
            s += u.at(i, l) * v.at(j, l);
          a.at(r0 + i, c0 + j) = s;
        }
    }
  });
  return a;
}

inline double error_bound(const HMatrix& h) {
  return h.tol * std::sqrt(static_cast<double>(h.n_r));
}

struct ErrorDecomposition {
  double global = 0.0;   // ||A - reconstruct(H)||_F
  double leaf_sum = 0.0; // sum of per-leaf Frobenius errors
};

inline ErrorDecomposition measured_error(const HMatrix& h,
                                         const DenseMatrix& a) {
  if (a.rows != h.rows || a.cols != h.cols)
    throw std::invalid_argument("measured_error: dimension mismatch");
  const DenseMatrix r = reconstruct(h);
  ErrorDecomposition e;
  e.global = frobenius_distance(a, r);
  detail::for_each_leaf(*h.root, 0, [&](const BlockNode& leaf, std::size_t) {
    double s = 0.0;
    const std::size_t r0 = leaf.row_span.begin;
    const std::size_t c0 = leaf.col_span.begin;
    for (std::size_t i = 0; i < leaf.row_span.size(); ++i)
      for (std::size_t j = 0; j < leaf.col_span.size(); ++j) {
        const double d = a.at(r0 + i, c0 + j) - r.at(r0 + i, c0 + j);
        s += d * d;
      }
    e.leaf_sum += std::sqrt(s);
  });
  if (e.global > e.leaf_sum + 1.0e-9 * (1.0 + frobenius_norm(a)))
    throw std::logic_error("measured_error: triangle inequality violated");
  return e;
}

inline CompressionReport storage_stats(const HMatrix& h) {
  CompressionReport rep;
  rep.compression_ratio = static_cast<double>(h.stored_scalars) /
                          (static_cast<double>(h.rows) * h.cols);
  rep.error_bound = error_bound(h);
  rep.n_r = h.n_r;
  rep.depth = h.depth;
  return rep;
}

inline CompressionReport storage_stats(const HMatrix& h,
                                       const DenseMatrix& a) {
  CompressionReport rep = storage_stats(h);
  rep.measured_error = measured_error(h, a).global;
  return rep;
}

// per-level maxima of recomputed leaf errors, levels with leaves only
inline std::vector<std::pair<std::size_t, double>> depth_error_profile(
    const HMatrix& h, const DenseMatrix& a) {
  if (a.rows != h.rows || a.cols != h.cols)
    throw std::invalid_argument("depth_error_profile: dimension mismatch");
  std::vector<double> level_max;
  std::vector<bool> level_present;
  detail::for_each_leaf(*h.root, 0, [&](const BlockNode& leaf,
                                        std::size_t depth) {
    if (level_max.size() <= depth) {
      level_max.resize(depth + 1, 0.0);
      level_present.resize(depth + 1, false);
    }
    const std::size_t r0 = leaf.row_span.begin;
    const std::size_t c0 = leaf.col_span.begin;
    const std::size_t m = leaf.row_span.size();
    const std::size_t n = leaf.col_span.size();
    double err = 0.0;
    if (leaf.kind == BlockNode::Kind::low_rank) {
      DenseMatrix blk = extract_block(a, r0, m, c0, n);
      err = detail::direct_residual(blk, leaf.factor.u, leaf.factor.v);
    }
    level_max[depth] = std::max(level_max[depth], err);
    level_present[depth] = true;
  });
  std::vector<std::pair<std::size_t, double>> profile;
  for (std::size_t p = 0; p < level_max.size(); ++p)
    if (level_present[p]) profile.emplace_back(p, level_max[p]);
  return profile;
}

inline std::size_t rank_sum(const HMatrix& h) {
  std::size_t total = 0;
  detail::for_each_leaf(*h.root, 0, [&](const BlockNode& leaf, std::size_t) {
    if (leaf.kind == BlockNode::Kind::low_rank)
      total += leaf.factor.rank();
    else
      total += std::min(leaf.row_span.size(), leaf.col_span.size());
  });
  return total;
}

namespace detail {

// recompression of one low-rank leaf against new block content, keeping
// the tolerance; falls back to an exact dense copy when certification at
// the sketch budget is impossible
inline std::shared_ptr<const BlockNode> rebuild_leaf(
    const BlockNode& leaf, const DenseMatrix& block, double tol) {
  auto node = std::make_shared<BlockNode>();
  node->row_span = leaf.row_span;
  node->col_span = leaf.col_span;
  if (leaf.kind == BlockNode::Kind::dense_leaf) {
    node->kind = BlockNode::Kind::dense_leaf;
    node->block = block;
    return node;
  }
  const std::size_t m = block.rows, n = block.cols;
  const double norm_f = frobenius_norm(block);
  if (norm_f <= tol) {
    node->kind = BlockNode::Kind::low_rank;
    node->factor = make_rank_zero(m, n, norm_f);
    return node;
  }
  if (std::min(m, n) <= 512) {
    const SVDFactorization f = svd(block);
    const std::size_t k = truncation_rank(f.singular_values, tol);
    double tail_sq = 0.0;
    for (std::size_t i = f.singular_values.size(); i-- > k;)
      tail_sq += f.singular_values[i] * f.singular_values[i];
    LowRankFactor lr;
    lr.u = DenseMatrix(m, k);
    lr.v = DenseMatrix(n, k);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t l = 0; l < k; ++l)
        lr.u.at(i, l) = f.u.at(i, l) * f.singular_values[l];
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < k; ++l) lr.v.at(j, l) = f.v.at(j, l);
    lr.local_error = std::sqrt(tail_sq);
    node->kind = BlockNode::Kind::low_rank;
    node->factor = std::move(lr);
    return node;
  }
  CompressResult res = compress_sketched(block, tol);
  if (res.outcome == CompressOutcome::admitted) {
    node->kind = BlockNode::Kind::low_rank;
    node->factor = std::move(res.factor);
  } else {
    node->kind = BlockNode::Kind::dense_leaf;
    node->block = block;
  }
  return node;
}

inline std::shared_ptr<const BlockNode> rebuild_node(
    const BlockNode& node, const DenseMatrix& a, double tol) {
  if (node.kind == BlockNode::Kind::branch) {
    auto out = std::make_shared<BlockNode>();
    out->row_span = node.row_span;
    out->col_span = node.col_span;
    out->kind = BlockNode::Kind::branch;
    for (int i = 0; i < 4; ++i)
      out->children[i] = rebuild_node(*node.children[i], a, tol);
    return out;
  }
  DenseMatrix block =
      extract_block(a, node.row_span.begin, node.row_span.size(),
                    node.col_span.begin, node.col_span.size());
  return rebuild_leaf(node, block, tol);
}

} // namespace detail

// Reuses H's block partition and recompresses every leaf from the
// perturbed matrix at the same tolerance.
inline HMatrix rebuild_on_perturbed(const HMatrix& h,
                                    const DenseMatrix& a_perturbed) {
  if (a_perturbed.rows != h.rows || a_perturbed.cols != h.cols)
    throw std::invalid_argument("rebuild_on_perturbed: dimension mismatch");
  require_finite(a_perturbed, "rebuild_on_perturbed");
  HMatrix out;
  out.rows = h.rows;
  out.cols = h.cols;
  out.tol = h.tol;
  out.root = detail::rebuild_node(*h.root, a_perturbed, h.tol);
  detail::recount(out);
  return out;
}

struct SpectralDiagnostics {
  double kappa_a = 0.0;
  double kappa_h = 0.0;
  double tau_measured = 0.0; // ||A - reconstruct(H)||_2
  double sigma_min_a = 0.0;
  double sigma_k_eff = 0.0;  // sigma_min of reconstruct(H)
  double bound_thm1c = 0.0;  // kappa(A) (1 + tau/(sigma_min(A) - tau))
  double bound_thm3 = 0.0;   // kappa(A) (1 + tau/sigma_k_eff)
  bool thm1c_applicable = false;
  bool thm3_applicable = false;
  bool pass_thm1c = true; // vacuously true when inapplicable
  bool pass_thm3 = true;
};

inline SpectralDiagnostics spectral_diagnostics(const HMatrix& h,
                                                const DenseMatrix& a) {
  if (a.rows != h.rows || a.cols != h.cols)
    throw std::invalid_argument("spectral_diagnostics: dimension mismatch");
  const DenseMatrix r = reconstruct(h);
  const SpectrumReport sa = spectrum(a);
  const SpectrumReport sh = spectrum(r);
  SpectralDiagnostics d;
  d.kappa_a = sa.condition_number;
  d.kappa_h = sh.condition_number;
  d.sigma_min_a = sa.sigma_min;
  d.sigma_k_eff = sh.sigma_min;
  d.tau_measured = spectral_norm(subtract(a, r));

  d.thm1c_applicable = !sa.singular && sa.sigma_min > d.tau_measured;
  if (d.thm1c_applicable) {
    d.bound_thm1c = sa.condition_number *
                    (1.0 + d.tau_measured / (sa.sigma_min - d.tau_measured));
    d.pass_thm1c = d.kappa_h <= d.bound_thm1c * (1.0 + 1.0e-6);
  }
  d.thm3_applicable = !sa.singular && d.sigma_k_eff > 0.0;
  if (d.thm3_applicable) {
    d.bound_thm3 =
        sa.condition_number * (1.0 + d.tau_measured / d.sigma_k_eff);
    d.pass_thm3 = d.kappa_h <= d.bound_thm3 * (1.0 + 1.0e-6);
  }
  return d;
}

} // namespace hmx
