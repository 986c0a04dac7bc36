#pragma once
//
// Comparison compressors: global truncated SVD, magnitude pruning and
// uniform quantization, plus the layerwise error-propagation and
// compression/accuracy sweep experiments.
//

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmx/dense.hpp"
#include "hmx/hmatrix.hpp"
#include "hmx/nn.hpp"
#include "hmx/svd.hpp"

namespace hmx {

enum class CompressorMethod { hmatrix, svd_global, prune, quantize };

inline const char* to_string(CompressorMethod m) {
  switch (m) {
    case CompressorMethod::hmatrix: return "hmatrix";
    case CompressorMethod::svd_global: return "svd_global";
    case CompressorMethod::prune: return "prune";
    case CompressorMethod::quantize: return "quantize";
  }
  return "?";
}

struct CompressorSpec {
  CompressorMethod method = CompressorMethod::hmatrix;
  // epsilon for hmatrix / svd_global, sparsity in [0,1) for prune,
  // bit width in {2..16} for quantize
  double parameter = 1.0e-3;
};

inline void validate(const CompressorSpec& spec) {
  switch (spec.method) {
    case CompressorMethod::hmatrix:
    case CompressorMethod::svd_global:
      if (!(spec.parameter > 0.0))
        throw std::invalid_argument("CompressorSpec: epsilon must be positive");
      break;
    case CompressorMethod::prune:
      if (!(spec.parameter >= 0.0 && spec.parameter < 1.0))
        throw std::invalid_argument("CompressorSpec: sparsity must be in [0,1)");
      break;
    case CompressorMethod::quantize: {
      const double b = spec.parameter;
      if (b != std::floor(b) || b < 2.0 || b > 16.0)
        throw std::invalid_argument("CompressorSpec: bits must be in {2..16}");
      break;
    }
  }
}

struct BaselineReport {
  std::size_t rank = 0;          // svd_global
  std::size_t nonzeros = 0;      // prune
  double compression_ratio = 1.0;
  double error_fro = 0.0;        // ||W - W'||_F
};

struct CompressedMatrix {
  DenseMatrix matrix;
  BaselineReport report;
};

// single truncated SVD of the whole matrix at Frobenius-tail epsilon
inline CompressedMatrix svd_compress_global(const DenseMatrix& w,
                                            double epsilon) {
  require_finite(w, "svd_compress_global");
  const SVDFactorization f = svd(w);
  const std::size_t k = truncation_rank(f.singular_values, epsilon);
  DenseMatrix out(w.rows, w.cols);
  for (std::size_t i = 0; i < w.rows; ++i)
    for (std::size_t j = 0; j < w.cols; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l)
        s += f.u.at(i, l) * f.singular_values[l] * f.v.at(j, l);
      out.at(i, j) = s;
    }
  CompressedMatrix c;
  c.report.rank = k;
  c.report.compression_ratio =
      static_cast<double>(k * (w.rows + w.cols)) /
      (static_cast<double>(w.rows) * w.cols);
  c.report.error_fro = frobenius_distance(w, out);
  c.matrix = std::move(out);
  return c;
}

// zero out the floor(sparsity*mn) smallest-magnitude entries, ties broken
// by row-major index; the ratio counts surviving values only
inline CompressedMatrix prune_magnitude(const DenseMatrix& w,
                                        double sparsity) {
  require_finite(w, "prune_magnitude");
  if (!(sparsity >= 0.0 && sparsity < 1.0))
    throw std::invalid_argument("prune_magnitude: sparsity must be in [0,1)");
  const std::size_t total = w.entries.size();
  const std::size_t drop =
      static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(total)));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(w.entries[a]);
    const double mb = std::abs(w.entries[b]);
    return ma != mb ? ma < mb : a < b;
  });
  CompressedMatrix c;
  c.matrix = w;
  for (std::size_t i = 0; i < drop; ++i) c.matrix.entries[order[i]] = 0.0;
  c.report.nonzeros = total - drop;
  c.report.compression_ratio =
      static_cast<double>(total - drop) / static_cast<double>(total);
  c.report.error_fro = frobenius_distance(w, c.matrix);
  return c;
}

// symmetric uniform quantization with round-to-nearest-even levels;
// storage ratio is modeled as bits/64 since values are stored dequantized
inline CompressedMatrix quantize_uniform(const DenseMatrix& w, int bits) {
  require_finite(w, "quantize_uniform");
  if (bits < 2 || bits > 16)
    throw std::invalid_argument("quantize_uniform: bits must be in {2..16}");
  double max_abs = 0.0;
  for (double x : w.entries) max_abs = std::max(max_abs, std::abs(x));
  const double levels = static_cast<double>((1 << (bits - 1)) - 1);
  CompressedMatrix c;
  c.matrix = DenseMatrix(w.rows, w.cols);
  if (max_abs > 0.0) {
    const double scale = max_abs / levels;
    for (std::size_t i = 0; i < w.entries.size(); ++i) {
      double q = std::nearbyint(w.entries[i] / scale); // ties to even
      q = std::clamp(q, -levels, levels);
      c.matrix.entries[i] = q * scale;
    }
  }
  c.report.compression_ratio = static_cast<double>(bits) / 64.0;
  c.report.error_fro = frobenius_distance(w, c.matrix);
  return c;
}

namespace detail {

struct AppliedLayer {
  DenseMatrix weight;
  double ratio = 1.0;
};

// apply one compressor to one dense weight, returning the dense result and
// its modeled storage ratio
inline AppliedLayer apply_compressor(const DenseMatrix& w,
                                     const CompressorSpec& spec) {
  AppliedLayer out;
  switch (spec.method) {
    case CompressorMethod::hmatrix: {
      BuildConfig cfg;
      cfg.epsilon_tol = spec.parameter;
      HMatrix h = build_adaptive(w, cfg);
      out.weight = reconstruct(h);
      out.ratio = static_cast<double>(h.stored_scalars) /
                  (static_cast<double>(h.rows) * h.cols);
      break;
    }
    case CompressorMethod::svd_global: {
      CompressedMatrix c = svd_compress_global(w, spec.parameter);
      out.weight = std::move(c.matrix);
      out.ratio = c.report.compression_ratio;
      break;
    }
    case CompressorMethod::prune: {
      CompressedMatrix c = prune_magnitude(w, spec.parameter);
      out.weight = std::move(c.matrix);
      out.ratio = c.report.compression_ratio;
      break;
    }
    case CompressorMethod::quantize: {
      CompressedMatrix c =
          quantize_uniform(w, static_cast<int>(spec.parameter));
      out.weight = std::move(c.matrix);
      out.ratio = c.report.compression_ratio;
      break;
    }
  }
  return out;
}

} // namespace detail

// network with layers 1..upto compressed (1-based), deeper layers dense
inline Network compress_prefix(const Network& net, const CompressorSpec& spec,
                               std::size_t upto) {
  Network out = net;
  for (std::size_t l = 0; l < std::min(upto, net.layers.size()); ++l)
    out.layers[l].weight =
        detail::apply_compressor(net.layers[l].dense_weight(), spec).weight;
  return out;
}

// whole-network compression with the aggregate weight-storage ratio
struct SweptNetwork {
  Network net;
  double storage_ratio = 1.0;
};

inline SweptNetwork compress_all(const Network& net,
                                 const CompressorSpec& spec) {
  SweptNetwork out;
  out.net = net;
  double stored = 0.0, dense = 0.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    detail::AppliedLayer ap =
        detail::apply_compressor(net.layers[l].dense_weight(), spec);
    const double mn = static_cast<double>(net.layers[l].dense_weight().rows) *
                      net.layers[l].dense_weight().cols;
    stored += ap.ratio * mn;
    dense += mn;
    out.net.layers[l].weight = std::move(ap.weight);
  }
  out.storage_ratio = stored / dense;
  return out;
}

struct PropagationRecord {
  std::size_t layer = 0;          // 1-based, contiguous
  double cumulative_error = 0.0;  // relative output error at probe batch
  CompressorMethod method = CompressorMethod::hmatrix;
  double tolerance = 0.0;
};

// relative output error over the probe batch, all outputs stacked
inline double relative_output_error(const Network& reference,
                                    const Network& candidate,
                                    const std::vector<std::vector<double>>& probe) {
  double num = 0.0, den = 0.0;
  for (const auto& x : probe) {
    const std::vector<double> yr = forward(reference, x);
    const std::vector<double> yc = forward(candidate, x);
    for (std::size_t i = 0; i < yr.size(); ++i) {
      num += (yc[i] - yr[i]) * (yc[i] - yr[i]);
      den += yr[i] * yr[i];
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline std::vector<PropagationRecord> error_propagation(
    const Network& net, const CompressorSpec& spec,
    const std::vector<std::vector<double>>& probe) {
  validate(spec);
  if (!net.all_dense())
    throw std::invalid_argument("error_propagation: dense network required");
  std::vector<PropagationRecord> records;
  for (std::size_t l = 1; l <= net.layers.size(); ++l) {
    const Network c = compress_prefix(net, spec, l);
    PropagationRecord rec;
    rec.layer = l;
    rec.cumulative_error = relative_output_error(net, c, probe);
    rec.method = spec.method;
    rec.tolerance = spec.parameter;
    records.push_back(rec);
  }
  return records;
}

struct TradeoffRow {
  CompressorMethod method = CompressorMethod::hmatrix;
  double parameter = 0.0;
  double compression_ratio = 1.0;
  double task_metric = 0.0;
};

inline std::vector<TradeoffRow> tradeoff_sweep(
    const Network& net, const std::function<double(const Network&)>& evaluator,
    const std::vector<CompressorSpec>& specs) {
  if (!net.all_dense())
    throw std::invalid_argument("tradeoff_sweep: dense network required");
  std::vector<TradeoffRow> rows;
  rows.reserve(specs.size());
  for (const CompressorSpec& spec : specs) {
    validate(spec);
    SweptNetwork swept = compress_all(net, spec);
    TradeoffRow row;
    row.method = spec.method;
    row.parameter = spec.parameter;
    row.compression_ratio = swept.storage_ratio;
    row.task_metric = evaluator(swept.net);
    rows.push_back(row);
  }
  return rows;
}

} // namespace hmx
