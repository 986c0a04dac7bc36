#pragma once
//
// Feed-forward network with explicit reverse-mode gradients, empirical
// NTK Gram assembly, weight compression through the hierarchical builder
// and (projected) full-batch gradient descent.
//

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hmx/dense.hpp"
#include "hmx/hmatrix.hpp"
#include "hmx/rng.hpp"

namespace hmx {

enum class Activation : std::uint8_t { tanh_fn = 0, identity = 1 };

struct Layer {
  std::variant<DenseMatrix, HMatrix> weight;
  std::vector<double> bias;
  Activation activation = Activation::tanh_fn;

  bool is_dense() const { return std::holds_alternative<DenseMatrix>(weight); }
  const DenseMatrix& dense_weight() const {
    return std::get<DenseMatrix>(weight);
  }
  DenseMatrix& dense_weight() { return std::get<DenseMatrix>(weight); }
  const HMatrix& hmatrix_weight() const { return std::get<HMatrix>(weight); }
  std::size_t out_dim() const {
    return is_dense() ? dense_weight().rows : hmatrix_weight().rows;
  }
  std::size_t in_dim() const {
    return is_dense() ? dense_weight().cols : hmatrix_weight().cols;
  }
};

struct Network {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }
  std::size_t param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers)
      n += l.out_dim() * l.in_dim() + l.bias.size();
    return n;
  }
  bool all_dense() const {
    for (const Layer& l : layers)
      if (!l.is_dense()) return false;
    return true;
  }
};

inline Network init_network(const std::vector<std::size_t>& layer_sizes,
                            std::uint64_t seed) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("init_network: need at least 2 layer sizes");
  Rng rng(mix_seed(seed, 0x1417ULL));
  Network net;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t fan_in = layer_sizes[l];
    const std::size_t fan_out = layer_sizes[l + 1];
    Layer layer;
    DenseMatrix w(fan_out, fan_in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : w.entries) x = scale * rng.gaussian();
    layer.weight = std::move(w);
    layer.bias.assign(fan_out, 0.0);
    layer.activation = (l + 2 == layer_sizes.size()) ? Activation::identity
                                                     : Activation::tanh_fn;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline std::vector<double> apply_activation(Activation act,
                                            std::vector<double> a) {
  if (act == Activation::tanh_fn)
    for (double& x : a) x = std::tanh(x);
  return a;
}

inline std::vector<double> forward(const Network& net,
                                   std::span<const double> x) {
  if (x.size() != net.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  std::vector<double> h(x.begin(), x.end());
  for (const Layer& layer : net.layers) {
    std::vector<double> a = layer.is_dense()
                                ? matvec_dense(layer.dense_weight(), h)
                                : hmatvec(layer.hmatrix_weight(), h);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += layer.bias[i];
    h = apply_activation(layer.activation, std::move(a));
  }
  return h;
}

// ---- flat parameter vector: per layer, weight row-major then bias ----

inline std::vector<double> flatten_params(const Network& net) {
  if (!net.all_dense())
    throw std::invalid_argument("flatten_params: network has compressed layers");
  std::vector<double> theta;
  theta.reserve(net.param_count());
  for (const Layer& l : net.layers) {
    const DenseMatrix& w = l.dense_weight();
    theta.insert(theta.end(), w.entries.begin(), w.entries.end());
    theta.insert(theta.end(), l.bias.begin(), l.bias.end());
  }
  return theta;
}

inline void set_params(Network& net, std::span<const double> theta) {
  std::size_t pos = 0;
  for (Layer& l : net.layers) {
    DenseMatrix& w = l.dense_weight();
    for (double& x : w.entries) x = theta[pos++];
    for (double& x : l.bias) x = theta[pos++];
  }
  if (pos != theta.size())
    throw std::invalid_argument("set_params: parameter count mismatch");
}

// Exact reverse-mode gradient of upstream . f(x) over the flat parameters.
// Compressed layers are projected during training, never differentiated,
// so they are rejected here.
inline std::vector<double> param_gradient(const Network& net,
                                          std::span<const double> x,
                                          std::span<const double> upstream) {
  if (!net.all_dense())
    throw std::invalid_argument(
        "param_gradient: gradient requested on an H-matrix layer; "
        "densify the network first");
  if (x.size() != net.input_dim() || upstream.size() != net.output_dim())
    throw std::invalid_argument("param_gradient: dimension mismatch");

  const std::size_t num_layers = net.layers.size();
  std::vector<std::vector<double>> inputs(num_layers);  // h_{l}
  std::vector<std::vector<double>> preacts(num_layers); // a_l
  std::vector<double> h(x.begin(), x.end());
  for (std::size_t l = 0; l < num_layers; ++l) {
    inputs[l] = h;
    const Layer& layer = net.layers[l];
    std::vector<double> a = matvec_dense(layer.dense_weight(), h);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += layer.bias[i];
    preacts[l] = a;
    h = apply_activation(layer.activation, std::move(a));
  }

  std::vector<double> grad(net.param_count(), 0.0);
  std::vector<std::size_t> offsets(num_layers);
  {
    std::size_t pos = 0;
    for (std::size_t l = 0; l < num_layers; ++l) {
      offsets[l] = pos;
      pos += net.layers[l].dense_weight().entries.size() +
             net.layers[l].bias.size();
    }
  }

  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t l = num_layers; l-- > 0;) {
    const Layer& layer = net.layers[l];
    if (layer.activation == Activation::tanh_fn) {
      for (std::size_t i = 0; i < delta.size(); ++i) {
        const double t = std::tanh(preacts[l][i]);
        delta[i] *= 1.0 - t * t;
      }
    }
    const DenseMatrix& w = layer.dense_weight();
    double* gw = grad.data() + offsets[l];
    double* gb = gw + w.entries.size();
    for (std::size_t i = 0; i < w.rows; ++i) {
      const double di = delta[i];
      gb[i] = di;
      double* gwrow = gw + i * w.cols;
      const std::vector<double>& hin = inputs[l];
      for (std::size_t j = 0; j < w.cols; ++j) gwrow[j] = di * hin[j];
    }
    if (l > 0) delta = matvec_transposed(w, delta);
  }
  return grad;
}

// ---- empirical NTK ----

struct NTKGram {
  std::vector<std::vector<double>> sample_inputs;
  DenseMatrix gram; // m x m, symmetric PSD
};

inline NTKGram ntk_gram(const Network& net,
                        const std::vector<std::vector<double>>& samples) {
  if (net.output_dim() != 1)
    throw std::invalid_argument("ntk_gram: network output must be scalar");
  if (samples.empty())
    throw std::invalid_argument("ntk_gram: empty sample list");
  const std::vector<double> one{1.0};
  std::vector<std::vector<double>> grads;
  grads.reserve(samples.size());
  for (const auto& x : samples) grads.push_back(param_gradient(net, x, one));

  NTKGram g;
  g.sample_inputs = samples;
  g.gram = DenseMatrix(samples.size(), samples.size());
  for (std::size_t a = 0; a < samples.size(); ++a)
    for (std::size_t b = a; b < samples.size(); ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < grads[a].size(); ++i)
        s += grads[a][i] * grads[b][i];
      g.gram.at(a, b) = s;
      g.gram.at(b, a) = s;
    }
  return g;
}

// ---- compression of weight matrices ----

struct LayerCompressionReport {
  std::size_t layer = 0;
  CompressionReport report;
  double error_fro = 0.0; // ||E_k||_F = ||W_k - H(W_k)||_F
};

struct CompressedNetwork {
  Network net;
  std::vector<LayerCompressionReport> layers;
};

inline CompressedNetwork compress_network(const Network& net,
                                          double epsilon_tol,
                                          const BuildConfig& base_cfg = {}) {
  if (!net.all_dense())
    throw std::invalid_argument("compress_network: network already compressed");
  BuildConfig cfg = base_cfg;
  cfg.epsilon_tol = epsilon_tol;
  CompressedNetwork out;
  out.net.layers.reserve(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& src = net.layers[l];
    HMatrix h = build_adaptive(src.dense_weight(), cfg);
    LayerCompressionReport rep;
    rep.layer = l;
    rep.report = storage_stats(h, src.dense_weight());
    rep.error_fro = rep.report.measured_error;
    out.layers.push_back(rep);

    Layer compressed;
    compressed.weight = std::move(h);
    compressed.bias = src.bias;
    compressed.activation = src.activation;
    out.net.layers.push_back(std::move(compressed));
  }
  return out;
}

// dense copy of a compressed network (reconstructs every H-matrix layer)
inline Network densify(const Network& net) {
  Network out;
  out.layers.reserve(net.layers.size());
  for (const Layer& src : net.layers) {
    Layer l;
    l.weight = src.is_dense() ? src.dense_weight()
                              : reconstruct(src.hmatrix_weight());
    l.bias = src.bias;
    l.activation = src.activation;
    out.layers.push_back(std::move(l));
  }
  return out;
}

struct NTKDeviationRow {
  double epsilon = 0.0;
  double deviation = 0.0; // ||Theta - Theta_H||_F
  double relative = 0.0;  // deviation / ||Theta||_F
};

// Theta_H is the NTK of the reconstructed compressed network.
inline std::vector<NTKDeviationRow> ntk_deviation(
    const Network& net, const std::vector<std::vector<double>>& samples,
    const std::vector<double>& epsilon_ladder,
    const BuildConfig& base_cfg = {}) {
  const NTKGram theta = ntk_gram(net, samples);
  const double theta_norm = frobenius_norm(theta.gram);
  std::vector<NTKDeviationRow> rows;
  rows.reserve(epsilon_ladder.size());
  for (double eps : epsilon_ladder) {
    CompressedNetwork c = compress_network(net, eps, base_cfg);
    const NTKGram theta_h = ntk_gram(densify(c.net), samples);
    NTKDeviationRow row;
    row.epsilon = eps;
    row.deviation = frobenius_distance(theta.gram, theta_h.gram);
    row.relative = theta_norm > 0.0 ? row.deviation / theta_norm : 0.0;
    rows.push_back(row);
  }
  return rows;
}

// ---- training ----

struct TrainConfig {
  double learning_rate = 1.0e-3;
  std::size_t steps = 1000;
  double lambda = 0.0;                // regularization weight, reported only
  std::size_t projection_period = 0;  // 0: never project
  double epsilon_tol = 1.0e-6;
  std::uint64_t seed = 0;
};

class Objective {
public:
  virtual ~Objective() = default;
  virtual double value(const Network& net) const = 0;
  virtual std::vector<double> gradient(const Network& net) const = 0;
};

// mean squared error over a fixed sample set
class MSEObjective final : public Objective {
public:
  MSEObjective(std::vector<std::vector<double>> inputs,
               std::vector<std::vector<double>> targets)
      : inputs_(std::move(inputs)), targets_(std::move(targets)) {
    if (inputs_.size() != targets_.size() || inputs_.empty())
      throw std::invalid_argument("MSEObjective: bad sample set");
  }

  double value(const Network& net) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
      const std::vector<double> y = forward(net, inputs_[i]);
      for (std::size_t j = 0; j < y.size(); ++j) {
        const double d = y[j] - targets_[i][j];
        s += d * d;
      }
    }
    return s / static_cast<double>(inputs_.size());
  }

  std::vector<double> gradient(const Network& net) const override {
    std::vector<double> g(net.param_count(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(inputs_.size());
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
      const std::vector<double> y = forward(net, inputs_[i]);
      std::vector<double> up(y.size());
      for (std::size_t j = 0; j < y.size(); ++j)
        up[j] = 2.0 * (y[j] - targets_[i][j]) * inv_n;
      const std::vector<double> gi = param_gradient(net, inputs_[i], up);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += gi[j];
    }
    return g;
  }

private:
  std::vector<std::vector<double>> inputs_;
  std::vector<std::vector<double>> targets_;
};

struct TrainResult {
  Network net;
  std::vector<double> trajectory; // loss before step 1, then after each step
};

inline TrainResult train_gd(const Network& start, const Objective& obj,
                            const TrainConfig& cfg) {
  if (!start.all_dense())
    throw std::invalid_argument("train_gd: dense network required");
  TrainResult res;
  res.net = start;
  std::vector<double> theta = flatten_params(res.net);
  double loss = obj.value(res.net);
  if (!std::isfinite(loss))
    throw std::runtime_error("train_gd: non-finite loss at step 0");
  res.trajectory.push_back(loss);
  for (std::size_t t = 1; t <= cfg.steps; ++t) {
    const std::vector<double> g = obj.gradient(res.net);
    for (std::size_t i = 0; i < theta.size(); ++i)
      theta[i] -= cfg.learning_rate * g[i];
    set_params(res.net, theta);
    loss = obj.value(res.net);
    if (!std::isfinite(loss))
      throw std::runtime_error("train_gd: non-finite loss at step " +
                               std::to_string(t));
    res.trajectory.push_back(loss);
  }
  return res;
}

struct ProjectionEvent {
  std::size_t step = 0;
  std::size_t rank_regularizer = 0; // R(H(W)) summed over layers
  double error_sum = 0.0;           // sum_k ||E_k||_F
  double loss_before = 0.0;
  double loss_after = 0.0;
  double composite = 0.0;           // loss_after + lambda * R
};

struct ProjectedTrainResult {
  Network net;
  std::vector<double> trajectory;
  std::vector<ProjectionEvent> projections;
  double cumulative_loss_change = 0.0; // sum |loss_after - loss_before|
  double tau_times_projections = 0.0;  // epsilon_tol * #projections
};

inline ProjectedTrainResult train_projected(const Network& start,
                                            const Objective& obj,
                                            const TrainConfig& cfg,
                                            const BuildConfig& base_cfg = {}) {
  if (!start.all_dense())
    throw std::invalid_argument("train_projected: dense network required");
  if (cfg.projection_period == 0)
    throw std::invalid_argument("train_projected: projection_period must be positive");
  BuildConfig bcfg = base_cfg;
  bcfg.epsilon_tol = cfg.epsilon_tol;

  ProjectedTrainResult res;
  res.net = start;
  std::vector<double> theta = flatten_params(res.net);
  double loss = obj.value(res.net);
  if (!std::isfinite(loss))
    throw std::runtime_error("train_projected: non-finite loss at step 0");
  res.trajectory.push_back(loss);

  for (std::size_t t = 1; t <= cfg.steps; ++t) {
    const std::vector<double> g = obj.gradient(res.net);
    for (std::size_t i = 0; i < theta.size(); ++i)
      theta[i] -= cfg.learning_rate * g[i];
    set_params(res.net, theta);

    if (t % cfg.projection_period == 0) {
      ProjectionEvent ev;
      ev.step = t;
      ev.loss_before = obj.value(res.net);
      for (Layer& layer : res.net.layers) {
        HMatrix h = build_adaptive(layer.dense_weight(), bcfg);
        ev.rank_regularizer += rank_sum(h);
        DenseMatrix projected = reconstruct(h);
        ev.error_sum += frobenius_distance(layer.dense_weight(), projected);
        layer.weight = std::move(projected);
      }
      theta = flatten_params(res.net);
      ev.loss_after = obj.value(res.net);
      ev.composite = ev.loss_after +
                     cfg.lambda * static_cast<double>(ev.rank_regularizer);
      res.cumulative_loss_change += std::abs(ev.loss_after - ev.loss_before);
      res.projections.push_back(ev);
    }

    loss = obj.value(res.net);
    if (!std::isfinite(loss))
      throw std::runtime_error("train_projected: non-finite loss at step " +
                               std::to_string(t));
    res.trajectory.push_back(loss);
  }
  res.tau_times_projections =
      cfg.epsilon_tol * static_cast<double>(res.projections.size());
  return res;
}

} // namespace hmx
