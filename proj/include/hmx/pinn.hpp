#pragma once
//
// Desk-scale physics-informed problem: 1D Poisson with an analytic
// solution. The residual needs second derivatives of the network output
// with respect to its scalar input; these are propagated exactly in
// forward mode as (value, d/dx, d2/dx2) triples, and the training
// gradient is reverse mode through that extended computation.
//

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hmx/nn.hpp"

namespace hmx {

struct PoissonProblem {
  std::function<double(double)> forcing;           // f(x) in u'' = f
  double a = 0.0, b = 1.0;                         // domain
  double ua = 0.0, ub = 0.0;                       // boundary values
  std::vector<double> collocation_points;          // strictly inside (a,b)
  double boundary_weight = 10.0;
  std::function<double(double)> exact;             // analytic solution
};

// built-in instance: u'' = -pi^2 sin(pi x), u(0)=u(1)=0, u = sin(pi x)
inline PoissonProblem default_poisson(std::size_t collocation = 64) {
  const double pi = 3.14159265358979323846;
  PoissonProblem p;
  p.forcing = [pi](double x) { return -pi * pi * std::sin(pi * x); };
  p.exact = [pi](double x) { return std::sin(pi * x); };
  p.a = 0.0;
  p.b = 1.0;
  p.ua = 0.0;
  p.ub = 0.0;
  p.boundary_weight = 10.0;
  p.collocation_points.resize(collocation);
  for (std::size_t i = 0; i < collocation; ++i)
    p.collocation_points[i] =
        static_cast<double>(i + 1) / static_cast<double>(collocation + 1);
  return p;
}

struct DerivativeBundle {
  double u = 0.0;
  double du_dx = 0.0;
  double d2u_dx2 = 0.0;
};

namespace detail {

struct TripleState {
  std::vector<double> h, hp, hq; // value, d/dx, d2/dx2 per unit
};

struct LayerTrace {
  TripleState in;                 // layer input channels
  std::vector<double> a, ap, aq;  // pre-activation channels
};

inline std::vector<double> layer_matvec(const Layer& layer,
                                        std::span<const double> x) {
  return layer.is_dense() ? matvec_dense(layer.dense_weight(), x)
                          : hmatvec(layer.hmatrix_weight(), x);
}

inline void forward_triples(const Network& net, double x,
                            std::vector<LayerTrace>* traces,
                            TripleState* out) {
  TripleState s;
  s.h = {x};
  s.hp = {1.0};
  s.hq = {0.0};
  for (const Layer& layer : net.layers) {
    if (layer.activation != Activation::tanh_fn &&
        layer.activation != Activation::identity)
      throw std::invalid_argument("forward_triples: unsupported activation");
    LayerTrace tr;
    tr.in = s;
    tr.a = layer_matvec(layer, s.h);
    for (std::size_t i = 0; i < tr.a.size(); ++i) tr.a[i] += layer.bias[i];
    tr.ap = layer_matvec(layer, s.hp);
    tr.aq = layer_matvec(layer, s.hq);

    TripleState next;
    const std::size_t n = tr.a.size();
    next.h.resize(n);
    next.hp.resize(n);
    next.hq.resize(n);
    if (layer.activation == Activation::tanh_fn) {
      for (std::size_t i = 0; i < n; ++i) {
        const double t = std::tanh(tr.a[i]);
        const double t1 = 1.0 - t * t;
        const double t2 = -2.0 * t * t1;
        next.h[i] = t;
        next.hp[i] = t1 * tr.ap[i];
        next.hq[i] = t1 * tr.aq[i] + t2 * tr.ap[i] * tr.ap[i];
      }
    } else {
      next.h = tr.a;
      next.hp = tr.ap;
      next.hq = tr.aq;
    }
    if (traces) traces->push_back(std::move(tr));
    s = std::move(next);
  }
  *out = s;
}

} // namespace detail

// exact (value, first, second derivative) of the scalar network output
// with respect to its scalar input
inline DerivativeBundle forward_with_input_derivatives(const Network& net,
                                                       double x) {
  if (net.input_dim() != 1 || net.output_dim() != 1)
    throw std::invalid_argument(
        "forward_with_input_derivatives: scalar input/output required");
  detail::TripleState out;
  detail::forward_triples(net, x, nullptr, &out);
  return {out.h[0], out.hp[0], out.hq[0]};
}

inline double physics_loss(const Network& net, const PoissonProblem& prob) {
  if (prob.collocation_points.empty())
    throw std::invalid_argument("physics_loss: no collocation points");
  double s = 0.0;
  for (double x : prob.collocation_points) {
    const DerivativeBundle d = forward_with_input_derivatives(net, x);
    const double r = d.d2u_dx2 - prob.forcing(x);
    s += r * r;
  }
  s /= static_cast<double>(prob.collocation_points.size());
  const double la = forward(net, std::vector<double>{prob.a})[0] - prob.ua;
  const double lb = forward(net, std::vector<double>{prob.b})[0] - prob.ub;
  s += prob.boundary_weight * (la * la + lb * lb);
  return s;
}

namespace detail {

// reverse pass through the (h, hp, hq) channels; seeds are cotangents of
// the three output channels of the scalar network output
inline void accumulate_triple_gradient(const Network& net,
                                       const std::vector<LayerTrace>& traces,
                                       double bar_u, double bar_up,
                                       double bar_uq,
                                       std::vector<double>* grad) {
  const std::size_t num_layers = net.layers.size();
  std::vector<std::size_t> offsets(num_layers);
  {
    std::size_t pos = 0;
    for (std::size_t l = 0; l < num_layers; ++l) {
      offsets[l] = pos;
      pos += net.layers[l].dense_weight().entries.size() +
             net.layers[l].bias.size();
    }
  }
  std::vector<double> bh{bar_u}, bhp{bar_up}, bhq{bar_uq};
  for (std::size_t l = num_layers; l-- > 0;) {
    const Layer& layer = net.layers[l];
    const LayerTrace& tr = traces[l];
    const std::size_t n = tr.a.size();
    std::vector<double> ba(n), bap(n), baq(n);
    if (layer.activation == Activation::tanh_fn) {
      for (std::size_t i = 0; i < n; ++i) {
        const double t = std::tanh(tr.a[i]);
        const double t1 = 1.0 - t * t;
        const double t2 = -2.0 * t * t1;
        const double t3 = -2.0 * (t1 * t1 + t * t2); // d t2 / da
        const double ap = tr.ap[i];
        const double aq = tr.aq[i];
        ba[i] = bh[i] * t1 + bhp[i] * t2 * ap +
                bhq[i] * (t3 * ap * ap + t2 * aq);
        bap[i] = bhp[i] * t1 + bhq[i] * 2.0 * t2 * ap;
        baq[i] = bhq[i] * t1;
      }
    } else {
      ba = bh;
      bap = bhp;
      baq = bhq;
    }
    const DenseMatrix& w = layer.dense_weight();
    double* gw = grad->data() + offsets[l];
    double* gb = gw + w.entries.size();
    for (std::size_t i = 0; i < w.rows; ++i) {
      gb[i] += ba[i];
      double* gwrow = gw + i * w.cols;
      for (std::size_t j = 0; j < w.cols; ++j)
        gwrow[j] += ba[i] * tr.in.h[j] + bap[i] * tr.in.hp[j] +
                    baq[i] * tr.in.hq[j];
    }
    if (l > 0) {
      bh = matvec_transposed(w, ba);
      bhp = matvec_transposed(w, bap);
      bhq = matvec_transposed(w, baq);
    }
  }
}

} // namespace detail

inline std::vector<double> physics_loss_gradient(const Network& net,
                                                 const PoissonProblem& prob) {
  if (!net.all_dense())
    throw std::invalid_argument("physics_loss_gradient: dense network required");
  std::vector<double> grad(net.param_count(), 0.0);
  const double inv_n =
      1.0 / static_cast<double>(prob.collocation_points.size());
  for (double x : prob.collocation_points) {
    std::vector<detail::LayerTrace> traces;
    detail::TripleState out;
    detail::forward_triples(net, x, &traces, &out);
    const double r = out.hq[0] - prob.forcing(x);
    detail::accumulate_triple_gradient(net, traces, 0.0, 0.0,
                                       2.0 * r * inv_n, &grad);
  }
  const double bw = prob.boundary_weight;
  for (const auto& [xb, target] :
       {std::pair{prob.a, prob.ua}, std::pair{prob.b, prob.ub}}) {
    const std::vector<double> xv{xb};
    const double u = forward(net, xv)[0];
    const std::vector<double> up{2.0 * bw * (u - target)};
    const std::vector<double> g = param_gradient(net, xv, up);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
  }
  return grad;
}

class PinnObjective final : public Objective {
public:
  explicit PinnObjective(PoissonProblem prob) : prob_(std::move(prob)) {}
  double value(const Network& net) const override {
    return physics_loss(net, prob_);
  }
  std::vector<double> gradient(const Network& net) const override {
    return physics_loss_gradient(net, prob_);
  }
  const PoissonProblem& problem() const { return prob_; }

private:
  PoissonProblem prob_;
};

// relative L2 error against the analytic solution on a uniform grid
inline double relative_l2_error(const Network& net, const PoissonProblem& prob,
                                std::size_t grid_points = 512) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double x =
        prob.a + (prob.b - prob.a) * static_cast<double>(i) /
                     static_cast<double>(grid_points - 1);
    const double pred = forward(net, std::vector<double>{x})[0];
    const double ex = prob.exact(x);
    num += (pred - ex) * (pred - ex);
    den += ex * ex;
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

struct PinnTrainResult {
  Network net;
  std::vector<double> trajectory;
  double relative_l2 = 0.0;
  std::vector<ProjectionEvent> projections; // empty for plain descent
};

inline PinnTrainResult train_pinn(const PoissonProblem& prob,
                                  const std::vector<std::size_t>& arch,
                                  const TrainConfig& cfg) {
  const Network start = init_network(arch, cfg.seed);
  PinnObjective obj(prob);
  PinnTrainResult out;
  if (cfg.projection_period > 0 && cfg.projection_period <= cfg.steps) {
    ProjectedTrainResult r = train_projected(start, obj, cfg);
    out.net = std::move(r.net);
    out.trajectory = std::move(r.trajectory);
    out.projections = std::move(r.projections);
  } else {
    TrainResult r = train_gd(start, obj, cfg);
    out.net = std::move(r.net);
    out.trajectory = std::move(r.trajectory);
  }
  out.relative_l2 = relative_l2_error(out.net, prob);
  return out;
}

struct CompressedPinnRow {
  double epsilon = 0.0;
  double relative_l2 = 0.0;
  double physics = 0.0;
  double storage_ratio = 0.0;            // compressed weight scalars / dense
  std::vector<double> layer_ratios;
};

inline std::vector<CompressedPinnRow> evaluate_compressed_pinn(
    const Network& trained, const std::vector<double>& epsilon_ladder,
    const PoissonProblem& prob) {
  std::vector<CompressedPinnRow> rows;
  rows.reserve(epsilon_ladder.size());
  for (double eps : epsilon_ladder) {
    CompressedNetwork c = compress_network(trained, eps);
    CompressedPinnRow row;
    row.epsilon = eps;
    row.relative_l2 = relative_l2_error(c.net, prob);
    row.physics = physics_loss(c.net, prob);
    std::size_t stored = 0, dense = 0;
    for (std::size_t l = 0; l < c.net.layers.size(); ++l) {
      const HMatrix& h = c.net.layers[l].hmatrix_weight();
      stored += h.stored_scalars;
      dense += h.rows * h.cols;
      row.layer_ratios.push_back(c.layers[l].report.compression_ratio);
    }
    row.storage_ratio =
        static_cast<double>(stored) / static_cast<double>(dense);
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace hmx
