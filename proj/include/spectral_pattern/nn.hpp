#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spectral_pattern/errors.hpp"
#include "spectral_pattern/matrix.hpp"
#include "spectral_pattern/spectral.hpp"

namespace spectral_pattern {

using ShapeMismatch = DimensionMismatch;

enum class Activation { relu, identity };
enum class PoolKind { mean, max };

/// Multi-channel polynomial graph convolution.
///
/// theta[k] is a c_in x c_out matrix, so theta[k](c, o) is the coefficient
/// of L^k applied to input channel c and summed into output channel o.
struct GraphConvLayer {
  std::vector<Matrix> theta;
  std::vector<double> bias;
  Activation activation = Activation::relu;

  GraphConvLayer() = default;
  GraphConvLayer(std::size_t order, std::size_t c_in, std::size_t c_out, Activation act = Activation::relu)
      : theta(order, Matrix(c_in, c_out)), bias(c_out, 0.0), activation(act) {
    if (order < 1 || c_in < 1 || c_out < 1) throw DimensionMismatch("conv layer needs K, c_in, c_out >= 1");
  }

  std::size_t order() const noexcept { return theta.size(); }
  std::size_t c_in() const noexcept { return theta.empty() ? 0 : theta.front().rows(); }
  std::size_t c_out() const noexcept { return bias.size(); }
};

/// Fully connected classifier; weights are c_in x classes.
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t c_in, std::size_t classes) : weights(c_in, classes), bias(classes, 0.0) {}

  std::size_t c_in() const noexcept { return weights.rows(); }
  std::size_t classes() const noexcept { return weights.cols(); }
};

/// conv x L -> global pool -> dropout -> dense -> softmax.
struct GcnnModel {
  std::vector<GraphConvLayer> conv_layers;
  PoolKind pool = PoolKind::mean;
  DenseLayer dense;
  double dropout_rate = 0.0;
  double l2_lambda = 0.0;

  std::size_t input_dim() const { return conv_layers.empty() ? dense.c_in() : conv_layers.front().c_in(); }
  std::size_t classes() const { return dense.classes(); }
};

/// Checks the channel chain; throws DimensionMismatch on a break.
inline void validate(const GcnnModel& model) {
  std::size_t width = model.input_dim();
  for (std::size_t i = 0; i < model.conv_layers.size(); ++i) {
    const GraphConvLayer& layer = model.conv_layers[i];
    if (layer.order() < 1) throw DimensionMismatch("conv layer " + std::to_string(i) + " has K = 0");
    for (const Matrix& t : layer.theta)
      if (t.rows() != width || t.cols() != layer.c_out())
        throw DimensionMismatch("conv layer " + std::to_string(i) + " breaks the channel chain");
    width = layer.c_out();
  }
  if (model.dense.c_in() != width || model.dense.bias.size() != model.dense.classes())
    throw DimensionMismatch("dense layer input does not match the last conv layer");
  if (model.classes() < 2) throw DimensionMismatch("a classifier needs at least 2 classes");
  if (!(model.dropout_rate >= 0.0 && model.dropout_rate < 1.0)) throw DimensionMismatch("dropout rate must be in [0,1)");
  if (!(model.l2_lambda >= 0.0)) throw DimensionMismatch("l2_lambda must be nonnegative");
}

/// Visits every parameter tensor in a fixed order. The flag marks tensors
/// that carry the L2 penalty (conv thetas and dense weights, not biases).
template <class Model, class Fn>
void for_each_tensor(Model& model, Fn&& fn) {
  for (auto& layer : model.conv_layers) {
    for (auto& t : layer.theta) fn(std::span(t.values()), true);
    fn(std::span(layer.bias), false);
  }
  fn(std::span(model.dense.weights.values()), true);
  fn(std::span(model.dense.bias), false);
}

/// Same architecture with every parameter zeroed; doubles as a gradient container.
inline GcnnModel zeros_like(const GcnnModel& model) {
  GcnnModel out = model;
  for_each_tensor(out, [](std::span<double> t, bool) { std::fill(t.begin(), t.end(), 0.0); });
  return out;
}

inline std::size_t parameter_count(const GcnnModel& model) {
  std::size_t total = 0;
  for_each_tensor(model, [&](std::span<const double> t, bool) { total += t.size(); });
  return total;
}

struct ModelSpec {
  std::size_t input_dim = 5;
  std::size_t conv_layers = 4;
  std::size_t channels = 24;
  std::size_t order = 3;
  std::size_t classes = 2;
  PoolKind pool = PoolKind::mean;
  double dropout_rate = 0.5;
  double l2_lambda = 5e-4;
};

/// Glorot-uniform thetas with fan_in = K c_in, fan_out = K c_out; zero biases.
inline GcnnModel make_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.input_dim < 1 || spec.channels < 1 || spec.order < 1)
    throw DimensionMismatch("model spec needs input_dim, channels, order >= 1");
  std::mt19937_64 rng(seed);
  GcnnModel model;
  model.pool = spec.pool;
  model.dropout_rate = spec.dropout_rate;
  model.l2_lambda = spec.l2_lambda;

  std::size_t width = spec.input_dim;
  for (std::size_t i = 0; i < spec.conv_layers; ++i) {
    GraphConvLayer layer(spec.order, width, spec.channels);
    const double k = static_cast<double>(spec.order);
    const double limit = std::sqrt(6.0 / (k * static_cast<double>(width) + k * static_cast<double>(spec.channels)));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Matrix& t : layer.theta)
      for (double& v : t.values()) v = dist(rng);
    model.conv_layers.push_back(std::move(layer));
    width = spec.channels;
  }
  model.dense = DenseLayer(width, spec.classes);
  const double limit = std::sqrt(6.0 / static_cast<double>(width + spec.classes));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : model.dense.weights.values()) v = dist(rng);
  validate(model);
  return model;
}

// ---------------------------------------------------------------------------
// Forward pieces

/// Intermediates of one conv layer kept for backprop.
struct ConvCache {
  std::vector<Matrix> powers;  // L^k X for k < K
  Matrix pre;                  // pre-activation, n x c_out
  Matrix out;                  // activation output
};

inline ConvCache conv_layer_forward_cached(const GraphConvLayer& layer, const Matrix& l, const Matrix& x) {
  if (x.cols() != layer.c_in())
    throw DimensionMismatch("conv layer expects " + std::to_string(layer.c_in()) + " input channels, got " +
                            std::to_string(x.cols()));
  if (l.rows() != x.rows() || l.cols() != x.rows()) throw DimensionMismatch("laplacian and signal sizes differ");
  ConvCache cache;
  cache.powers = laplacian_powers(l, x, layer.order());
  cache.pre = Matrix(x.rows(), layer.c_out());
  for (std::size_t k = 0; k < layer.order(); ++k) cache.pre += matmul(cache.powers[k], layer.theta[k]);
  for (std::size_t i = 0; i < cache.pre.rows(); ++i) {
    auto row = cache.pre.row(i);
    for (std::size_t o = 0; o < row.size(); ++o) row[o] += layer.bias[o];
  }
  cache.out = cache.pre;
  if (layer.activation == Activation::relu)
    for (double& v : cache.out.values()) v = std::max(v, 0.0);
  return cache;
}

/// Y[:,o] = act( sum_c sum_k theta[k](c,o) L^k X[:,c] + bias[o] ).
inline Matrix conv_layer_forward(const GraphConvLayer& layer, const LaplacianMatrix& l, const Matrix& x) {
  return conv_layer_forward_cached(layer, l.values, x).out;
}

inline std::vector<double> global_mean_pool(const Matrix& x) {
  if (x.rows() == 0) throw DimensionMismatch("cannot pool an empty signal");
  std::vector<double> out(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c];
  }
  for (double& v : out) v /= static_cast<double>(x.rows());
  return out;
}

/// Column maxima; argmax receives the winning row per column (first on ties).
inline std::vector<double> global_max_pool(const Matrix& x, std::vector<std::size_t>* argmax = nullptr) {
  if (x.rows() == 0) throw DimensionMismatch("cannot pool an empty signal");
  std::vector<double> out(x.row(0).begin(), x.row(0).end());
  std::vector<std::size_t> arg(x.cols(), 0);
  for (std::size_t i = 1; i < x.rows(); ++i)
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (x(i, c) > out[c]) {
        out[c] = x(i, c);
        arg[c] = i;
      }
  if (argmax) *argmax = std::move(arg);
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

inline std::vector<double> dense_logits(const DenseLayer& layer, std::span<const double> h) {
  if (h.size() != layer.c_in())
    throw DimensionMismatch("dense layer expects " + std::to_string(layer.c_in()) + " inputs, got " +
                            std::to_string(h.size()));
  std::vector<double> logits = layer.bias;
  for (std::size_t c = 0; c < h.size(); ++c) {
    auto w = layer.weights.row(c);
    for (std::size_t j = 0; j < logits.size(); ++j) logits[j] += h[c] * w[j];
  }
  return logits;
}

/// softmax(W^T h + b)
inline std::vector<double> dense_softmax_forward(const DenseLayer& layer, std::span<const double> h) {
  return softmax(dense_logits(layer, h));
}

/// Inverted dropout. Returns the mask (0 or 1/(1-rate)) through mask_out.
inline std::vector<double> dropout_apply(std::span<const double> h, double rate, std::mt19937_64& rng, bool training,
                                         std::vector<double>* mask_out = nullptr) {
  if (!(rate >= 0.0 && rate < 1.0)) throw DimensionMismatch("dropout rate must be in [0,1)");
  std::vector<double> mask(h.size(), 1.0);
  if (training && rate > 0.0) {
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale = 1.0 / (1.0 - rate);
    for (double& m : mask) m = keep(rng) ? scale : 0.0;
  }
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] * mask[i];
  if (mask_out) *mask_out = std::move(mask);
  return out;
}

inline double l2_penalty(const GcnnModel& model) {
  double total = 0.0;
  for_each_tensor(model, [&](std::span<const double> t, bool penalized) {
    if (!penalized) return;
    for (double v : t) total += v * v;
  });
  return model.l2_lambda * total;
}

/// -ln p[label] (p clipped to [1e-12, 1]) plus the L2 penalty.
inline double cross_entropy_loss(std::span<const double> probs, std::size_t label, const GcnnModel& model) {
  if (label >= probs.size())
    throw InvalidLabel("label " + std::to_string(label) + " out of range for " + std::to_string(probs.size()) +
                       " classes");
  const double p = std::clamp(probs[label], 1e-12, 1.0);
  return -std::log(p) + l2_penalty(model);
}

// ---------------------------------------------------------------------------
// Whole-model forward / backward

struct ForwardCache {
  std::vector<ConvCache> layers;
  std::vector<double> pooled;
  std::vector<std::size_t> pool_argmax;
  std::vector<double> dropout_mask;
  std::vector<double> embedding;  // pooled after dropout
  std::vector<double> probabilities;
  std::size_t n = 0;
  bool valid = false;
};

/// Full forward pass. Dropout is active only when rng is given.
inline ForwardCache forward(const GcnnModel& model, const Matrix& l, const Matrix& x,
                            std::mt19937_64* rng = nullptr) {
  if (x.cols() != model.input_dim())
    throw DimensionMismatch("model expects " + std::to_string(model.input_dim()) + " features, got " +
                            std::to_string(x.cols()));
  ForwardCache cache;
  cache.n = x.rows();
  const Matrix* signal = &x;
  cache.layers.reserve(model.conv_layers.size());
  for (const GraphConvLayer& layer : model.conv_layers) {
    cache.layers.push_back(conv_layer_forward_cached(layer, l, *signal));
    signal = &cache.layers.back().out;
  }
  cache.pooled = model.pool == PoolKind::mean ? global_mean_pool(*signal) : global_max_pool(*signal, &cache.pool_argmax);
  if (rng) {
    cache.embedding = dropout_apply(cache.pooled, model.dropout_rate, *rng, true, &cache.dropout_mask);
  } else {
    cache.embedding = cache.pooled;
    cache.dropout_mask.assign(cache.pooled.size(), 1.0);
  }
  cache.probabilities = dense_softmax_forward(model.dense, cache.embedding);
  cache.valid = true;
  return cache;
}

/// Exact gradient of cross_entropy_loss for the pass recorded in cache.
///
/// Conv coefficients use dLoss/dtheta[k](c,o) = (L^k X[:,c]) . dZ[:,o]; the
/// input gradient sum_k L^k dZ theta[k]^T is accumulated by Horner's rule
/// since L is symmetric. The clip at 1e-12 is ignored here.
inline GcnnModel backward(const GcnnModel& model, const Matrix& l, const ForwardCache& cache, std::size_t label) {
  if (!cache.valid || cache.layers.size() != model.conv_layers.size())
    throw StateError("backward called without a matching forward pass");
  if (label >= model.classes()) throw InvalidLabel("label " + std::to_string(label) + " out of range");

  GcnnModel grad = zeros_like(model);

  std::vector<double> dlogits = cache.probabilities;
  dlogits[label] -= 1.0;
  for (std::size_t c = 0; c < cache.embedding.size(); ++c) {
    auto gw = grad.dense.weights.row(c);
    for (std::size_t j = 0; j < dlogits.size(); ++j) gw[j] = cache.embedding[c] * dlogits[j];
  }
  grad.dense.bias = dlogits;

  const std::size_t width = cache.pooled.size();
  std::vector<double> dpooled(width, 0.0);
  for (std::size_t c = 0; c < width; ++c) {
    auto w = model.dense.weights.row(c);
    double acc = 0.0;
    for (std::size_t j = 0; j < dlogits.size(); ++j) acc += w[j] * dlogits[j];
    dpooled[c] = acc * cache.dropout_mask[c];
  }

  Matrix dout(cache.n, width);
  if (model.pool == PoolKind::mean) {
    const double inv = 1.0 / static_cast<double>(cache.n);
    for (std::size_t i = 0; i < cache.n; ++i)
      for (std::size_t c = 0; c < width; ++c) dout(i, c) = dpooled[c] * inv;
  } else {
    for (std::size_t c = 0; c < width; ++c) dout(cache.pool_argmax[c], c) = dpooled[c];
  }

  for (std::size_t li = model.conv_layers.size(); li-- > 0;) {
    const GraphConvLayer& layer = model.conv_layers[li];
    const ConvCache& lc = cache.layers[li];
    Matrix dpre = std::move(dout);
    if (layer.activation == Activation::relu)
      for (std::size_t i = 0; i < dpre.size(); ++i)
        if (!(lc.pre.values()[i] > 0.0)) dpre.values()[i] = 0.0;

    GraphConvLayer& gl = grad.conv_layers[li];
    for (std::size_t k = 0; k < layer.order(); ++k) gl.theta[k] = matmul_tn(lc.powers[k], dpre);
    for (std::size_t i = 0; i < dpre.rows(); ++i) {
      auto row = dpre.row(i);
      for (std::size_t o = 0; o < row.size(); ++o) gl.bias[o] += row[o];
    }

    if (li == 0) break;
    Matrix acc = matmul_nt(dpre, layer.theta[layer.order() - 1]);
    for (std::size_t k = layer.order() - 1; k-- > 0;) {
      acc = matmul(l, acc);
      acc += matmul_nt(dpre, layer.theta[k]);
    }
    dout = std::move(acc);
  }

  if (model.l2_lambda > 0.0) {
    std::vector<std::span<double>> g_tensors;
    for_each_tensor(grad, [&](std::span<double> t, bool) { g_tensors.push_back(t); });
    std::size_t idx = 0;
    for_each_tensor(model, [&](std::span<const double> t, bool penalized) {
      std::span<double> g = g_tensors[idx++];
      if (!penalized) return;
      for (std::size_t i = 0; i < t.size(); ++i) g[i] += 2.0 * model.l2_lambda * t[i];
    });
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { adam, sgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.9;
};

/// Moment buffers, one per parameter tensor in for_each_tensor order.
struct OptimizerState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  std::uint64_t step = 0;
};

inline void optimizer_step(OptimizerState& state, GcnnModel& params, const GcnnModel& grads,
                           const OptimizerConfig& config) {
  std::vector<std::span<const double>> g_tensors;
  for_each_tensor(grads, [&](std::span<const double> t, bool) { g_tensors.push_back(t); });
  std::vector<std::span<double>> p_tensors;
  for_each_tensor(params, [&](std::span<double> t, bool) { p_tensors.push_back(t); });
  if (g_tensors.size() != p_tensors.size()) throw ShapeMismatch("gradient tensor count differs from parameters");
  for (std::size_t i = 0; i < p_tensors.size(); ++i)
    if (g_tensors[i].size() != p_tensors[i].size())
      throw ShapeMismatch("gradient tensor " + std::to_string(i) + " has the wrong size");

  if (state.first.empty()) {
    for (const auto& p : p_tensors) {
      state.first.emplace_back(p.size(), 0.0);
      state.second.emplace_back(config.kind == OptimizerKind::adam ? p.size() : 0, 0.0);
    }
  } else if (state.first.size() != p_tensors.size()) {
    throw ShapeMismatch("optimizer state does not match the parameters");
  }
  ++state.step;

  const double lr = config.learning_rate;
  if (config.kind == OptimizerKind::adam) {
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < p_tensors.size(); ++i) {
      auto& m = state.first[i];
      auto& v = state.second[i];
      for (std::size_t j = 0; j < m.size(); ++j) {
        const double g = g_tensors[i][j];
        m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
        v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
        p_tensors[i][j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config.epsilon);
      }
    }
  } else {
    for (std::size_t i = 0; i < p_tensors.size(); ++i) {
      auto& velocity = state.first[i];
      for (std::size_t j = 0; j < velocity.size(); ++j) {
        velocity[j] = config.momentum * velocity[j] + g_tensors[i][j];
        p_tensors[i][j] -= lr * velocity[j];
      }
    }
  }
}

}  // namespace spectral_pattern
