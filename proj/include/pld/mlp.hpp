// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense feed-forward classifier with hand-written backpropagation and
// an AdamW optimizer.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pld/error.hpp"
#include "pld/numerics.hpp"

namespace pld {

/// y = W x + b with W stored out x in, row-major.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Activations kept from a forward pass: inputs[l] is the input of layer l
/// (post-ReLU for l > 0); logits is the identity output of the last layer.
struct ForwardCache {
  std::vector<RealMat> inputs;
  RealMat logits;
};

/// ReLU on every hidden layer, identity on the output layer.
class MlpModel {
 public:
  MlpModel() = default;

  /// All-zero parameters.  layer_sizes = {input, hidden..., classes}.
  explicit MlpModel(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    require(sizes_.size() >= 2, "MlpModel: need at least input and output sizes");
    for (std::size_t d : sizes_) require(d >= 1, "MlpModel: zero-width layer");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) layers_.emplace_back(sizes_[l], sizes_[l + 1]);
  }

  /// Weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], drawn layer by
  /// layer in row-major order; biases zero.
  static MlpModel init_uniform(std::vector<std::size_t> layer_sizes, Rng& rng) {
    MlpModel m(std::move(layer_sizes));
    for (auto& layer : m.layers_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
      for (auto& w : layer.weights) w = rng.uniform(-bound, bound);
    }
    return m;
  }

  /// Build from explicit layers; dimensions must chain.
  static MlpModel from_layers(std::vector<DenseLayer> layers) {
    require(!layers.empty(), "MlpModel: no layers");
    std::vector<std::size_t> sizes{layers.front().in};
    for (const auto& l : layers) {
      require(l.in == sizes.back(), "MlpModel: consecutive layer dimensions disagree");
      require(l.weights.size() == l.in * l.out && l.bias.size() == l.out, "MlpModel: parameter size mismatch");
      require_finite(l.weights, "MlpModel weights");
      require_finite(l.bias, "MlpModel bias");
      sizes.push_back(l.out);
    }
    MlpModel m;
    m.sizes_ = std::move(sizes);
    m.layers_ = std::move(layers);
    return m;
  }

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  ForwardCache forward_cached(const RealMat& x) const {
    require(!layers_.empty(), "forward: empty model");
    require(x.cols() == input_dim(), "forward: feature dimension does not match model input");
    ForwardCache cache;
    cache.inputs.reserve(layers_.size());
    RealMat a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& layer = layers_[l];
      RealMat z(a.rows(), layer.out);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto in = a.row(i);
        auto out = z.row(i);
        for (std::size_t o = 0; o < layer.out; ++o) {
          const double* w = layer.weights.data() + o * layer.in;
          double acc = layer.bias[o];
          for (std::size_t k = 0; k < layer.in; ++k) acc += w[k] * in[k];
          out[o] = acc;
        }
      }
      const bool hidden = l + 1 < layers_.size();
      if (hidden)
        for (auto& v : z.data()) v = std::max(v, 0.0);
      cache.inputs.push_back(std::move(a));
      a = std::move(z);
    }
    cache.logits = std::move(a);
    return cache;
  }

  RealMat forward(const RealMat& x) const { return forward_cached(x).logits; }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<DenseLayer> layers_;
};

/// Parameter gradients, one DenseLayer-shaped entry per layer.
struct MlpGradients {
  std::vector<DenseLayer> layers;
};

/// Backpropagate d(loss)/d(logits) through a cached forward pass.
inline MlpGradients backward(const MlpModel& model, const ForwardCache& cache, const RealMat& grad_logits) {
  const auto& layers = model.layers();
  require(cache.inputs.size() == layers.size(), "backward: cache does not match model");
  require(grad_logits.rows() == cache.logits.rows() && grad_logits.cols() == cache.logits.cols(),
          "backward: gradient shape must be N x C");
  MlpGradients grads;
  grads.layers.reserve(layers.size());
  for (const auto& l : layers) grads.layers.emplace_back(l.in, l.out);

  RealMat delta = grad_logits;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    DenseLayer& g = grads.layers[l];
    const RealMat& a = cache.inputs[l];
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto in = a.row(i);
      const auto d = delta.row(i);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double go = d[o];
        g.bias[o] += go;
        if (go == 0.0) continue;
        double* gw = g.weights.data() + o * layer.in;
        for (std::size_t k = 0; k < layer.in; ++k) gw[k] += go * in[k];
      }
    }
    if (l == 0) break;
    // Previous layer's output passed through ReLU: a > 0 marks the active units.
    RealMat prev(a.rows(), layer.in);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto d = delta.row(i);
      auto p = prev.row(i);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double go = d[o];
        if (go == 0.0) continue;
        const double* w = layer.weights.data() + o * layer.in;
        for (std::size_t k = 0; k < layer.in; ++k) p[k] += go * w[k];
      }
      const auto act = a.row(i);
      for (std::size_t k = 0; k < layer.in; ++k)
        if (act[k] <= 0.0) p[k] = 0.0;
    }
    delta = std::move(prev);
  }
  return grads;
}

inline MlpGradients backward(const MlpModel& model, const RealMat& features, const RealMat& grad_logits) {
  return backward(model, model.forward_cached(features), grad_logits);
}

// ---------------------------------------------------------------------------
// AdamW
// ---------------------------------------------------------------------------

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;

  void validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "AdamW: learning rate must be > 0");
    require(beta1 >= 0.0 && beta1 < 1.0, "AdamW: beta1 must be in [0, 1)");
    require(beta2 >= 0.0 && beta2 < 1.0, "AdamW: beta2 must be in [0, 1)");
    require(epsilon > 0.0, "AdamW: epsilon must be > 0");
    require(weight_decay >= 0.0, "AdamW: weight decay must be >= 0");
  }
};

struct AdamWState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

/// One AdamW step over a list of parameter tensors:
///   p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps)
/// with bias-corrected first and second moments.
inline void step_optimizer(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                           AdamWState& state, const AdamWConfig& cfg) {
  cfg.validate();
  require(params.size() == grads.size(), "step_optimizer: params/grads count mismatch");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  require(state.m.size() == params.size(), "step_optimizer: state does not match params");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    require(p.size() == g.size() && p.size() == m.size(), "step_optimizer: tensor shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] = p[i] * decay - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

/// Apply one AdamW step to every weight and bias of `model`.
inline void step_optimizer(MlpModel& model, const MlpGradients& grads, AdamWState& state, const AdamWConfig& cfg) {
  require(grads.layers.size() == model.layers().size(), "step_optimizer: gradient does not match model");
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> gs;
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    params.emplace_back(model.layers()[l].weights);
    params.emplace_back(model.layers()[l].bias);
    gs.emplace_back(grads.layers[l].weights);
    gs.emplace_back(grads.layers[l].bias);
  }
  step_optimizer(params, gs, state, cfg);
}

}  // namespace pld
