// Copyright 2026 The l2grade Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "l2grade/errors.hpp"
#include "l2grade/matrix.hpp"
#include "l2grade/rng.hpp"

// Dense-network numerics for the grader heads. Everything is templated on the
// storage scalar: training runs in float, gradient verification in double.
// Reductions always accumulate in double.

namespace l2grade {

enum class Activation { identity, rectifier, tanh };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

template <typename T>
struct DenseLayer {
  BasicMatrix<T> weights;  // in_dim x out_dim
  std::vector<T> bias;     // out_dim
  Activation activation = Activation::rectifier;

  std::size_t in_dim() const noexcept { return weights.rows(); }
  std::size_t out_dim() const noexcept { return weights.cols(); }
  std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }

  template <typename U>
  DenseLayer<U> cast() const {
    return {weights.template cast<U>(), std::vector<U>(bias.begin(), bias.end()), activation};
  }
};

/// Gradient of one dense layer. Always double.
struct DenseGrad {
  MatrixD weights;
  std::vector<double> bias;
};

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
template <typename T>
DenseLayer<T> init_dense(std::size_t in_dim, std::size_t out_dim, Activation activation, RngStream& rng) {
  DenseLayer<T> layer{BasicMatrix<T>(in_dim, out_dim), std::vector<T>(out_dim, T{}), activation};
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (T& w : layer.weights.values()) w = static_cast<T>(rng.uniform(-limit, limit));
  return layer;
}

/// Column means over frames, accumulated in double.
template <typename T>
BasicMatrix<T> mean_pool(const BasicMatrix<T>& seq) {
  if (seq.rows() == 0) throw ShapeError("empty embedding sequence");
  std::vector<double> acc(seq.cols(), 0.0);
  for (std::size_t r = 0; r < seq.rows(); ++r) {
    const auto row = seq.row(r);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += static_cast<double>(row[c]);
  }
  BasicMatrix<T> out(1, seq.cols());
  const double n = static_cast<double>(seq.rows());
  for (std::size_t c = 0; c < acc.size(); ++c) out(0, c) = static_cast<T>(acc[c] / n);
  return out;
}

inline double activate(Activation a, double v) noexcept {
  switch (a) {
    case Activation::rectifier:
      return v > 0.0 ? v : 0.0;
    case Activation::tanh:
      return std::tanh(v);
    case Activation::identity:
      break;
  }
  return v;
}

/// Derivative expressed through the activation's output y.
inline double activation_slope(Activation a, double y) noexcept {
  switch (a) {
    case Activation::rectifier:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - y * y;
    case Activation::identity:
      break;
  }
  return 1.0;
}

/// activation(x * W + b), row by row.
template <typename T>
BasicMatrix<T> dense_forward(const BasicMatrix<T>& x, const DenseLayer<T>& layer) {
  if (x.cols() != layer.in_dim()) {
    throw ShapeError("dense_forward: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                     std::to_string(layer.in_dim()));
  }
  if (layer.bias.size() != layer.out_dim()) {
    throw ShapeError("dense_forward: bias length " + std::to_string(layer.bias.size()) + " != out_dim " +
                     std::to_string(layer.out_dim()));
  }
  const std::size_t out_dim = layer.out_dim();
  BasicMatrix<T> out(x.rows(), out_dim);
  std::vector<double> acc(out_dim);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < out_dim; ++j) acc[j] = static_cast<double>(layer.bias[j]);
    const auto xr = x.row(r);
    for (std::size_t k = 0; k < xr.size(); ++k) {
      const double xv = static_cast<double>(xr[k]);
      if (xv == 0.0) continue;
      const T* w = layer.weights.row(k).data();
      double* a = acc.data();
      for (std::size_t j = 0; j < out_dim; ++j) a[j] += xv * static_cast<double>(w[j]);
    }
    auto orow = out.row(r);
    for (std::size_t j = 0; j < out_dim; ++j) orow[j] = static_cast<T>(activate(layer.activation, acc[j]));
  }
  return out;
}

/// Backward pass through one dense layer given its input x, its output y and
/// dL/dy. dL/dx is only produced when `input_grad` is non-null.
template <typename T>
DenseGrad dense_backward(const BasicMatrix<T>& x, const BasicMatrix<T>& y, const MatrixD& grad_y,
                         const DenseLayer<T>& layer, MatrixD* input_grad) {
  const std::size_t in_dim = layer.in_dim();
  const std::size_t out_dim = layer.out_dim();
  DenseGrad g{MatrixD(in_dim, out_dim), std::vector<double>(out_dim, 0.0)};
  if (input_grad != nullptr) *input_grad = MatrixD(x.rows(), in_dim);
  std::vector<double> pre(out_dim);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto yr = y.row(r);
    const auto gr = grad_y.row(r);
    for (std::size_t j = 0; j < out_dim; ++j) {
      pre[j] = gr[j] * activation_slope(layer.activation, static_cast<double>(yr[j]));
      g.bias[j] += pre[j];
    }
    const auto xr = x.row(r);
    for (std::size_t k = 0; k < in_dim; ++k) {
      const double xv = static_cast<double>(xr[k]);
      if (xv == 0.0) continue;
      double* gw = g.weights.row(k).data();
      for (std::size_t j = 0; j < out_dim; ++j) gw[j] += xv * pre[j];
    }
    if (input_grad != nullptr) {
      auto dx = input_grad->row(r);
      for (std::size_t k = 0; k < in_dim; ++k) {
        const T* w = layer.weights.row(k).data();
        double s = 0.0;
        for (std::size_t j = 0; j < out_dim; ++j) s += pre[j] * static_cast<double>(w[j]);
        dx[k] = s;
      }
    }
  }
  return g;
}

/// Inverted dropout. In training mode each element is zeroed with
/// probability `rate` and survivors are scaled by 1/(1-rate); `scale`
/// receives the per-element multiplier. Inference mode and rate 0 are the
/// identity and draw nothing from the stream.
template <typename T>
BasicMatrix<T> dropout_apply(const BasicMatrix<T>& x, double rate, RngStream& rng, bool training,
                             std::vector<T>* scale = nullptr) {
  if (!(rate >= 0.0) || rate >= 1.0) {
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (scale != nullptr) scale->clear();
  if (!training || rate == 0.0) return x;
  BasicMatrix<T> out = x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  if (scale != nullptr) scale->resize(x.size());
  auto values = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T m = rng.uniform() < rate ? T{0} : keep_scale;
    values[i] *= m;
    if (scale != nullptr) (*scale)[i] = m;
  }
  return out;
}

struct CrossEntropyResult {
  double loss = 0.0;
  MatrixD probs;
  MatrixD grad_logits;
};

/// Softmax (max-subtracted) followed by mean negative log-likelihood.
template <typename T>
CrossEntropyResult softmax_cross_entropy(const BasicMatrix<T>& logits, std::span<const int> labels) {
  const std::size_t batch = logits.rows();
  const std::size_t classes = logits.cols();
  if (classes < 2) throw ShapeError("softmax_cross_entropy needs at least 2 classes");
  if (labels.size() != batch) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(batch));
  }
  if (batch == 0) throw ShapeError("softmax_cross_entropy: empty batch");
  CrossEntropyResult res{0.0, MatrixD(batch, classes), MatrixD(batch, classes)};
  for (std::size_t r = 0; r < batch; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw DomainError("label " + std::to_string(label) + " out of range [0, " + std::to_string(classes) + ")");
    }
    const auto lr = logits.row(r);
    double mx = static_cast<double>(lr[0]);
    for (const T v : lr) mx = std::max(mx, static_cast<double>(v));
    double denom = 0.0;
    auto pr = res.probs.row(r);
    for (std::size_t c = 0; c < classes; ++c) {
      pr[c] = std::exp(static_cast<double>(lr[c]) - mx);
      denom += pr[c];
    }
    for (double& p : pr) p /= denom;
    res.loss -= (static_cast<double>(lr[label]) - mx) - std::log(denom);
    auto gr = res.grad_logits.row(r);
    for (std::size_t c = 0; c < classes; ++c) {
      gr[c] = (pr[c] - (static_cast<std::size_t>(label) == c ? 1.0 : 0.0)) / static_cast<double>(batch);
    }
  }
  res.loss /= static_cast<double>(batch);
  return res;
}

struct MseResult {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Mean squared error and its gradient 2(pred - target)/n.
MseResult mse_loss(std::span<const double> preds, std::span<const double> targets);

/// A stack of dense layers with optional dropout after each hidden layer.
template <typename T>
struct Mlp {
  std::vector<DenseLayer<T>> layers;
  std::vector<double> dropout_after;  // one rate per layer; the output layer's must be 0

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  template <typename U>
  Mlp<U> cast() const {
    Mlp<U> out;
    out.dropout_after = dropout_after;
    for (const auto& l : layers) out.layers.push_back(l.template cast<U>());
    return out;
  }
};

template <typename T>
struct ForwardTrace {
  std::vector<BasicMatrix<T>> inputs;    // input fed to layer i (after the previous dropout)
  std::vector<BasicMatrix<T>> outputs;   // post-activation output of layer i, before its dropout
  std::vector<std::vector<T>> dropout_scale;  // empty when layer i's dropout was the identity

  const BasicMatrix<T>& result() const { return outputs.back(); }
  /// Output of the last hidden layer (input to the output layer).
  const BasicMatrix<T>& penultimate() const { return inputs.back(); }
};

template <typename T>
ForwardTrace<T> mlp_forward(const Mlp<T>& net, const BasicMatrix<T>& x, RngStream* rng, bool training) {
  if (training && rng == nullptr) throw ConfigError("training-mode forward pass needs an RNG stream");
  ForwardTrace<T> trace;
  const std::size_t n = net.layers.size();
  trace.inputs.reserve(n);
  trace.outputs.reserve(n);
  trace.dropout_scale.resize(n);
  BasicMatrix<T> current = x;
  for (std::size_t i = 0; i < n; ++i) {
    trace.inputs.push_back(std::move(current));
    trace.outputs.push_back(dense_forward(trace.inputs.back(), net.layers[i]));
    const double rate = i < net.dropout_after.size() ? net.dropout_after[i] : 0.0;
    if (i + 1 < n) {
      if (training && rate > 0.0) {
        current = dropout_apply(trace.outputs.back(), rate, *rng, true, &trace.dropout_scale[i]);
      } else {
        current = trace.outputs.back();
      }
    }
  }
  return trace;
}

/// Backpropagate dL/d(output) through the stack. The gradient with respect to
/// the network input is not computed.
template <typename T>
std::vector<DenseGrad> mlp_backward(const Mlp<T>& net, const ForwardTrace<T>& trace, MatrixD grad_out) {
  const std::size_t n = net.layers.size();
  std::vector<DenseGrad> grads(n);
  for (std::size_t i = n; i-- > 0;) {
    if (i + 1 < n && !trace.dropout_scale[i].empty()) {
      const auto& s = trace.dropout_scale[i];
      auto g = grad_out.values();
      for (std::size_t e = 0; e < g.size(); ++e) g[e] *= static_cast<double>(s[e]);
    }
    MatrixD grad_in;
    grads[i] = dense_backward(trace.inputs[i], trace.outputs[i], grad_out, net.layers[i], i > 0 ? &grad_in : nullptr);
    grad_out = std::move(grad_in);
  }
  return grads;
}

/// Zero-filled gradient buffers shaped like `net`.
template <typename T>
std::vector<DenseGrad> zero_gradients(const Mlp<T>& net) {
  std::vector<DenseGrad> g;
  g.reserve(net.layers.size());
  for (const auto& l : net.layers) g.push_back({MatrixD(l.in_dim(), l.out_dim()), std::vector<double>(l.out_dim(), 0.0)});
  return g;
}

/// acc += weight * g, block by block.
void accumulate_gradients(std::vector<DenseGrad>& acc, const std::vector<DenseGrad>& g, double weight);

}  // namespace l2grade
