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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "l2grade/errors.hpp"
#include "l2grade/nn.hpp"

namespace l2grade {

enum class OptimizerKind { adam, adamw };

std::string_view to_string(OptimizerKind k) noexcept;
OptimizerKind optimizer_from_string(std::string_view name);

/// Adam hyperparameters. beta/epsilon defaults are the usual Adam ones; the
/// published recipes only name the optimizer and learning rate.
struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::adamw;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;  // decoupled; must be 0 for plain adam

  void validate() const;
};

/// A parameter tensor seen by the optimizer: float or double values, double gradient.
template <typename T>
struct ParamBlock {
  std::string name;
  std::span<T> values;
  std::span<const double> grads;
};

class OptimizerState {
 public:
  explicit OptimizerState(OptimizerSettings settings);

  const OptimizerSettings& settings() const noexcept { return settings_; }
  std::uint64_t step_count() const noexcept { return step_count_; }
  const std::vector<std::vector<double>>& first_moment() const noexcept { return m_; }
  const std::vector<std::vector<double>>& second_moment() const noexcept { return v_; }

  /// Bias-corrected Adam update; adamw first shrinks each value by
  /// lr * weight_decay * value. Gradients are checked for finiteness before
  /// anything is modified.
  template <typename T>
  void step(std::span<const ParamBlock<T>> blocks);

 private:
  void check_and_shape(std::size_t block_count, std::size_t index, std::string_view name, std::size_t size,
                       std::span<const double> grads);

  OptimizerSettings settings_;
  std::uint64_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

template <typename T>
void OptimizerState::step(std::span<const ParamBlock<T>> blocks) {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    check_and_shape(blocks.size(), b, blocks[b].name, blocks[b].values.size(), blocks[b].grads);
  }
  ++step_count_;
  const auto& s = settings_;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  const double decay = s.kind == OptimizerKind::adamw ? s.learning_rate * s.weight_decay : 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto values = blocks[b].values;
    const auto grads = blocks[b].grads;
    auto& m = m_[b];
    auto& v = v_[b];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
      double p = static_cast<double>(values[i]);
      p -= decay * p;
      p -= s.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.epsilon);
      values[i] = static_cast<T>(p);
    }
  }
}

/// Views over every weight/bias block of `net`, paired with `grads`.
template <typename T>
std::vector<ParamBlock<T>> parameter_blocks(Mlp<T>& net, const std::vector<DenseGrad>& grads) {
  if (grads.size() != net.layers.size()) throw ShapeError("gradient list does not match network depth");
  std::vector<ParamBlock<T>> blocks;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    blocks.push_back({"layer" + std::to_string(i) + ".W", net.layers[i].weights.values(), grads[i].weights.values()});
    blocks.push_back({"layer" + std::to_string(i) + ".b", net.layers[i].bias, grads[i].bias});
  }
  return blocks;
}

}  // namespace l2grade
