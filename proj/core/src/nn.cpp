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

#include "l2grade/nn.hpp"

namespace l2grade {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::rectifier:
      return "rectifier";
    case Activation::tanh:
      return "tanh";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "rectifier" || name == "relu") return Activation::rectifier;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

MseResult mse_loss(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) {
    throw ShapeError("mse_loss: " + std::to_string(preds.size()) + " predictions vs " +
                     std::to_string(targets.size()) + " targets");
  }
  if (preds.empty()) throw ShapeError("mse_loss: empty input");
  const double n = static_cast<double>(preds.size());
  MseResult res{0.0, std::vector<double>(preds.size())};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    res.loss += d * d;
    res.grad[i] = 2.0 * d / n;
  }
  res.loss /= n;
  return res;
}

void accumulate_gradients(std::vector<DenseGrad>& acc, const std::vector<DenseGrad>& g, double weight) {
  if (acc.size() != g.size()) throw ShapeError("accumulate_gradients: depth mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) {
    auto dst = acc[i].weights.values();
    const auto src = g[i].weights.values();
    if (dst.size() != src.size() || acc[i].bias.size() != g[i].bias.size()) {
      throw ShapeError("accumulate_gradients: block shape mismatch at layer " + std::to_string(i));
    }
    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += weight * src[e];
    for (std::size_t e = 0; e < acc[i].bias.size(); ++e) acc[i].bias[e] += weight * g[i].bias[e];
  }
}

}  // namespace l2grade
