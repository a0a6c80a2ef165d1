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

#include "l2grade/optim.hpp"

namespace l2grade {

std::string_view to_string(OptimizerKind k) noexcept { return k == OptimizerKind::adam ? "adam" : "adamw"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "adamw") return OptimizerKind::adamw;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

void OptimizerSettings::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (kind == OptimizerKind::adam && weight_decay != 0.0) {
    throw ConfigError("weight decay must be 0 for adam (use adamw for decoupled decay)");
  }
}

OptimizerState::OptimizerState(OptimizerSettings settings) : settings_(settings) { settings_.validate(); }

void OptimizerState::check_and_shape(std::size_t block_count, std::size_t index, std::string_view name,
                                     std::size_t size, std::span<const double> grads) {
  if (grads.size() != size) {
    throw ShapeError("parameter block '" + std::string(name) + "': " + std::to_string(size) + " values, " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw TrainingError("non-finite gradient in parameter block '" + std::string(name) + "' at index " +
                          std::to_string(i));
    }
  }
  if (m_.empty()) {
    m_.resize(block_count);
    v_.resize(block_count);
  }
  if (m_.size() != block_count) throw ShapeError("optimizer: parameter block count changed between steps");
  if (m_[index].empty()) {
    m_[index].assign(size, 0.0);
    v_[index].assign(size, 0.0);
  } else if (m_[index].size() != size) {
    throw ShapeError("optimizer: parameter block '" + std::string(name) + "' changed size");
  }
}

}  // namespace l2grade
