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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "l2grade/grader.hpp"
#include "l2grade/prediction.hpp"

namespace l2grade {

enum class FusionMode { shallow, deep };

/// Deep-fusion network and schedule. Ignored in shallow mode.
struct FusionConfig {
  FusionMode mode = FusionMode::shallow;
  std::size_t deep_hidden_units = 16;
  double deep_dropout = 0.5;
  std::size_t deep_epochs = 3000;
  double deep_learning_rate = 5e-5;
  std::size_t deep_batch_size = 512;
  OptimizerKind deep_optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
};

nlohmann::json fusion_config_to_json(const FusionConfig& c);
FusionConfig fusion_config_from_json(const nlohmann::json& j, const std::string& path = "$");

/// Per-utterance mean of two regression score sets, aligned by utterance id
/// (output order follows `a`). No clipping is applied to `scores`.
PredictionSet shallow_fuse(const PredictionSet& a, const PredictionSet& b);

/// Aligned inputs for deep fusion.
struct FusionInputs {
  Task task;
  std::vector<std::string> utterance_ids;
  std::vector<Split> splits;
  std::vector<std::vector<float>> hidden_a;
  std::vector<std::vector<float>> hidden_b;
  std::vector<double> targets;
};

/// Joins two prediction sets (which must carry hidden_reps and targets) on
/// utterance id.
FusionInputs align_for_fusion(const PredictionSet& a, const PredictionSet& b);

struct DeepFusionResult {
  GraderModel model;
  PredictionSet predictions;  // every utterance, all splits
};

/// Trains Dense(deep_hidden_units) -> Dropout -> linear output on
/// concat(hidden_a, hidden_b) over the train split.
DeepFusionResult deep_fuse(const FusionInputs& inputs, const FusionConfig& config);

/// The GraderConfig a deep fusion of width `input_dim` trains with.
GraderConfig fusion_grader_config(const FusionConfig& config, std::size_t input_dim, const Task& task);

}  // namespace l2grade
