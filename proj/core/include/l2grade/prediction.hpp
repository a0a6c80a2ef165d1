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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "l2grade/grader.hpp"
#include "l2grade/manifest.hpp"
#include "l2grade/metrics.hpp"

namespace l2grade {

/// Per-utterance outputs of one grader (or of a fusion).
struct PredictionSet {
  Task task;
  std::vector<std::string> utterance_ids;
  std::vector<Split> splits;
  std::vector<std::vector<double>> probabilities;  // classify5
  std::vector<double> scores;                      // regression, raw
  std::vector<double> clipped_scores;              // regression, clipped to the task range
  std::vector<double> target_scores;               // when has_targets and regression
  std::vector<int> target_classes;                 // when has_targets and classify5
  bool has_targets = false;
  std::vector<std::vector<float>> hidden_reps;     // empty unless requested

  std::size_t size() const noexcept { return utterance_ids.size(); }
  std::vector<int> predicted_classes() const;
};

struct PredictOptions {
  bool include_hidden = false;
};

/// Inference-mode forward pass over prepared inputs.
PredictionSet predict_inputs(const GraderModel& model, const TrainingData& data, const PredictOptions& options = {});

/// nullopt split predicts every record.
PredictionSet predict(const GraderModel& model, const Manifest& manifest, std::optional<Split> split,
                      const PredictOptions& options = {});

/// JSON Lines, one utterance per line.
void write_predictions(const std::filesystem::path& path, const PredictionSet& p);
PredictionSet read_predictions(const std::filesystem::path& path);

/// Restrict to one split, preserving order.
PredictionSet select_split(const PredictionSet& p, Split s);

/// Metrics over raw scores (regression) or argmax classes (classify5).
/// Requires targets.
EvalReport evaluate_predictions(const PredictionSet& p, double sigma = kDefaultCurveSigma);

}  // namespace l2grade
