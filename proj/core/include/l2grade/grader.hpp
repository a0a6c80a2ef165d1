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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2grade/gradcheck.hpp"
#include "l2grade/manifest.hpp"
#include "l2grade/nn.hpp"
#include "l2grade/optim.hpp"

namespace l2grade {

/// speech_head: pooled frames -> Dense 768 -> Dropout -> output.
/// text_head: [CLS] row -> 3 x Dense 768 -> 3 x Dense 128 -> Dropout -> output.
/// fusion_head: concatenated representations -> Dense N -> Dropout -> output.
enum class HeadKind { speech_head, text_head, fusion_head };

/// Which per-utterance vector a PredictionSet exposes for deep fusion.
enum class HiddenRep { encoder, penultimate };

std::string_view to_string(HeadKind k) noexcept;
std::string_view to_string(HiddenRep r) noexcept;
std::optional<HeadKind> parse_head_kind(std::string_view s) noexcept;
std::optional<HiddenRep> parse_hidden_rep(std::string_view s) noexcept;

inline constexpr std::size_t kEncoderWidth = 768;
inline constexpr int kConfigFormatVersion = 1;

struct GraderConfig {
  std::string name = "custom";
  HeadKind head_kind = HeadKind::speech_head;
  Task task;
  std::size_t input_dim = kEncoderWidth;
  std::vector<std::size_t> hidden_units;  // filled from head_kind when empty
  Activation hidden_activation = Activation::rectifier;
  double dropout_rate = 0.0;
  std::size_t epochs = 1;
  std::size_t batch_size = 1;
  std::size_t grad_accum = 1;
  OptimizerSettings optimizer;
  std::optional<std::size_t> max_rows;
  HiddenRep hidden_rep = HiddenRep::encoder;
  std::uint64_t seed = 0;

  std::size_t output_units() const noexcept { return task.is_classification() ? kCefrClassCount : 1; }
  /// Fills hidden_units and checks every architectural and training invariant.
  void normalize();
  void validate() const;
  std::size_t parameter_count() const;
};

/// Hidden layer widths required by a head kind (fusion_head: the single
/// configured width, 16 by default).
std::vector<std::size_t> default_hidden_units(HeadKind kind);

/// The published recipes. Throws ConfigError for an unknown name.
GraderConfig builtin_config(std::string_view name);
std::vector<std::string> builtin_config_names();

nlohmann::json config_to_json(const GraderConfig& c);

/// Strict parse: unknown keys, type mismatches and missing fields raise
/// ConfigError with a JSON path rooted at `path`.
GraderConfig config_from_json(const nlohmann::json& j, const std::string& path = "$");

/// Applies the keys of `overrides` (same schema as config_to_json, all
/// optional) on top of `base`.
void apply_config_overrides(GraderConfig& base, const nlohmann::json& overrides, const std::string& path = "$");

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_metric;  // accuracy (classify5) or MSE (regression)
};

struct GraderModel {
  GraderConfig config;
  Mlp<float> network;
  std::vector<EpochRecord> history;
  std::string manifest_hash;
};

/// Head input vectors plus aligned targets. Rows of `inputs` are utterances.
struct TrainingData {
  std::vector<std::string> ids;
  std::vector<Split> splits;
  Matrix inputs;
  std::vector<int> classes;
  std::vector<double> scores;
  bool has_targets = false;

  std::size_t size() const noexcept { return ids.size(); }
};

Mlp<float> build_head(const GraderConfig& config, RngStream& rng);

/// Speech: mean of all frames. Text: row 0, reading at most max_rows rows.
Matrix utterance_input(const UtteranceRecord& record, const GraderConfig& config);

/// Builds the head inputs for every record of `split` (all splits when
/// nullopt). Targets are encoded when `require_targets` or when every record
/// carries the label.
TrainingData load_split(const Manifest& manifest, std::optional<Split> split, const GraderConfig& config,
                        bool require_targets);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Fixed-epoch minibatch training with gradient accumulation. Deterministic
/// given config.seed.
GraderModel train_head(const GraderConfig& config, const TrainingData& train, const TrainingData* dev = nullptr,
                       const EpochCallback& on_epoch = {});

GraderModel train_grader(const Manifest& manifest, const GraderConfig& config, const EpochCallback& on_epoch = {});

/// Inference-mode outputs (logits or scores) for every row of `inputs`.
/// `penultimate`, when non-null, receives the last hidden layer's activations.
Matrix infer(const GraderModel& model, const Matrix& inputs, Matrix* penultimate = nullptr);

/// Checkpoint directory: config.json, history.json, manifest.hash and
/// weights/layer<i>_{W,b}.emb1.
void persist_model(const GraderModel& model, const std::filesystem::path& dir);
GraderModel load_model(const std::filesystem::path& dir);

/// Finite-difference check of a freshly initialized head in double
/// precision, dropout off. Speech heads include the mean-pool step.
struct HeadCheckOptions {
  std::uint64_t seed = 0;
  std::size_t batch = 4;
  double tolerance = 1e-4;
  std::size_t samples = 200;
  double gradient_corruption = 0.0;  // scale analytic gradients by (1 + x); fault-injection only
};

GradCheckReport check_head_gradients(const GraderConfig& config, const HeadCheckOptions& options);

}  // namespace l2grade
