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

#include "l2grade/fusion.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "l2grade/errors.hpp"

namespace l2grade {
namespace {

using nlohmann::json;

std::map<std::string, std::size_t> index_by_id(const PredictionSet& p, const char* which) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!idx.emplace(p.utterance_ids[i], i).second) {
      throw ValidationError({{p.utterance_ids[i], std::string("duplicate utterance id in prediction set ") + which}});
    }
  }
  return idx;
}

void require_same_ids(const std::map<std::string, std::size_t>& a, const std::map<std::string, std::size_t>& b) {
  std::vector<ValidationIssue> issues;
  for (const auto& [id, _] : a) {
    if (!b.contains(id)) issues.push_back({id, "present in the first prediction set only"});
  }
  for (const auto& [id, _] : b) {
    if (!a.contains(id)) issues.push_back({id, "present in the second prediction set only"});
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

}  // namespace

json fusion_config_to_json(const FusionConfig& c) {
  return {{"mode", c.mode == FusionMode::shallow ? "shallow" : "deep"},
          {"deep_hidden_units", c.deep_hidden_units},
          {"deep_dropout", c.deep_dropout},
          {"deep_epochs", c.deep_epochs},
          {"deep_learning_rate", c.deep_learning_rate},
          {"deep_batch_size", c.deep_batch_size},
          {"deep_optimizer", to_string(c.deep_optimizer)},
          {"seed", c.seed}};
}

FusionConfig fusion_config_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected an object", path);
  static const std::set<std::string> keys{"mode",         "deep_hidden_units",  "deep_dropout",    "deep_epochs",
                                          "deep_learning_rate", "deep_batch_size", "deep_optimizer", "seed"};
  FusionConfig c;
  for (const auto& [key, v] : j.items()) {
    const std::string at = path + "." + key;
    if (!keys.contains(key)) throw ConfigError("unknown key '" + key + "'", at);
    if (key == "mode" || key == "deep_optimizer") {
      if (!v.is_string()) throw ConfigError(std::string("expected a string, got ") + v.type_name(), at);
      const auto s = v.get<std::string>();
      if (key == "mode") {
        if (s == "shallow") {
          c.mode = FusionMode::shallow;
        } else if (s == "deep") {
          c.mode = FusionMode::deep;
        } else {
          throw ConfigError("unknown fusion mode '" + s + "'", at);
        }
      } else {
        try {
          c.deep_optimizer = optimizer_from_string(s);
        } catch (const ConfigError& e) {
          throw ConfigError(e.what(), at);
        }
      }
    } else if (key == "deep_dropout" || key == "deep_learning_rate") {
      if (!v.is_number()) throw ConfigError(std::string("expected a number, got ") + v.type_name(), at);
      (key == "deep_dropout" ? c.deep_dropout : c.deep_learning_rate) = v.get<double>();
    } else {
      if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) throw ConfigError(std::string("expected a non-negative integer, got ") + v.dump(), at);
      if (key == "deep_hidden_units") c.deep_hidden_units = v.get<std::size_t>();
      if (key == "deep_epochs") c.deep_epochs = v.get<std::size_t>();
      if (key == "deep_batch_size") c.deep_batch_size = v.get<std::size_t>();
      if (key == "seed") c.seed = v.get<std::uint64_t>();
    }
  }
  return c;
}

PredictionSet shallow_fuse(const PredictionSet& a, const PredictionSet& b) {
  if (a.task.is_classification() || b.task.is_classification()) {
    throw ConfigError("shallow fusion averages regression scores; classification sets are not supported");
  }
  const auto ia = index_by_id(a, "a");
  const auto ib = index_by_id(b, "b");
  require_same_ids(ia, ib);

  PredictionSet out;
  out.task = a.task;
  out.utterance_ids = a.utterance_ids;
  out.splits = a.splits;
  out.has_targets = a.has_targets;
  if (a.has_targets) out.target_scores = a.target_scores;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t j = ib.at(a.utterance_ids[i]);
    const double s = 0.5 * (a.scores[i] + b.scores[j]);
    out.scores.push_back(s);
    out.clipped_scores.push_back(std::clamp(s, out.task.score_min(), out.task.score_max()));
  }
  return out;
}

FusionInputs align_for_fusion(const PredictionSet& a, const PredictionSet& b) {
  if (a.hidden_reps.empty() || b.hidden_reps.empty()) {
    throw ConfigError("deep fusion needs hidden representations in both prediction sets (predict --hidden)");
  }
  if (a.task.is_classification() || b.task.is_classification()) {
    throw ConfigError("deep fusion is defined for regression tasks only");
  }
  if (!a.has_targets && !b.has_targets) throw ConfigError("deep fusion needs targets in at least one prediction set");
  const auto ia = index_by_id(a, "a");
  const auto ib = index_by_id(b, "b");
  require_same_ids(ia, ib);

  FusionInputs in;
  in.task = a.task;
  std::vector<ValidationIssue> issues;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t j = ib.at(a.utterance_ids[i]);
    if (a.splits[i] != b.splits[j]) issues.push_back({a.utterance_ids[i], "split differs between prediction sets"});
    if (a.has_targets && b.has_targets && a.target_scores[i] != b.target_scores[j]) {
      issues.push_back({a.utterance_ids[i], "target differs between prediction sets"});
    }
    in.utterance_ids.push_back(a.utterance_ids[i]);
    in.splits.push_back(a.splits[i]);
    in.hidden_a.push_back(a.hidden_reps[i]);
    in.hidden_b.push_back(b.hidden_reps[j]);
    in.targets.push_back(a.has_targets ? a.target_scores[i] : b.target_scores[j]);
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return in;
}

GraderConfig fusion_grader_config(const FusionConfig& config, std::size_t input_dim, const Task& task) {
  GraderConfig c;
  c.name = "deep-fusion";
  c.head_kind = HeadKind::fusion_head;
  c.task = task;
  c.input_dim = input_dim;
  c.hidden_units = {config.deep_hidden_units};
  c.dropout_rate = config.deep_dropout;
  c.epochs = config.deep_epochs;
  c.batch_size = config.deep_batch_size;
  c.grad_accum = 1;
  c.optimizer.kind = config.deep_optimizer;
  c.optimizer.learning_rate = config.deep_learning_rate;
  c.optimizer.weight_decay = config.deep_optimizer == OptimizerKind::adamw ? 0.01 : 0.0;
  c.seed = config.seed;
  c.normalize();
  return c;
}

DeepFusionResult deep_fuse(const FusionInputs& in, const FusionConfig& config) {
  if (in.task.is_classification()) throw ConfigError("deep fusion is defined for regression tasks only");
  const std::size_t n = in.utterance_ids.size();
  if (n == 0 || in.hidden_a.size() != n || in.hidden_b.size() != n || in.targets.size() != n || in.splits.size() != n) {
    throw ShapeError("deep_fuse: inputs are empty or not aligned");
  }
  const std::size_t da = in.hidden_a[0].size();
  const std::size_t db = in.hidden_b[0].size();
  std::vector<ValidationIssue> issues;
  for (std::size_t i = 0; i < n; ++i) {
    if (in.hidden_a[i].size() != da || in.hidden_b[i].size() != db) {
      issues.push_back({in.utterance_ids[i], "hidden representation width " + std::to_string(in.hidden_a[i].size()) +
                                                 "+" + std::to_string(in.hidden_b[i].size()) + ", expected " +
                                                 std::to_string(da) + "+" + std::to_string(db)});
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));

  TrainingData all;
  all.inputs = Matrix(n, da + db);
  all.has_targets = true;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = all.inputs.row(i);
    std::ranges::copy(in.hidden_a[i], row.begin());
    std::ranges::copy(in.hidden_b[i], row.begin() + static_cast<std::ptrdiff_t>(da));
    all.ids.push_back(in.utterance_ids[i]);
    all.splits.push_back(in.splits[i]);
    all.scores.push_back(in.targets[i]);
  }
  auto subset = [&](Split s) {
    TrainingData d;
    d.has_targets = true;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (all.splits[i] == s) rows.push_back(i);
    }
    d.inputs = Matrix(rows.size(), da + db);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::ranges::copy(all.inputs.row(rows[r]), d.inputs.row(r).begin());
      d.ids.push_back(all.ids[rows[r]]);
      d.splits.push_back(s);
      d.scores.push_back(all.scores[rows[r]]);
    }
    return d;
  };
  const TrainingData train = subset(Split::train);
  if (train.size() == 0) throw TrainingError("deep fusion: train split is empty");
  const TrainingData dev = subset(Split::dev);

  const GraderConfig gc = fusion_grader_config(config, da + db, in.task);
  DeepFusionResult res{train_head(gc, train, dev.size() > 0 ? &dev : nullptr), {}};
  res.predictions = predict_inputs(res.model, all);
  return res;
}

}  // namespace l2grade
