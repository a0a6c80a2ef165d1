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

#include "l2grade/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "l2grade/errors.hpp"

namespace l2grade {
namespace {

using nlohmann::json;

std::vector<double> softmax_row(std::span<const float> logits) {
  double mx = logits[0];
  for (const float v : logits) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> p(logits.size());
  double denom = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    p[c] = std::exp(static_cast<double>(logits[c]) - mx);
    denom += p[c];
  }
  for (double& v : p) v /= denom;
  return p;
}

}  // namespace

std::vector<int> PredictionSet::predicted_classes() const {
  std::vector<int> out;
  out.reserve(probabilities.size());
  for (const auto& p : probabilities) out.push_back(static_cast<int>(std::ranges::max_element(p) - p.begin()));
  return out;
}

PredictionSet predict_inputs(const GraderModel& model, const TrainingData& data, const PredictOptions& options) {
  PredictionSet p;
  p.task = model.config.task;
  p.utterance_ids = data.ids;
  p.splits = data.splits;
  p.has_targets = data.has_targets;
  if (data.has_targets) {
    p.target_classes = data.classes;
    p.target_scores = data.scores;
  }
  if (data.size() == 0) return p;
  const bool want_penultimate = options.include_hidden && model.config.hidden_rep == HiddenRep::penultimate;
  Matrix penultimate;
  const Matrix out = infer(model, data.inputs, want_penultimate ? &penultimate : nullptr);
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (p.task.is_classification()) {
      p.probabilities.push_back(softmax_row(out.row(r)));
    } else {
      const double s = static_cast<double>(out(r, 0));
      p.scores.push_back(s);
      p.clipped_scores.push_back(std::clamp(s, p.task.score_min(), p.task.score_max()));
    }
    if (options.include_hidden) {
      const auto src = want_penultimate ? penultimate.row(r) : data.inputs.row(r);
      p.hidden_reps.emplace_back(src.begin(), src.end());
    }
  }
  return p;
}

PredictionSet predict(const GraderModel& model, const Manifest& manifest, std::optional<Split> split,
                      const PredictOptions& options) {
  const TrainingData data = load_split(manifest, split, model.config, false);
  if (data.size() == 0) {
    throw ValidationError({{manifest.dataset_name, "no records in split " +
                                                       std::string(split ? to_string(*split) : "all")}});
  }
  return predict_inputs(model, data, options);
}

void write_predictions(const std::filesystem::path& path, const PredictionSet& p) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  const bool classify = p.task.is_classification();
  for (std::size_t i = 0; i < p.size(); ++i) {
    json row;
    row["utterance_id"] = p.utterance_ids[i];
    row["split"] = to_string(p.splits[i]);
    row["task"] = to_string(p.task);
    if (classify) {
      row["probabilities"] = p.probabilities[i];
      const auto best = std::ranges::max_element(p.probabilities[i]) - p.probabilities[i].begin();
      row["predicted_class"] = to_string(static_cast<CefrClass>(best));
      if (p.has_targets) row["target_class"] = to_string(static_cast<CefrClass>(p.target_classes[i]));
    } else {
      row["score"] = p.scores[i];
      row["clipped_score"] = p.clipped_scores[i];
      if (p.has_targets) row["target"] = p.target_scores[i];
    }
    if (!p.hidden_reps.empty()) row["hidden"] = p.hidden_reps[i];
    out << row.dump() << '\n';
  }
  if (!out) throw Error(path.string() + ": write failed");
}

PredictionSet read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open predictions");
  PredictionSet p;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  std::vector<ValidationIssue> issues;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    try {
      const json row = json::parse(line);
      const Task task = parse_task(row.at("task").get<std::string>());
      if (first) {
        p.task = task;
        p.has_targets = row.contains("target") || row.contains("target_class");
      } else if (!(task == p.task)) {
        throw FormatError("mixed tasks in one prediction file");
      }
      p.utterance_ids.push_back(row.at("utterance_id").get<std::string>());
      const auto split = parse_split(row.at("split").get<std::string>());
      if (!split) throw FormatError("unknown split");
      p.splits.push_back(*split);
      if (task.is_classification()) {
        p.probabilities.push_back(row.at("probabilities").get<std::vector<double>>());
        if (p.has_targets) {
          const auto c = parse_cefr(row.at("target_class").get<std::string>());
          if (!c) throw FormatError("unknown target_class");
          p.target_classes.push_back(static_cast<int>(*c));
        }
      } else {
        const double s = row.at("score").get<double>();
        p.scores.push_back(s);
        p.clipped_scores.push_back(std::clamp(s, task.score_min(), task.score_max()));
        if (p.has_targets) p.target_scores.push_back(row.at("target").get<double>());
      }
      if (row.contains("hidden")) {
        p.hidden_reps.push_back(row["hidden"].get<std::vector<float>>());
      } else if (!p.hidden_reps.empty()) {
        throw FormatError("hidden representation missing on some rows");
      }
      first = false;
    } catch (const json::exception& e) {
      issues.push_back({where, e.what()});
    } catch (const Error& e) {
      issues.push_back({where, e.what()});
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  if (!p.hidden_reps.empty() && p.hidden_reps.size() != p.size()) {
    throw ValidationError({{path.string(), "hidden representation missing on some rows"}});
  }
  return p;
}

PredictionSet select_split(const PredictionSet& p, Split s) {
  PredictionSet out;
  out.task = p.task;
  out.has_targets = p.has_targets;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.splits[i] != s) continue;
    out.utterance_ids.push_back(p.utterance_ids[i]);
    out.splits.push_back(p.splits[i]);
    if (p.task.is_classification()) {
      out.probabilities.push_back(p.probabilities[i]);
      if (p.has_targets) out.target_classes.push_back(p.target_classes[i]);
    } else {
      out.scores.push_back(p.scores[i]);
      out.clipped_scores.push_back(p.clipped_scores[i]);
      if (p.has_targets) out.target_scores.push_back(p.target_scores[i]);
    }
    if (!p.hidden_reps.empty()) out.hidden_reps.push_back(p.hidden_reps[i]);
  }
  return out;
}

EvalReport evaluate_predictions(const PredictionSet& p, double sigma) {
  if (!p.has_targets) throw ConfigError("evaluation needs targets; the prediction set has none");
  if (p.size() == 0) throw ValidationError(std::vector<ValidationIssue>{{"predictions", "no rows to evaluate"}});
  EvalReport r;
  r.task = to_string(p.task);
  r.count = p.size();
  if (p.task.is_classification()) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < kCefrClassCount; ++c) names.emplace_back(to_string(static_cast<CefrClass>(c)));
    r.classification = classification_report(p.target_classes, p.predicted_classes(), kCefrClassCount, names);
  } else {
    r.regression = regression_report(p.scores, p.target_scores, sigma);
  }
  return r;
}

}  // namespace l2grade
