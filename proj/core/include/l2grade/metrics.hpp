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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace l2grade {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> class_names;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const noexcept;
  std::size_t support(std::size_t true_class) const noexcept;
};

struct ClassificationReport {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::vector<double> per_class_f1;
  ConfusionMatrix confusion;
};

/// F1 is 0 for a class whose precision and recall are both 0; weighted F1
/// averages per-class F1 with true-class supports as weights.
ClassificationReport classification_report(std::span<const int> truth, std::span<const int> predicted,
                                           std::size_t num_classes, std::vector<std::string> class_names = {});

/// Sample Pearson correlation. Throws DomainError ("zero variance") when both
/// inputs are constant; returns 0 when exactly one of them is.
double pcc(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks (ties share the mean of their positions).
double src(std::span<const double> x, std::span<const double> y);

double mse(std::span<const double> preds, std::span<const double> targets);

/// 1-based average ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Sampled Gaussian at offsets -r..r, r = ceil(4 sigma), normalized to sum 1.
std::vector<double> gaussian_kernel(double sigma);

/// Convolution with gaussian_kernel(sigma); out-of-range taps reflect about
/// the boundary with the edge sample repeated (d c b a | a b c d | d c b a).
std::vector<double> gaussian_smooth(std::span<const double> series, double sigma);

struct CurvePoint {
  double score = 0.0;
  std::size_t count = 0;
  double mse = 0.0;           // raw per-score mean squared error
  double smoothed_mse = 0.0;
};

inline constexpr double kDefaultCurveSigma = 0.5;

/// Squared errors grouped by distinct target value (ascending), averaged per
/// group and smoothed along the score axis.
std::vector<CurvePoint> mse_by_score_curve(std::span<const double> preds, std::span<const double> targets,
                                           double sigma = kDefaultCurveSigma);

struct RegressionReport {
  double pcc = 0.0;
  double src = 0.0;
  double mse = 0.0;
  double sigma = kDefaultCurveSigma;
  std::vector<CurvePoint> curve;  // empty when targets have a single distinct value
};

RegressionReport regression_report(std::span<const double> preds, std::span<const double> targets,
                                   double sigma = kDefaultCurveSigma);

/// Either classification or regression metrics, never both.
struct EvalReport {
  std::string task;
  std::size_t count = 0;
  std::optional<ClassificationReport> classification;
  std::optional<RegressionReport> regression;
};

nlohmann::json to_json(const EvalReport& r);
std::string confusion_csv(const ConfusionMatrix& m);
std::string curve_csv(std::span<const CurvePoint> curve);

}  // namespace l2grade
