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

#include "l2grade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "l2grade/errors.hpp"

namespace l2grade {
namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what, std::size_t min_len) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
  if (a < min_len) {
    throw DomainError(std::string(what) + ": needs at least " + std::to_string(min_len) + " values, got " +
                      std::to_string(a));
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Index into a series of length n after reflecting about both edges with the
// edge sample repeated.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - 1 - m);
}

}  // namespace

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return t;
}

std::size_t ConfusionMatrix::support(std::size_t true_class) const noexcept {
  return std::accumulate(counts[true_class].begin(), counts[true_class].end(), std::size_t{0});
}

ClassificationReport classification_report(std::span<const int> truth, std::span<const int> predicted,
                                           std::size_t num_classes, std::vector<std::string> class_names) {
  check_lengths(truth.size(), predicted.size(), "classification_report", 1);
  if (num_classes == 0) throw DomainError("classification_report: no classes");
  if (class_names.empty()) {
    for (std::size_t c = 0; c < num_classes; ++c) class_names.push_back(std::to_string(c));
  }
  if (class_names.size() != num_classes) throw ShapeError("classification_report: class name count mismatch");

  ClassificationReport rep;
  rep.confusion.class_names = std::move(class_names);
  rep.confusion.counts.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  const auto k = static_cast<int>(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k) {
      throw DomainError("classification_report: label out of range at position " + std::to_string(i));
    }
    ++rep.confusion.counts[truth[i]][predicted[i]];
  }
  const auto& cm = rep.confusion.counts;
  const double n = static_cast<double>(truth.size());
  std::size_t correct = 0;
  double weighted = 0.0;
  rep.per_class_f1.assign(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    correct += cm[c][c];
    std::size_t support = 0;
    std::size_t predicted_c = 0;
    for (std::size_t o = 0; o < num_classes; ++o) {
      support += cm[c][o];
      predicted_c += cm[o][c];
    }
    const double tp = static_cast<double>(cm[c][c]);
    const double precision = predicted_c == 0 ? 0.0 : tp / static_cast<double>(predicted_c);
    const double recall = support == 0 ? 0.0 : tp / static_cast<double>(support);
    const double f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    rep.per_class_f1[c] = f1;
    weighted += f1 * static_cast<double>(support);
  }
  rep.accuracy = static_cast<double>(correct) / n;
  rep.weighted_f1 = weighted / n;
  return rep;
}

double pcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), "pcc", 2);
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 && syy == 0.0) throw DomainError("pcc: zero variance in both inputs");
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::ranges::stable_sort(idx, [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i + 1;
    while (j < idx.size() && values[idx[j]] == values[idx[i]]) ++j;
    // Positions i..j-1 (0-based) share rank mean(i+1..j).
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[idx[t]] = r;
    i = j;
  }
  return ranks;
}

double src(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), "src", 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  try {
    return pcc(rx, ry);
  } catch (const DomainError&) {
    throw DomainError("src: zero rank variance in both inputs");
  }
}

double mse(std::span<const double> preds, std::span<const double> targets) {
  check_lengths(preds.size(), targets.size(), "mse", 1);
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    s += d * d;
  }
  return s / static_cast<double>(preds.size());
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("gaussian_kernel: sigma must be positive");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t o = -radius; o <= radius; ++o) {
    const double v = std::exp(-0.5 * static_cast<double>(o * o) / (sigma * sigma));
    k[static_cast<std::size_t>(o + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

std::vector<double> gaussian_smooth(std::span<const double> series, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  std::vector<double> out(series.size(), 0.0);
  for (std::size_t i = 0; i < series.size(); ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t o = -radius; o <= radius; ++o) {
      const std::size_t src_idx = reflect_index(static_cast<std::ptrdiff_t>(i) + o, series.size());
      acc += kernel[static_cast<std::size_t>(o + radius)] * series[src_idx];
    }
    out[i] = acc;
  }
  return out;
}

std::vector<CurvePoint> mse_by_score_curve(std::span<const double> preds, std::span<const double> targets,
                                           double sigma) {
  check_lengths(preds.size(), targets.size(), "mse_by_score_curve", 1);
  std::map<double, std::pair<double, std::size_t>> groups;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    auto& g = groups[targets[i]];
    g.first += d * d;
    ++g.second;
  }
  if (groups.size() < 2) throw DomainError("mse_by_score_curve: targets need at least 2 distinct values");
  std::vector<CurvePoint> curve;
  std::vector<double> raw;
  for (const auto& [score, g] : groups) {
    const double m = g.first / static_cast<double>(g.second);
    curve.push_back({score, g.second, m, 0.0});
    raw.push_back(m);
  }
  const auto smooth = gaussian_smooth(raw, sigma);
  for (std::size_t i = 0; i < curve.size(); ++i) curve[i].smoothed_mse = smooth[i];
  return curve;
}

RegressionReport regression_report(std::span<const double> preds, std::span<const double> targets, double sigma) {
  RegressionReport r;
  r.pcc = pcc(preds, targets);
  r.src = src(preds, targets);
  r.mse = mse(preds, targets);
  r.sigma = sigma;
  const bool varied = std::ranges::any_of(targets, [&](double t) { return t != targets[0]; });
  if (varied) r.curve = mse_by_score_curve(preds, targets, sigma);
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["task"] = r.task;
  j["count"] = r.count;
  if (r.classification) {
    const auto& c = *r.classification;
    j["accuracy"] = c.accuracy;
    j["weighted_f1"] = c.weighted_f1;
    j["per_class_f1"] = c.per_class_f1;
    j["confusion"] = {{"class_names", c.confusion.class_names}, {"counts", c.confusion.counts}};
  }
  if (r.regression) {
    const auto& g = *r.regression;
    j["pcc"] = g.pcc;
    j["src"] = g.src;
    j["mse"] = g.mse;
    j["curve_sigma"] = g.sigma;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : g.curve) {
      curve.push_back({{"score", p.score}, {"count", p.count}, {"mse", p.mse}, {"smoothed_mse", p.smoothed_mse}});
    }
    j["mse_by_score"] = curve;
  }
  return j;
}

std::string confusion_csv(const ConfusionMatrix& m) {
  std::string out = "true\\predicted";
  for (const auto& n : m.class_names) out += "," + n;
  out += "\n";
  for (std::size_t r = 0; r < m.counts.size(); ++r) {
    out += m.class_names[r];
    for (const auto v : m.counts[r]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

std::string curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "score,count,mse,smoothed_mse\n";
  for (const auto& p : curve) {
    out += fmt(p.score) + "," + std::to_string(p.count) + "," + fmt(p.mse) + "," + fmt(p.smoothed_mse) + "\n";
  }
  return out;
}

}  // namespace l2grade
