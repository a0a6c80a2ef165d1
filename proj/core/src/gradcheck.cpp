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

#include "l2grade/gradcheck.hpp"

#include <algorithm>
#include <cstddef>
#include <cmath>
#include <set>
#include <utility>

namespace l2grade {

GradCheckReport finite_difference_check(std::span<const GradCheckParam> params, const std::function<double()>& loss,
                                        const GradCheckOptions& options) {
  std::size_t total = 0;
  for (const auto& p : params) total += p.values.size();

  // (block, index) pairs: a few from every block, then uniform over the rest.
  std::set<std::pair<std::size_t, std::size_t>> picked;
  RngStream rng(options.seed);
  for (std::size_t b = 0; b < params.size(); ++b) {
    const std::size_t n = params[b].values.size();
    const std::size_t want = std::min<std::size_t>(n, 8);
    std::set<std::size_t> local;
    while (local.size() < want) local.insert(static_cast<std::size_t>(rng.below(n)));
    for (const std::size_t i : local) picked.emplace(b, i);
  }
  const std::size_t target = std::min(total, std::max(options.min_samples, picked.size()));
  while (picked.size() < target) {
    std::size_t flat = static_cast<std::size_t>(rng.below(total));
    std::size_t b = 0;
    while (flat >= params[b].values.size()) {
      flat -= params[b].values.size();
      ++b;
    }
    picked.emplace(b, flat);
  }

  GradCheckReport report;
  for (const auto& [b, i] : picked) {
    double& theta = params[b].values[i];
    const double saved = theta;
    const double h = 1e-5 * std::max(1.0, std::abs(saved));
    theta = saved + h;
    const double up = loss();
    theta = saved - h;
    const double down = loss();
    theta = saved;
    const double fd = (up - down) / (2.0 * h);
    const double analytic = params[b].analytic[i];
    const double rel = std::abs(analytic - fd) / std::max(1e-8, std::abs(analytic) + std::abs(fd));
    ++report.checked;
    if (report.worst.empty() || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst = params[b].name + "[" + std::to_string(i) + "]";
    }
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace l2grade
