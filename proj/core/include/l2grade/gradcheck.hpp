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
#include <functional>
#include <span>
#include <string>

#include "l2grade/rng.hpp"

namespace l2grade {

struct GradCheckParam {
  std::string name;
  std::span<double> values;            // perturbed in place, restored afterwards
  std::span<const double> analytic;    // dL/dvalues computed at the unperturbed point
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  std::size_t min_samples = 200;  // parameters checked, across all blocks
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "block[index]" of the worst parameter
  bool passed = false;
};

/// Central-difference gradient check with step 1e-5 * max(1, |theta|).
///
/// Relative error per parameter is |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|).
/// Every block contributes up to 8 parameters, the rest of the sample is drawn
/// uniformly over the flattened parameter vector. `loss` must be deterministic
/// (dropout off) and read the current contents of `params`.
GradCheckReport finite_difference_check(std::span<const GradCheckParam> params, const std::function<double()>& loss,
                                        const GradCheckOptions& options = {});

}  // namespace l2grade
