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

#include "l2grade/errors.hpp"

namespace l2grade {
namespace {

std::string summarize(const std::vector<ValidationIssue>& issues) {
  std::string msg = std::to_string(issues.size()) + " validation error(s)";
  for (const auto& i : issues) msg += "\n  " + i.record + ": " + i.message;
  return msg;
}

}  // namespace

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : Error(summarize(issues)), issues_(std::move(issues)) {}

}  // namespace l2grade
