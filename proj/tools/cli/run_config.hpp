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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "l2grade/fusion.hpp"
#include "l2grade/grader.hpp"
#include "l2grade/manifest.hpp"
#include "l2grade/metrics.hpp"

namespace l2grade::cli {

/// One JSON document per run. Run keys below; every other top-level key is a
/// GraderConfig field layered over `preset`. Fusion settings nest under
/// "fusion".
struct RunConfig {
  std::optional<std::string> preset;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> predictions;
  std::optional<std::filesystem::path> predictions_b;
  std::optional<std::filesystem::path> table;
  std::optional<std::filesystem::path> out;
  std::optional<Split> split;
  std::optional<std::uint64_t> seed;
  double sigma = kDefaultCurveSigma;
  double alpha = 0.05;
  nlohmann::json grader_overrides = nlohmann::json::object();
  std::optional<GraderConfig> grader;  // set by resolve()
  FusionConfig fusion;
};

RunConfig parse_run_config(const nlohmann::json& j, const std::string& path = "$");
RunConfig load_config(const std::filesystem::path& path);

/// Fills `grader` from preset + overrides and propagates the seed.
void resolve(RunConfig& rc);

nlohmann::json resolved_to_json(const RunConfig& rc, const std::string& command);

}  // namespace l2grade::cli
