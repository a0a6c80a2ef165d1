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


#include "run_config.hpp"

#include <fstream>

#include "l2grade/errors.hpp"

namespace l2grade::cli {
namespace {

using nlohmann::json;

std::filesystem::path get_path(const json& v, const std::string& at) {
  if (!v.is_string()) throw ConfigError(std::string("expected a path string, got ") + v.type_name(), at);
  const auto s = v.get<std::string>();
  if (s.empty()) throw ConfigError("empty path", at);
  return s;
}

double get_number(const json& v, const std::string& at) {
  if (!v.is_number()) throw ConfigError(std::string("expected a number, got ") + v.type_name(), at);
  return v.get<double>();
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected an object", path);
  RunConfig rc;
  for (const auto& [key, v] : j.items()) {
    const std::string at = path + "." + key;
    if (key == "preset") {
      if (!v.is_string()) throw ConfigError(std::string("expected a string, got ") + v.type_name(), at);
      rc.preset = v.get<std::string>();
    } else if (key == "manifest") {
      rc.manifest = get_path(v, at);
    } else if (key == "model") {
      rc.model = get_path(v, at);
    } else if (key == "predictions") {
      rc.predictions = get_path(v, at);
    } else if (key == "predictions_b") {
      rc.predictions_b = get_path(v, at);
    } else if (key == "table") {
      rc.table = get_path(v, at);
    } else if (key == "out") {
      rc.out = get_path(v, at);
    } else if (key == "split") {
      if (!v.is_string()) throw ConfigError(std::string("expected a string, got ") + v.type_name(), at);
      rc.split = parse_split(v.get<std::string>());
      if (!rc.split) throw ConfigError("unknown split '" + v.get<std::string>() + "'", at);
    } else if (key == "seed") {
      if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) throw ConfigError("expected an unsigned 64-bit integer, got " + v.dump(), at);
      rc.seed = v.get<std::uint64_t>();
    } else if (key == "sigma") {
      rc.sigma = get_number(v, at);
      if (!(rc.sigma > 0.0)) throw ConfigError("sigma must be positive", at);
    } else if (key == "alpha") {
      rc.alpha = get_number(v, at);
      if (!(rc.alpha > 0.0 && rc.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)", at);
    } else if (key == "fusion") {
      rc.fusion = fusion_config_from_json(v, at);
    } else {
      rc.grader_overrides[key] = v;
    }
  }
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("not valid JSON (") + e.what() + ")", "$");
  }
  RunConfig rc = parse_run_config(j);
  resolve(rc);
  return rc;
}

void resolve(RunConfig& rc) {
  if (rc.preset) {
    GraderConfig g = builtin_config(*rc.preset);
    apply_config_overrides(g, rc.grader_overrides);
    rc.grader = std::move(g);
  } else if (!rc.grader_overrides.empty()) {
    rc.grader = config_from_json(rc.grader_overrides);
  } else {
    rc.grader.reset();
  }
  if (rc.seed) {
    if (rc.grader) rc.grader->seed = *rc.seed;
    rc.fusion.seed = *rc.seed;
  }
}

json resolved_to_json(const RunConfig& rc, const std::string& command) {
  json j = json::object();
  j["command"] = command;
  auto put = [&](const char* key, const std::optional<std::filesystem::path>& p) {
    if (p) j[key] = p->generic_string();
  };
  if (rc.preset) j["preset"] = *rc.preset;
  put("manifest", rc.manifest);
  put("model", rc.model);
  put("predictions", rc.predictions);
  put("predictions_b", rc.predictions_b);
  put("table", rc.table);
  put("out", rc.out);
  if (rc.split) j["split"] = to_string(*rc.split);
  if (rc.seed) j["seed"] = *rc.seed;
  j["sigma"] = rc.sigma;
  j["alpha"] = rc.alpha;
  if (rc.grader) j["grader"] = config_to_json(*rc.grader);
  j["fusion"] = fusion_config_to_json(rc.fusion);
  return j;
}

}  // namespace l2grade::cli
