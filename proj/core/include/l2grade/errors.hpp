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

#include <stdexcept>
#include <string>
#include <vector>

namespace l2grade {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary or text input (EMB1 header, CSV cell, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Bad hyperparameter or run configuration. `path` points into the
/// offending JSON document when there is one (e.g. "$.epochs").
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string path = {})
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A checkpoint on disk does not agree with itself.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Input domain violation for a numeric routine.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Training diverged or could not start.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// One offending record in a validated collection.
struct ValidationIssue {
  std::string record;  // utterance id or "line N"
  std::string message;
};

/// Aggregate validation failure: carries every issue found, never just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

}  // namespace l2grade
