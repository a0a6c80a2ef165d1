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
#include <cstdint>
#include <filesystem>
#include <vector>

#include "l2grade/manifest.hpp"
#include "l2grade/matrix.hpp"
#include "l2grade/rng.hpp"

// Synthetic corpora with planted structure. Used by the test suites, the
// benchmarks and the `synth` CLI command.

namespace l2grade::synthetic {

struct SeparableOptions {
  std::size_t utterances = 50;
  std::size_t dim = 768;
  std::size_t min_frames = 20;
  std::size_t max_frames = 60;
  double class_separation = 1.0;  // norm scale of the per-class mean offsets
  double frame_noise = 1.0;
  std::uint64_t seed = 1;
};

/// 5-class speech set: each utterance's frames scatter around its class mean.
/// All records are in the train split; labels cycle through the classes.
std::vector<UtteranceRecord> write_separable_speech(const std::filesystem::path& dir, const SeparableOptions& options);

struct LinearOptions {
  std::size_t train = 300;
  std::size_t dev = 50;
  std::size_t test = 100;
  std::size_t dim = 768;
  std::size_t latent_dim = 8;      // rank of the embedding signal
  std::size_t min_frames = 10;
  std::size_t max_frames = 30;
  double frame_noise = 0.5;        // isotropic per-frame noise
  double shared_mean = 1.0;        // sigma of the mean vector common to every utterance
  double target_noise = 0.1;       // sigma of the additive label noise
  double target_offset = 6.0;
  double target_scale = 2.0;
  std::uint64_t seed = 2;
};

/// Holistic-score speech set whose target is a fixed linear function of the
/// pooled embedding plus N(0, target_noise^2).
std::vector<UtteranceRecord> write_linear_speech(const std::filesystem::path& dir, const LinearOptions& options);

/// A frames x dim matrix of N(mean, noise^2) rows.
Matrix gaussian_frames(std::size_t frames, std::span<const double> mean, double noise, RngStream& rng);

}  // namespace l2grade::synthetic
