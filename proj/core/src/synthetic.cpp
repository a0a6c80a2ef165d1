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

#include "l2grade/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "l2grade/embedding_file.hpp"
#include "l2grade/errors.hpp"

namespace l2grade::synthetic {
namespace {

std::string make_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

UtteranceRecord emit(const std::filesystem::path& dir, const std::string& id, const Matrix& frames, Split split) {
  UtteranceRecord r;
  r.utterance_id = id;
  r.embedding_path = "emb/" + id + ".emb1";
  r.resolved_path = dir / r.embedding_path;
  r.modality = Modality::speech;
  r.split = split;
  write_embedding_file(frames, r.resolved_path);
  return r;
}

std::size_t frame_count(std::size_t lo, std::size_t hi, RngStream& rng) {
  if (lo == 0 || hi < lo) throw ConfigError("synthetic: need 0 < min_frames <= max_frames");
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

}  // namespace

Matrix gaussian_frames(std::size_t frames, std::span<const double> mean, double noise, RngStream& rng) {
  Matrix m(frames, mean.size());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t d = 0; d < mean.size(); ++d) m(t, d) = static_cast<float>(mean[d] + noise * rng.normal());
  }
  return m;
}

std::vector<UtteranceRecord> write_separable_speech(const std::filesystem::path& dir, const SeparableOptions& o) {
  if (o.dim == 0 || o.utterances == 0) throw ConfigError("synthetic: dim and utterances must be positive");
  std::filesystem::create_directories(dir / "emb");
  RngStream rng(o.seed);
  RngStream means_rng = rng.fork(1);
  RngStream frames_rng = rng.fork(2);

  std::vector<std::vector<double>> means(kCefrClassCount, std::vector<double>(o.dim));
  for (auto& mu : means) {
    for (auto& v : mu) v = o.class_separation * means_rng.normal();
  }
  std::vector<UtteranceRecord> records;
  for (std::size_t i = 0; i < o.utterances; ++i) {
    const std::size_t c = i % kCefrClassCount;
    const Matrix frames =
        gaussian_frames(frame_count(o.min_frames, o.max_frames, frames_rng), means[c], o.frame_noise, frames_rng);
    auto r = emit(dir, make_id("sep", i), frames, Split::train);
    r.labels.cefr_class = static_cast<CefrClass>(c);
    records.push_back(std::move(r));
  }
  write_manifest(dir / "manifest.jsonl", records);
  return records;
}

std::vector<UtteranceRecord> write_linear_speech(const std::filesystem::path& dir, const LinearOptions& o) {
  if (o.dim == 0 || o.latent_dim == 0 || o.latent_dim > o.dim) throw ConfigError("synthetic: need 0 < latent_dim <= dim");
  std::filesystem::create_directories(dir / "emb");
  RngStream rng(o.seed);
  RngStream basis_rng = rng.fork(1);
  RngStream draw_rng = rng.fork(2);

  MatrixD basis(o.latent_dim, o.dim);
  for (std::size_t l = 0; l < o.latent_dim; ++l) {
    for (std::size_t d = 0; d < o.dim; ++d) basis(l, d) = basis_rng.normal();
  }
  std::vector<double> w(o.latent_dim);
  double wn = 0.0;
  for (auto& v : w) {
    v = basis_rng.normal();
    wn += v * v;
  }
  for (auto& v : w) v /= std::sqrt(wn);
  std::vector<double> shared(o.dim);
  for (auto& v : shared) v = o.shared_mean * basis_rng.normal();

  std::vector<UtteranceRecord> records;
  const std::size_t total = o.train + o.dev + o.test;
  std::vector<double> z(o.latent_dim), mean(o.dim);
  for (std::size_t i = 0; i < total; ++i) {
    double target = 0.0;
    do {
      double proj = 0.0;
      for (std::size_t l = 0; l < o.latent_dim; ++l) {
        z[l] = draw_rng.normal();
        proj += w[l] * z[l];
      }
      target = o.target_offset + o.target_scale * proj + o.target_noise * draw_rng.normal();
    } while (target < 0.0 || target > 12.0);

    for (std::size_t d = 0; d < o.dim; ++d) {
      double s = 0.0;
      for (std::size_t l = 0; l < o.latent_dim; ++l) s += z[l] * basis(l, d);
      mean[d] = shared[d] + s / std::sqrt(static_cast<double>(o.latent_dim));
    }
    const Split split = i < o.train ? Split::train : (i < o.train + o.dev ? Split::dev : Split::test);
    const Matrix frames = gaussian_frames(frame_count(o.min_frames, o.max_frames, draw_rng), mean, o.frame_noise, draw_rng);
    auto r = emit(dir, make_id("lin", i), frames, split);
    r.labels.holistic_score = target;
    records.push_back(std::move(r));
  }
  write_manifest(dir / "manifest.jsonl", records);
  return records;
}

}  // namespace l2grade::synthetic
