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


#include <cmath>
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "l2grade/embedding_file.hpp"
#include "l2grade/errors.hpp"
#include "l2grade/grader.hpp"
#include "l2grade/metrics.hpp"
#include "l2grade/prediction.hpp"
#include "l2grade/synthetic.hpp"
#include "test_util.hpp"

namespace l2grade {
namespace {

using nlohmann::json;
using testing::TempDir;

std::string config_error_path(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

TEST(Presets, IcnaleSpeech) {
  const auto c = builtin_config("icnale-speech");
  EXPECT_EQ(c.head_kind, HeadKind::speech_head);
  EXPECT_TRUE(c.task.is_classification());
  EXPECT_EQ(c.epochs, 8u);
  EXPECT_EQ(c.optimizer.learning_rate, 1e-5);
  EXPECT_EQ(c.batch_size, 4u);
  EXPECT_EQ(c.grad_accum, 2u);
  EXPECT_EQ(c.dropout_rate, 0.2);
  EXPECT_EQ(c.optimizer.kind, OptimizerKind::adamw);
  EXPECT_EQ(c.hidden_units, (std::vector<std::size_t>{768}));
}

TEST(Presets, SpeechSubscoreTable) {
  struct Row {
    const char* name;
    std::size_t epochs;
    double lr;
    double dropout;
  };
  for (const Row& r : {Row{"tlt-speech-relevance", 13, 5e-6, 0.1}, Row{"tlt-speech-correctness", 19, 2e-6, 0.1},
                       Row{"tlt-speech-lexical", 12, 4e-6, 0.1}, Row{"tlt-speech-pronunciation", 8, 1e-5, 0.0},
                       Row{"tlt-speech-fluency", 6, 8e-6, 0.1}, Row{"tlt-speech-communicative", 10, 1e-5, 0.1},
                       Row{"tlt-speech-holistic", 12, 5e-5, 0.2}}) {
    const auto c = builtin_config(r.name);
    EXPECT_EQ(c.epochs, r.epochs) << r.name;
    EXPECT_EQ(c.optimizer.learning_rate, r.lr) << r.name;
    EXPECT_EQ(c.dropout_rate, r.dropout) << r.name;
    EXPECT_FALSE(c.task.is_classification()) << r.name;
  }
  EXPECT_EQ(builtin_config("tlt-speech-correctness").task.indicator, Subscore::correctness);
}

TEST(Presets, TextConfigs) {
  const auto icnale = builtin_config("icnale-text");
  EXPECT_EQ(icnale.epochs, 600u);
  EXPECT_EQ(icnale.batch_size, 256u);
  EXPECT_EQ(icnale.optimizer.kind, OptimizerKind::adam);
  EXPECT_EQ(icnale.max_rows, 256u);

  const auto manual = builtin_config("tlt-text-holistic-manual");
  EXPECT_EQ(manual.epochs, 800u);
  EXPECT_EQ(manual.batch_size, 256u);
  EXPECT_EQ(manual.optimizer.kind, OptimizerKind::adam);
  EXPECT_EQ(manual.optimizer.learning_rate, 2e-5);
  EXPECT_EQ(manual.optimizer.weight_decay, 0.0);
  EXPECT_EQ(manual.dropout_rate, 0.2);
  EXPECT_EQ(manual.max_rows, 64u);
  EXPECT_EQ(manual.hidden_units, (std::vector<std::size_t>{768, 768, 768, 128, 128, 128}));

  EXPECT_EQ(builtin_config("tlt-text-holistic-asr").epochs, 150u);

  auto fluency = builtin_config("tlt-text-fluency");
  EXPECT_EQ(fluency.dropout_rate, 0.4);
  fluency.dropout_rate = manual.dropout_rate;
  fluency.task = manual.task;
  fluency.name = manual.name;
  EXPECT_EQ(config_to_json(fluency), config_to_json(manual));
}

TEST(Presets, UnknownName) { EXPECT_THROW(builtin_config("icnale-bert"), ConfigError); }

TEST(Presets, AllNamesResolveAndValidate) {
  const auto names = builtin_config_names();
  EXPECT_EQ(names.size(), 17u);
  for (const auto& n : names) EXPECT_NO_THROW(builtin_config(n).validate()) << n;
}

TEST(GraderConfig, SpeechParameterCount) {
  auto c = builtin_config("icnale-speech");
  EXPECT_EQ(c.parameter_count(), 768u * 768 + 768 + 768 * 5 + 5);
  c = builtin_config("tlt-speech-holistic");
  EXPECT_EQ(c.parameter_count(), 768u * 768 + 768 + 768 + 1);
  RngStream rng(1);
  EXPECT_EQ(build_head(c, rng).parameter_count(), c.parameter_count());
}

TEST(GraderConfig, DropoutOnlyBeforeOutput) {
  RngStream rng(1);
  const auto net = build_head(builtin_config("tlt-text-fluency"), rng);
  ASSERT_EQ(net.layers.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(net.dropout_after[i], i == 5 ? 0.4 : 0.0);
  EXPECT_EQ(net.layers.back().activation, Activation::identity);
  EXPECT_EQ(net.layers.front().activation, Activation::rectifier);
}

TEST(GraderConfig, JsonRoundTrip) {
  for (const auto& n : builtin_config_names()) {
    const auto c = builtin_config(n);
    EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c)) << n;
  }
}

TEST(GraderConfig, StrictParsing) {
  json j = config_to_json(builtin_config("icnale-speech"));
  j["epochs"] = "eight";
  EXPECT_EQ(config_error_path(j), "$.epochs");
  j = config_to_json(builtin_config("icnale-speech"));
  j["warmup"] = 3;
  EXPECT_EQ(config_error_path(j), "$.warmup");
  j = config_to_json(builtin_config("icnale-speech"));
  j.erase("task");
  EXPECT_EQ(config_error_path(j), "$.task");
  j = config_to_json(builtin_config("icnale-speech"));
  j["head_kind"] = "conformer_head";
  EXPECT_EQ(config_error_path(j), "$.head_kind");
  j = config_to_json(builtin_config("icnale-speech"));
  j["dropout_rate"] = 1.0;
  EXPECT_EQ(config_error_path(j), "$.dropout_rate");
  j = config_to_json(builtin_config("icnale-speech"));
  j["hidden_units"] = json::array({512});
  EXPECT_EQ(config_error_path(j), "$.hidden_units");
  j = config_to_json(builtin_config("tlt-text-holistic-manual"));
  j["weight_decay"] = 0.01;
  EXPECT_FALSE(config_error_path(j).empty());
}

TEST(GraderConfig, OverridesLayerOnPreset) {
  auto c = builtin_config("icnale-speech");
  apply_config_overrides(c, {{"epochs", 200}, {"seed", 9}});
  EXPECT_EQ(c.epochs, 200u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.optimizer.learning_rate, 1e-5);
}

TrainingData random_regression(std::size_t n, std::size_t dim, std::uint64_t seed) {
  RngStream rng(seed);
  TrainingData d;
  d.has_targets = true;
  d.inputs = Matrix(n, dim);
  for (float& v : d.inputs.values()) v = static_cast<float>(rng.normal());
  for (std::size_t i = 0; i < n; ++i) {
    d.ids.push_back("r" + std::to_string(i));
    d.splits.push_back(Split::train);
    d.scores.push_back(rng.uniform(0, 12));
  }
  return d;
}

GraderConfig small_regression_config() {
  GraderConfig c = builtin_config("tlt-speech-holistic");
  c.head_kind = HeadKind::fusion_head;
  c.input_dim = 12;
  c.hidden_units = {10};
  c.epochs = 4;
  c.optimizer.learning_rate = 1e-3;
  return c;
}

TEST(TrainHead, SameSeedBitIdentical) {
  const auto d = random_regression(30, 12, 1);
  const auto c = small_regression_config();
  const auto a = train_head(c, d);
  const auto b = train_head(c, d);
  for (std::size_t i = 0; i < a.network.layers.size(); ++i) {
    EXPECT_EQ(a.network.layers[i].weights, b.network.layers[i].weights);
    EXPECT_EQ(a.network.layers[i].bias, b.network.layers[i].bias);
  }
  ASSERT_EQ(a.history.size(), 4u);
  for (std::size_t e = 0; e < 4; ++e) EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
}

TEST(TrainHead, DifferentSeedDiffers) {
  const auto d = random_regression(30, 12, 1);
  auto c = small_regression_config();
  const auto a = train_head(c, d);
  c.seed = 1;
  const auto b = train_head(c, d);
  EXPECT_NE(a.network.layers[0].weights, b.network.layers[0].weights);
}

TEST(TrainHead, NonFiniteLossReportsEpochAndBatch) {
  auto d = random_regression(8, 12, 2);
  d.scores[5] = std::numeric_limits<double>::infinity();
  try {
    train_head(small_regression_config(), d);
    FAIL();
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
  }
}

TEST(TrainHead, EmptyAndMismatchedInputs) {
  TrainingData empty;
  empty.has_targets = true;
  empty.inputs = Matrix(0, 12);
  EXPECT_THROW(train_head(small_regression_config(), empty), TrainingError);
  EXPECT_THROW(train_head(small_regression_config(), random_regression(5, 7, 1)), ShapeError);
}

TEST(TrainHead, DevMetricRecorded) {
  const auto d = random_regression(30, 12, 1);
  const auto dev = random_regression(10, 12, 2);
  const auto m = train_head(small_regression_config(), d, &dev);
  for (const auto& e : m.history) {
    ASSERT_TRUE(e.dev_metric.has_value());
    EXPECT_GE(*e.dev_metric, 0.0);
  }
}

TEST(TrainGrader, SeparableLossWindowsNonIncreasing) {
  TempDir dir;
  synthetic::write_separable_speech(dir.path(), {});
  const Manifest m = load_manifest(dir / "manifest.jsonl");
  auto c = builtin_config("icnale-speech");
  c.epochs = 60;
  const auto model = train_grader(m, c);
  ASSERT_EQ(model.history.size(), 60u);
  for (std::size_t e = 20; e + 10 <= 60; ++e) {
    EXPECT_LE(model.history[e + 9].train_loss, model.history[e - 1].train_loss) << "epoch " << e;
  }
}

TEST(TrainGrader, PlantedLinearTargetFitsTrainSplit) {
  TempDir dir;
  synthetic::LinearOptions o;
  o.dev = 10;
  o.test = 10;
  synthetic::write_linear_speech(dir.path(), o);
  const Manifest m = load_manifest(dir / "manifest.jsonl");
  const auto model = train_grader(m, builtin_config("tlt-speech-holistic"));
  const auto p = predict(model, m, Split::train);
  EXPECT_GE(pcc(p.scores, p.target_scores), 0.99);
}

TEST(TrainGrader, ModalityMismatch) {
  TempDir dir;
  synthetic::SeparableOptions o;
  o.utterances = 5;
  o.dim = 8;
  synthetic::write_separable_speech(dir.path(), o);
  const Manifest m = load_manifest(dir / "manifest.jsonl");
  auto c = builtin_config("icnale-text");
  c.input_dim = 8;
  EXPECT_THROW(train_grader(m, c), ConfigError);
}

TEST(TrainGrader, EmptyTrainSplit) {
  TempDir dir;
  synthetic::LinearOptions o;
  o.train = 0;
  o.dev = 3;
  o.test = 3;
  o.dim = 16;
  synthetic::write_linear_speech(dir.path(), o);
  const Manifest m = load_manifest(dir / "manifest.jsonl");
  auto c = builtin_config("tlt-speech-holistic");
  c.input_dim = 16;
  EXPECT_THROW(train_grader(m, c), TrainingError);
}

TEST(UtteranceInput, TextReadsAtMostMaxRows) {
  TempDir dir;
  Matrix m(5, 3);
  for (std::size_t r = 0; r < 5; ++r) m(r, 0) = static_cast<float>(r + 1);
  write_embedding_file(m, dir / "t.emb1");
  UtteranceRecord rec;
  rec.utterance_id = "t";
  rec.modality = Modality::text;
  rec.resolved_path = dir / "t.emb1";
  auto c = builtin_config("tlt-text-holistic-manual");
  c.max_rows = 2;
  const Matrix x = utterance_input(rec, c);
  ASSERT_EQ(x.rows(), 1u);
  EXPECT_EQ(x(0, 0), 1.0f);
}

TEST(UtteranceInput, FrameOrderDoesNotChangePrediction) {
  TempDir dir;
  RngStream rng(3);
  Matrix frames(9, 768);
  for (float& v : frames.values()) v = static_cast<float>(rng.normal());
  Matrix reversed(9, 768);
  for (std::size_t r = 0; r < 9; ++r) std::ranges::copy(frames.row(8 - r), reversed.row(r).begin());
  write_embedding_file(frames, dir / "a.emb1");
  write_embedding_file(reversed, dir / "b.emb1");
  const auto c = builtin_config("icnale-speech");
  GraderModel model{c, {}, {}, {}};
  RngStream init(1);
  model.network = build_head(c, init);
  UtteranceRecord a, b;
  a.resolved_path = dir / "a.emb1";
  b.resolved_path = dir / "b.emb1";
  EXPECT_EQ(infer(model, utterance_input(a, c)), infer(model, utterance_input(b, c)));
}

class Checkpoint : public ::testing::Test {
 protected:
  void SetUp() override {
    synthetic::SeparableOptions o;
    o.utterances = 10;
    o.dim = 768;
    o.min_frames = 3;
    o.max_frames = 6;
    synthetic::write_separable_speech(data_.path(), o);
    manifest_ = load_manifest(data_ / "manifest.jsonl");
    auto c = builtin_config("icnale-speech");
    c.epochs = 2;
    model_ = train_grader(manifest_, c);
    persist_model(model_, ckpt_.path());
  }

  TempDir data_;
  TempDir ckpt_;
  Manifest manifest_;
  GraderModel model_;
};

TEST_F(Checkpoint, Layout) {
  EXPECT_TRUE(std::filesystem::exists(ckpt_ / "config.json"));
  EXPECT_TRUE(std::filesystem::exists(ckpt_ / "history.json"));
  EXPECT_TRUE(std::filesystem::exists(ckpt_ / "manifest.hash"));
  EXPECT_TRUE(std::filesystem::exists(ckpt_.path() / "weights" / "layer0_W.emb1"));
  EXPECT_TRUE(std::filesystem::exists(ckpt_.path() / "weights" / "layer1_b.emb1"));
}

TEST_F(Checkpoint, RoundTripPredictsBitIdentically) {
  const GraderModel back = load_model(ckpt_.path());
  EXPECT_EQ(config_to_json(back.config), config_to_json(model_.config));
  EXPECT_EQ(back.manifest_hash, manifest_.content_hash);
  ASSERT_EQ(back.history.size(), model_.history.size());
  for (std::size_t i = 0; i < back.history.size(); ++i) {
    EXPECT_EQ(back.history[i].train_loss, model_.history[i].train_loss);
  }
  const auto p1 = predict(model_, manifest_, std::nullopt);
  const auto p2 = predict(back, manifest_, std::nullopt);
  ASSERT_EQ(p1.probabilities.size(), p2.probabilities.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    EXPECT_EQ(std::memcmp(p1.probabilities[i].data(), p2.probabilities[i].data(), 5 * sizeof(double)), 0);
  }
}

TEST_F(Checkpoint, TruncatedWeightFile) {
  const auto w = ckpt_.path() / "weights" / "layer0_W.emb1";
  std::filesystem::resize_file(w, std::filesystem::file_size(w) - 4);
  EXPECT_THROW(load_model(ckpt_.path()), IntegrityError);
}

TEST_F(Checkpoint, WrongShapeWeightFile) {
  write_embedding_file(Matrix(768, 4), ckpt_.path() / "weights" / "layer1_W.emb1");
  EXPECT_THROW(load_model(ckpt_.path()), IntegrityError);
}

TEST_F(Checkpoint, UnknownHeadKind) {
  json j = json::parse(testing::slurp(ckpt_ / "config.json"));
  j["head_kind"] = "conformer_head";
  testing::spit(ckpt_ / "config.json", j.dump());
  try {
    load_model(ckpt_.path());
    FAIL();
  } catch (const IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find("incompatible checkpoint version"), std::string::npos);
  }
}

TEST_F(Checkpoint, FutureFormatVersion) {
  json j = json::parse(testing::slurp(ckpt_ / "config.json"));
  j["format_version"] = 2;
  testing::spit(ckpt_ / "config.json", j.dump());
  EXPECT_THROW(load_model(ckpt_.path()), IntegrityError);
}

TEST_F(Checkpoint, MissingWeights) {
  std::filesystem::remove(ckpt_.path() / "weights" / "layer1_b.emb1");
  EXPECT_THROW(load_model(ckpt_.path()), IntegrityError);
}

}  // namespace
}  // namespace l2grade
