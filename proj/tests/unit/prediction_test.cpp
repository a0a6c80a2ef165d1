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

#include <gtest/gtest.h>

#include "l2grade/errors.hpp"
#include "l2grade/grader.hpp"
#include "l2grade/prediction.hpp"
#include "l2grade/synthetic.hpp"
#include "test_util.hpp"

namespace l2grade {
namespace {

using testing::TempDir;

GraderModel untrained(const std::string& preset, std::uint64_t seed = 3) {
  GraderModel m;
  m.config = builtin_config(preset);
  RngStream rng(seed);
  m.network = build_head(m.config, rng);
  return m;
}

TrainingData random_inputs(std::size_t n, std::size_t dim, bool classify) {
  TrainingData d;
  RngStream rng(9);
  d.inputs = Matrix(n, dim);
  for (std::size_t r = 0; r < n; ++r) {
    d.ids.push_back("u" + std::to_string(r));
    d.splits.push_back(static_cast<Split>(r % 3));
    for (float& v : d.inputs.row(r)) v = static_cast<float>(rng.normal());
    if (classify) {
      d.classes.push_back(static_cast<int>(r % 5));
    } else {
      d.scores.push_back(static_cast<double>(r % 13));
    }
  }
  d.has_targets = true;
  return d;
}

TEST(Predict, ProbabilitiesAreDistributions) {
  const auto m = untrained("icnale-speech");
  const auto p = predict_inputs(m, random_inputs(17, 768, true));
  ASSERT_EQ(p.probabilities.size(), 17u);
  for (const auto& row : p.probabilities) {
    ASSERT_EQ(row.size(), 5u);
    double s = 0.0;
    for (const double v : row) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_EQ(p.predicted_classes().size(), 17u);
}

TEST(Predict, RegressionClipsToTaskRange) {
  auto m = untrained("tlt-speech-holistic");
  m.network.layers.back().bias[0] = 40.0f;
  const auto p = predict_inputs(m, random_inputs(4, 768, false));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GT(p.scores[i], 12.0);
    EXPECT_EQ(p.clipped_scores[i], 12.0);
  }
}

TEST(Predict, DimensionMismatchNamesBothWidths) {
  const auto m = untrained("icnale-speech");
  try {
    predict_inputs(m, random_inputs(2, 512, true));
    FAIL();
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("768"), std::string::npos);
    EXPECT_NE(msg.find("512"), std::string::npos);
  }
}

TEST(Predict, HiddenRepresentations) {
  auto m = untrained("tlt-speech-holistic");
  const auto data = random_inputs(3, 768, false);
  const auto enc = predict_inputs(m, data, {.include_hidden = true});
  ASSERT_EQ(enc.hidden_reps.size(), 3u);
  EXPECT_EQ(enc.hidden_reps[1], std::vector<float>(data.inputs.row(1).begin(), data.inputs.row(1).end()));
  m.config.hidden_rep = HiddenRep::penultimate;
  const auto pen = predict_inputs(m, data, {.include_hidden = true});
  EXPECT_EQ(pen.hidden_reps[0].size(), m.network.layers.back().in_dim());
  EXPECT_TRUE(predict_inputs(m, data).hidden_reps.empty());
}

TEST(PredictionFile, RoundTripRegression) {
  TempDir dir;
  const auto p = predict_inputs(untrained("tlt-speech-holistic"), random_inputs(6, 768, false), {.include_hidden = true});
  write_predictions(dir / "p.jsonl", p);
  const auto q = read_predictions(dir / "p.jsonl");
  EXPECT_EQ(q.task, p.task);
  EXPECT_EQ(q.utterance_ids, p.utterance_ids);
  EXPECT_EQ(q.splits, p.splits);
  EXPECT_EQ(q.scores, p.scores);
  EXPECT_EQ(q.clipped_scores, p.clipped_scores);
  EXPECT_EQ(q.target_scores, p.target_scores);
  EXPECT_EQ(q.hidden_reps, p.hidden_reps);
  write_predictions(dir / "again.jsonl", q);
  EXPECT_EQ(testing::slurp(dir / "p.jsonl"), testing::slurp(dir / "again.jsonl"));
}

TEST(PredictionFile, RoundTripClassification) {
  TempDir dir;
  const auto p = predict_inputs(untrained("icnale-speech"), random_inputs(5, 768, true));
  write_predictions(dir / "p.jsonl", p);
  const auto q = read_predictions(dir / "p.jsonl");
  EXPECT_EQ(q.probabilities, p.probabilities);
  EXPECT_EQ(q.target_classes, p.target_classes);
  EXPECT_TRUE(q.has_targets);
  EXPECT_NE(testing::slurp(dir / "p.jsonl").find("\"predicted_class\""), std::string::npos);
}

TEST(PredictionFile, StrictReading) {
  TempDir dir;
  testing::spit(dir / "bad.jsonl",
                "{\"utterance_id\":\"a\",\"split\":\"train\",\"task\":\"regress_holistic\",\"score\":1}\n"
                "{\"utterance_id\":\"b\",\"split\":\"holdout\",\"task\":\"regress_holistic\",\"score\":1}\n"
                "not json\n");
  try {
    read_predictions(dir / "bad.jsonl");
    FAIL();
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.issues().size(), 2u);
    EXPECT_EQ(e.issues()[0].record, "bad.jsonl:2");
    EXPECT_EQ(e.issues()[1].record, "bad.jsonl:3");
  }
  testing::spit(dir / "mixed.jsonl",
                "{\"utterance_id\":\"a\",\"split\":\"train\",\"task\":\"regress_holistic\",\"score\":1}\n"
                "{\"utterance_id\":\"b\",\"split\":\"train\",\"task\":\"classify5\",\"probabilities\":[1,0,0,0,0]}\n");
  EXPECT_THROW(read_predictions(dir / "mixed.jsonl"), ValidationError);
  EXPECT_THROW(read_predictions(dir / "absent.jsonl"), Error);
}

TEST(PredictionFile, SelectSplit) {
  const auto p = predict_inputs(untrained("tlt-speech-holistic"), random_inputs(9, 768, false));
  const auto dev = select_split(p, Split::dev);
  ASSERT_EQ(dev.size(), 3u);
  EXPECT_EQ(dev.utterance_ids, (std::vector<std::string>{"u1", "u4", "u7"}));
  EXPECT_EQ(dev.scores[2], p.scores[7]);
  EXPECT_EQ(dev.target_scores[2], 7.0);
}

TEST(Evaluate, RegressionUsesRawScores) {
  PredictionSet p;
  p.task = Task{TaskKind::regress_holistic};
  p.utterance_ids = {"a", "b", "c", "d"};
  p.splits.assign(4, Split::test);
  p.scores = {1, 2, 3, 20};
  p.clipped_scores = {1, 2, 3, 12};
  p.target_scores = {1, 2, 3, 12};
  p.has_targets = true;
  const auto r = evaluate_predictions(p);
  ASSERT_TRUE(r.regression);
  EXPECT_DOUBLE_EQ(r.regression->mse, 64.0 / 4.0);
  EXPECT_EQ(r.count, 4u);
}

TEST(Evaluate, ClassificationNamesClasses) {
  PredictionSet p;
  p.task = Task{TaskKind::classify5};
  p.utterance_ids = {"a", "b"};
  p.splits.assign(2, Split::test);
  p.probabilities = {{0.9, 0.1, 0, 0, 0}, {0, 0, 0, 0.2, 0.8}};
  p.target_classes = {0, 3};
  p.has_targets = true;
  const auto r = evaluate_predictions(p);
  ASSERT_TRUE(r.classification);
  EXPECT_DOUBLE_EQ(r.classification->accuracy, 0.5);
  EXPECT_EQ(r.classification->confusion.class_names.size(), 5u);
  EXPECT_EQ(r.classification->confusion.class_names[0], "A2");
}

TEST(Evaluate, RejectsMissingTargetsAndEmptySets) {
  PredictionSet p;
  p.task = Task{TaskKind::regress_holistic};
  EXPECT_THROW(evaluate_predictions(p), ConfigError);
  p.has_targets = true;
  EXPECT_THROW(evaluate_predictions(p), ValidationError);
}

TEST(Predict, FromManifest) {
  TempDir dir;
  synthetic::SeparableOptions o;
  o.utterances = 10;
  o.dim = 768;
  synthetic::write_separable_speech(dir.path(), o);
  const auto manifest = load_manifest(dir / "manifest.jsonl");
  const auto m = untrained("icnale-speech");
  EXPECT_EQ(predict(m, manifest, std::nullopt).size(), 10u);
  EXPECT_THROW(predict(m, manifest, Split::test), ValidationError);
}

}  // namespace
}  // namespace l2grade
