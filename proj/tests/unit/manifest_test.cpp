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


#include <gtest/gtest.h>

#include "l2grade/embedding_file.hpp"
#include "l2grade/errors.hpp"
#include "l2grade/manifest.hpp"
#include "test_util.hpp"

namespace l2grade {
namespace {

using nlohmann::json;
using testing::TempDir;

// Writes `n` tiny speech embeddings and a manifest with the given split sizes.
std::filesystem::path shaped_manifest(const TempDir& dir, std::size_t train, std::size_t dev, std::size_t test,
                                      bool holistic) {
  std::filesystem::create_directories(dir / "emb");
  std::vector<UtteranceRecord> recs;
  const std::size_t total = train + dev + test;
  for (std::size_t i = 0; i < total; ++i) {
    UtteranceRecord r;
    r.utterance_id = "u" + std::to_string(i);
    r.embedding_path = "emb/" + r.utterance_id + ".emb1";
    r.split = i < train ? Split::train : (i < train + dev ? Split::dev : Split::test);
    if (holistic) {
      r.labels.holistic_score = static_cast<double>(i % 13);
    } else {
      r.labels.cefr_class = static_cast<CefrClass>(i % kCefrClassCount);
    }
    write_embedding_file(Matrix{{static_cast<float>(i), 1.0f, 2.0f, 3.0f}}, dir.path() / r.embedding_path);
    recs.push_back(std::move(r));
  }
  write_manifest(dir / "manifest.jsonl", recs);
  return dir / "manifest.jsonl";
}

json base_record(const std::string& id, const std::string& path) {
  return {{"utterance_id", id},
          {"embedding_path", path},
          {"modality", "speech"},
          {"transcription_source", "none"},
          {"split", "train"},
          {"labels", {{"holistic_score", 7.0}}}};
}

std::filesystem::path write_lines(const TempDir& dir, const std::vector<json>& rows) {
  std::string text;
  for (const auto& r : rows) text += r.dump() + "\n";
  testing::spit(dir / "m.jsonl", text);
  return dir / "m.jsonl";
}

std::vector<ValidationIssue> issues_of(const std::filesystem::path& p) {
  try {
    load_manifest(p);
  } catch (const ValidationError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<ValidationIssue>& issues, const std::string& record, const std::string& text) {
  for (const auto& i : issues) {
    if (i.record.find(record) != std::string::npos && i.message.find(text) != std::string::npos) return true;
  }
  return false;
}

TEST(Manifest, IcnaleShapedSplitCounts) {
  TempDir dir;
  const Manifest m = load_manifest(shaped_manifest(dir, 3898, 217, 217, false));
  const SplitCounts c = m.split_counts();
  EXPECT_EQ(c.train, 3898u);
  EXPECT_EQ(c.dev, 217u);
  EXPECT_EQ(c.test, 217u);
  EXPECT_EQ(m.records.size(), 4332u);
  EXPECT_EQ(m.dataset_name, "manifest");
  EXPECT_EQ(m.content_hash.size(), 16u);
}

TEST(Manifest, TltShapedSplitCounts) {
  TempDir dir;
  const Manifest m = load_manifest(shaped_manifest(dir, 322, 85, 87, true));
  EXPECT_EQ(m.split_counts().train, 322u);
  EXPECT_EQ(m.split_counts().dev, 85u);
  EXPECT_EQ(m.split_counts().test, 87u);
  EXPECT_EQ(m.in_split(Split::dev).size(), 85u);
}

TEST(Manifest, WriteLoadRoundTrip) {
  TempDir dir;
  std::filesystem::create_directories(dir / "e");
  write_embedding_file(Matrix{{1, 2}}, dir / "e/a.emb1");
  UtteranceRecord r;
  r.utterance_id = "a";
  r.embedding_path = "e/a.emb1";
  r.modality = Modality::text;
  r.transcription_source = TranscriptionSource::asr;
  r.split = Split::dev;
  r.labels.holistic_score = 6.0;
  for (const Subscore s : kAllSubscores) r.labels.subscores[s] = 1;
  write_manifest(dir / "m.jsonl", std::vector<UtteranceRecord>{r});
  const Manifest m = load_manifest(dir / "m.jsonl");
  ASSERT_EQ(m.records.size(), 1u);
  const auto& back = m.records[0];
  EXPECT_EQ(back.modality, Modality::text);
  EXPECT_EQ(back.transcription_source, TranscriptionSource::asr);
  EXPECT_EQ(back.split, Split::dev);
  EXPECT_EQ(*back.labels.holistic_score, 6.0);
  EXPECT_EQ(back.labels.subscores.size(), 6u);
  EXPECT_EQ(back.resolved_path, dir / "e/a.emb1");
}

TEST(Manifest, HolisticOutOfRange) {
  TempDir dir;
  write_embedding_file(Matrix{{1}}, dir / "a.emb1");
  auto r = base_record("a", "a.emb1");
  r["labels"]["holistic_score"] = 13;
  EXPECT_TRUE(mentions(issues_of(write_lines(dir, {r})), "a", "holistic_score"));
}

TEST(Manifest, EveryOffenderListed) {
  TempDir dir;
  write_embedding_file(Matrix{{1}}, dir / "a.emb1");
  auto bad_sub = base_record("s3", "a.emb1");
  bad_sub["labels"] = {{"subscores", {{"fluency", 3}}}};
  const auto dup1 = base_record("dup", "a.emb1");
  const auto dup2 = base_record("dup", "a.emb1");
  const auto missing = base_record("gone", "nope.emb1");
  auto unknown = base_record("extra", "a.emb1");
  unknown["speaker"] = "x";
  auto bad_split = base_record("sp", "a.emb1");
  bad_split["split"] = "validation";
  const auto ok = base_record("fine", "a.emb1");
  const auto issues = issues_of(write_lines(dir, {bad_sub, dup1, dup2, missing, unknown, bad_split, ok}));
  EXPECT_TRUE(mentions(issues, "s3", "not in {0, 1, 2}"));
  EXPECT_TRUE(mentions(issues, "dup", "duplicate"));
  EXPECT_TRUE(mentions(issues, "gone", "not found"));
  EXPECT_TRUE(mentions(issues, "extra", "speaker"));
  EXPECT_TRUE(mentions(issues, "sp", "validation"));
  EXPECT_FALSE(mentions(issues, "fine", ""));
}

TEST(Manifest, SubscoreSumMustMatchHolistic) {
  TempDir dir;
  write_embedding_file(Matrix{{1}}, dir / "a.emb1");
  auto r = base_record("a", "a.emb1");
  r["labels"] = {{"holistic_score", 5},
                 {"subscores",
                  {{"relevance", 1}, {"correctness", 1}, {"lexical", 1}, {"pronunciation", 1}, {"fluency", 1},
                   {"communicative", 1}}}};
  EXPECT_TRUE(mentions(issues_of(write_lines(dir, {r})), "a", "sum"));
  r["labels"]["holistic_score"] = 6;
  EXPECT_NO_THROW(load_manifest(write_lines(dir, {r})));
}

TEST(Manifest, TextMustHaveOneRow) {
  TempDir dir;
  write_embedding_file(Matrix{{1, 2}, {3, 4}}, dir / "two.emb1");
  auto r = base_record("t", "two.emb1");
  r["modality"] = "text";
  EXPECT_TRUE(mentions(issues_of(write_lines(dir, {r})), "t", "exactly 1 row"));
}

TEST(Manifest, CorruptEmbeddingReported) {
  TempDir dir;
  testing::spit(dir / "bad.emb1", "EMBXjunkjunkjunk");
  EXPECT_TRUE(mentions(issues_of(write_lines(dir, {base_record("b", "bad.emb1")})), "b", "not an EMB1 file"));
}

TEST(Manifest, InvalidJsonLine) {
  TempDir dir;
  testing::spit(dir / "m.jsonl", "{not json}\n");
  EXPECT_TRUE(mentions(issues_of(dir / "m.jsonl"), "line 1", "invalid JSON"));
}

TEST(Manifest, NoLabelAndEmptyManifest) {
  TempDir dir;
  write_embedding_file(Matrix{{1}}, dir / "a.emb1");
  auto r = base_record("a", "a.emb1");
  r["labels"] = json::object();
  EXPECT_TRUE(mentions(issues_of(write_lines(dir, {r})), "a", "no label"));
  testing::spit(dir / "empty.jsonl", "");
  EXPECT_THROW(load_manifest(dir / "empty.jsonl"), ValidationError);
}

TEST(EncodeLabels, FixedClassOrder) {
  std::vector<UtteranceRecord> recs(5);
  const char* names[] = {"A2", "B1_1", "B1_2", "B2", "native"};
  for (int i = 0; i < 5; ++i) {
    recs[i].utterance_id = names[i];
    recs[i].labels.cefr_class = parse_cefr(names[i]);
  }
  std::vector<const UtteranceRecord*> ptrs;
  for (const auto& r : recs) ptrs.push_back(&r);
  const Targets t = encode_labels(ptrs, Task{TaskKind::classify5});
  EXPECT_EQ(t.classes, (std::vector<int>{0, 1, 2, 3, 4}));
  for (int i = 0; i < 5; ++i) EXPECT_EQ(to_string(static_cast<CefrClass>(i)), names[i]);
}

TEST(EncodeLabels, HolisticRaw) {
  UtteranceRecord r;
  r.utterance_id = "h";
  r.labels.holistic_score = 7.0;
  const UtteranceRecord* p = &r;
  EXPECT_EQ(encode_labels(std::span(&p, 1), Task{TaskKind::regress_holistic}).scores,
            (std::vector<double>{7.0}));
}

TEST(EncodeLabels, MissingSubscoreNamesUtterance) {
  UtteranceRecord r;
  r.utterance_id = "utt-42";
  r.labels.holistic_score = 7.0;
  const UtteranceRecord* p = &r;
  try {
    encode_labels(std::span(&p, 1), Task{TaskKind::regress_subscore, Subscore::fluency});
    FAIL();
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.issues().size(), 1u);
    EXPECT_EQ(e.issues()[0].record, "utt-42");
  }
}

TEST(Task, StringRoundTrip) {
  for (const char* s : {"classify5", "regress_holistic", "regress_subscore:fluency", "regress_subscore:relevance"}) {
    EXPECT_EQ(to_string(parse_task(s)), s);
  }
  EXPECT_THROW(parse_task("regress_subscore:grammar"), ConfigError);
  EXPECT_EQ(parse_task("regress_holistic").score_max(), 12.0);
  EXPECT_EQ(parse_task("regress_subscore:lexical").score_max(), 2.0);
}

}  // namespace
}  // namespace l2grade
