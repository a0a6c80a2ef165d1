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

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace l2grade {

/// Order fixes the class index: A2 = 0 ... native = 4.
enum class CefrClass { A2, B1_1, B1_2, B2, native };
inline constexpr std::size_t kCefrClassCount = 5;

enum class Subscore { relevance, correctness, lexical, pronunciation, fluency, communicative };
inline constexpr std::array<Subscore, 6> kAllSubscores = {Subscore::relevance,     Subscore::correctness,
                                                          Subscore::lexical,       Subscore::pronunciation,
                                                          Subscore::fluency,       Subscore::communicative};

enum class Modality { speech, text };
enum class TranscriptionSource { manual, asr, none };
enum class Split { train, dev, test };

std::string_view to_string(CefrClass c) noexcept;
std::string_view to_string(Subscore s) noexcept;
std::string_view to_string(Modality m) noexcept;
std::string_view to_string(TranscriptionSource s) noexcept;
std::string_view to_string(Split s) noexcept;

std::optional<CefrClass> parse_cefr(std::string_view s) noexcept;
std::optional<Subscore> parse_subscore(std::string_view s) noexcept;
std::optional<Modality> parse_modality(std::string_view s) noexcept;
std::optional<TranscriptionSource> parse_transcription_source(std::string_view s) noexcept;
std::optional<Split> parse_split(std::string_view s) noexcept;

inline constexpr double kHolisticMax = 12.0;
inline constexpr int kSubscoreMax = 2;

struct LabelSet {
  std::optional<CefrClass> cefr_class;
  std::optional<double> holistic_score;  // [0, 12]
  std::map<Subscore, int> subscores;     // each in {0, 1, 2}
};

struct UtteranceRecord {
  std::string utterance_id;
  std::string embedding_path;             // as written in the manifest
  std::filesystem::path resolved_path;    // relative to the manifest's directory
  Modality modality = Modality::speech;
  TranscriptionSource transcription_source = TranscriptionSource::none;
  Split split = Split::train;
  LabelSet labels;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
  std::size_t of(Split s) const noexcept;
};

struct Manifest {
  std::string dataset_name;
  std::filesystem::path source;
  std::string content_hash;  // FNV-1a 64 of the manifest bytes, hex
  std::vector<UtteranceRecord> records;

  SplitCounts split_counts() const;
  std::vector<const UtteranceRecord*> in_split(Split s) const;
};

struct ManifestOptions {
  /// Parse every referenced EMB1 payload (finiteness, length). When false only
  /// the header and file size are checked.
  bool check_payloads = true;
};

/// Loads a JSON Lines manifest. Either every record validates or a
/// ValidationError listing all offending records is thrown.
Manifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});

nlohmann::json record_to_json(const UtteranceRecord& r);
void write_manifest(const std::filesystem::path& path, std::span<const UtteranceRecord> records);

enum class TaskKind { classify5, regress_holistic, regress_subscore };

struct Task {
  TaskKind kind = TaskKind::classify5;
  Subscore indicator = Subscore::relevance;  // regress_subscore only

  bool is_classification() const noexcept { return kind == TaskKind::classify5; }
  /// Valid range of the target, used for clipping reports.
  double score_min() const noexcept { return 0.0; }
  double score_max() const noexcept;
  friend bool operator==(const Task&, const Task&) = default;
};

/// "classify5", "regress_holistic", "regress_subscore:<indicator>".
std::string to_string(const Task& t);
Task parse_task(std::string_view s);

struct Targets {
  std::vector<int> classes;    // classification
  std::vector<double> scores;  // regression, raw scale
};

/// Class index by fixed CEFR order, or the raw score. Throws naming the
/// utterance when the needed label is missing.
Targets encode_labels(std::span<const UtteranceRecord* const> records, const Task& task);

std::string fnv1a_hex(std::span<const char> bytes);

}  // namespace l2grade
