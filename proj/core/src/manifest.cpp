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

#include "l2grade/manifest.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "l2grade/embedding_file.hpp"
#include "l2grade/errors.hpp"

namespace l2grade {
namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [v, name] : table) {
    if (v == e) return name;
  }
  return "?";
}

constexpr std::array<std::pair<CefrClass, std::string_view>, 5> kCefrNames{{{CefrClass::A2, "A2"},
                                                                           {CefrClass::B1_1, "B1_1"},
                                                                           {CefrClass::B1_2, "B1_2"},
                                                                           {CefrClass::B2, "B2"},
                                                                           {CefrClass::native, "native"}}};
constexpr std::array<std::pair<Subscore, std::string_view>, 6> kSubscoreNames{
    {{Subscore::relevance, "relevance"},
     {Subscore::correctness, "correctness"},
     {Subscore::lexical, "lexical"},
     {Subscore::pronunciation, "pronunciation"},
     {Subscore::fluency, "fluency"},
     {Subscore::communicative, "communicative"}}};
constexpr std::array<std::pair<Modality, std::string_view>, 2> kModalityNames{
    {{Modality::speech, "speech"}, {Modality::text, "text"}}};
constexpr std::array<std::pair<TranscriptionSource, std::string_view>, 3> kSourceNames{
    {{TranscriptionSource::manual, "manual"}, {TranscriptionSource::asr, "asr"}, {TranscriptionSource::none, "none"}}};
constexpr std::array<std::pair<Split, std::string_view>, 3> kSplitNames{
    {{Split::train, "train"}, {Split::dev, "dev"}, {Split::test, "test"}}};

const std::set<std::string> kRecordKeys{"utterance_id", "embedding_path", "modality",
                                        "transcription_source", "split", "labels"};
const std::set<std::string> kLabelKeys{"cefr_class", "holistic_score", "subscores"};

// Collects problems for one record; parse_record never throws on bad data.
struct RecordIssues {
  std::vector<std::string> messages;
  void add(std::string m) { messages.push_back(std::move(m)); }
};

template <typename E, std::size_t N>
std::optional<E> parse_enum_field(const nlohmann::json& j, const char* key,
                                  const std::array<std::pair<E, std::string_view>, N>& table, RecordIssues& issues) {
  if (!j.contains(key)) {
    issues.add(std::string("missing field '") + key + "'");
    return std::nullopt;
  }
  if (!j[key].is_string()) {
    issues.add(std::string("field '") + key + "' must be a string");
    return std::nullopt;
  }
  const auto& s = j[key].get_ref<const std::string&>();
  auto v = lookup(s, table);
  if (!v) issues.add(std::string("field '") + key + "' has unknown value '" + s + "'");
  return v;
}

LabelSet parse_labels(const nlohmann::json& j, RecordIssues& issues) {
  LabelSet labels;
  if (!j.is_object()) {
    issues.add("'labels' must be an object");
    return labels;
  }
  for (const auto& [key, _] : j.items()) {
    if (!kLabelKeys.contains(key)) issues.add("unknown label key '" + key + "'");
  }
  if (j.contains("cefr_class") && !j["cefr_class"].is_null()) {
    const auto& v = j["cefr_class"];
    if (!v.is_string()) {
      issues.add("cefr_class must be a string");
    } else if (auto c = parse_cefr(v.get_ref<const std::string&>())) {
      labels.cefr_class = *c;
    } else {
      issues.add("cefr_class '" + v.get<std::string>() + "' is not one of A2, B1_1, B1_2, B2, native");
    }
  }
  if (j.contains("holistic_score") && !j["holistic_score"].is_null()) {
    const auto& v = j["holistic_score"];
    if (!v.is_number()) {
      issues.add("holistic_score must be a number");
    } else {
      const double s = v.get<double>();
      if (!std::isfinite(s) || s < 0.0 || s > kHolisticMax) {
        std::ostringstream os;
        os << "holistic_score " << s << " outside [0, 12]";
        issues.add(os.str());
      } else {
        labels.holistic_score = s;
      }
    }
  }
  if (j.contains("subscores") && !j["subscores"].is_null()) {
    const auto& subs = j["subscores"];
    if (!subs.is_object()) {
      issues.add("subscores must be an object");
    } else {
      for (const auto& [key, v] : subs.items()) {
        const auto which = parse_subscore(key);
        if (!which) {
          issues.add("unknown subscore '" + key + "'");
          continue;
        }
        if (!v.is_number()) {
          issues.add("subscore '" + key + "' must be a number");
          continue;
        }
        const double s = v.get<double>();
        if (s != 0.0 && s != 1.0 && s != 2.0) {
          std::ostringstream os;
          os << "subscore '" << key << "' = " << s << " not in {0, 1, 2}";
          issues.add(os.str());
          continue;
        }
        labels.subscores[*which] = static_cast<int>(s);
      }
    }
  }
  if (!labels.cefr_class && !labels.holistic_score && labels.subscores.empty() && issues.messages.empty()) {
    issues.add("no label present");
  }
  if (labels.holistic_score && labels.subscores.size() == kAllSubscores.size()) {
    int sum = 0;
    for (const auto& [_, v] : labels.subscores) sum += v;
    if (static_cast<double>(sum) != *labels.holistic_score) {
      std::ostringstream os;
      os << "subscores sum to " << sum << " but holistic_score is " << *labels.holistic_score;
      issues.add(os.str());
    }
  }
  return labels;
}

}  // namespace

std::string_view to_string(CefrClass c) noexcept { return name_of(c, kCefrNames); }
std::string_view to_string(Subscore s) noexcept { return name_of(s, kSubscoreNames); }
std::string_view to_string(Modality m) noexcept { return name_of(m, kModalityNames); }
std::string_view to_string(TranscriptionSource s) noexcept { return name_of(s, kSourceNames); }
std::string_view to_string(Split s) noexcept { return name_of(s, kSplitNames); }

std::optional<CefrClass> parse_cefr(std::string_view s) noexcept { return lookup(s, kCefrNames); }
std::optional<Subscore> parse_subscore(std::string_view s) noexcept { return lookup(s, kSubscoreNames); }
std::optional<Modality> parse_modality(std::string_view s) noexcept { return lookup(s, kModalityNames); }
std::optional<TranscriptionSource> parse_transcription_source(std::string_view s) noexcept {
  return lookup(s, kSourceNames);
}
std::optional<Split> parse_split(std::string_view s) noexcept { return lookup(s, kSplitNames); }

std::size_t SplitCounts::of(Split s) const noexcept {
  switch (s) {
    case Split::train:
      return train;
    case Split::dev:
      return dev;
    case Split::test:
      return test;
  }
  return 0;
}

SplitCounts Manifest::split_counts() const {
  SplitCounts c;
  for (const auto& r : records) {
    switch (r.split) {
      case Split::train:
        ++c.train;
        break;
      case Split::dev:
        ++c.dev;
        break;
      case Split::test:
        ++c.test;
        break;
    }
  }
  return c;
}

std::vector<const UtteranceRecord*> Manifest::in_split(Split s) const {
  std::vector<const UtteranceRecord*> out;
  for (const auto& r : records) {
    if (r.split == s) out.push_back(&r);
  }
  return out;
}

std::string fnv1a_hex(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Manifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open manifest");
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Manifest m;
  m.source = path;
  m.dataset_name = path.stem().string();
  m.content_hash = fnv1a_hex(content);
  const auto base = path.parent_path();

  std::vector<ValidationIssue> issues;
  std::set<std::string> seen;
  std::istringstream lines(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      issues.push_back({where, std::string("invalid JSON: ") + e.what()});
      continue;
    }
    if (!j.is_object()) {
      issues.push_back({where, "record must be a JSON object"});
      continue;
    }
    RecordIssues ri;
    UtteranceRecord r;
    std::string label = where;
    if (j.contains("utterance_id") && j["utterance_id"].is_string() && !j["utterance_id"].get<std::string>().empty()) {
      r.utterance_id = j["utterance_id"].get<std::string>();
      label = r.utterance_id + " (" + where + ")";
      if (!seen.insert(r.utterance_id).second) ri.add("duplicate utterance_id '" + r.utterance_id + "'");
    } else {
      ri.add("missing or empty string field 'utterance_id'");
    }
    for (const auto& [key, _] : j.items()) {
      if (!kRecordKeys.contains(key)) ri.add("unknown field '" + key + "'");
    }
    const auto modality = parse_enum_field(j, "modality", kModalityNames, ri);
    const auto source = parse_enum_field(j, "transcription_source", kSourceNames, ri);
    const auto split = parse_enum_field(j, "split", kSplitNames, ri);
    if (modality) r.modality = *modality;
    if (source) r.transcription_source = *source;
    if (split) r.split = *split;
    if (!j.contains("labels")) {
      ri.add("missing field 'labels'");
    } else {
      r.labels = parse_labels(j["labels"], ri);
    }
    if (!j.contains("embedding_path") || !j["embedding_path"].is_string() ||
        j["embedding_path"].get<std::string>().empty()) {
      ri.add("missing or empty string field 'embedding_path'");
    } else {
      r.embedding_path = j["embedding_path"].get<std::string>();
      r.resolved_path = base / r.embedding_path;
      std::error_code ec;
      if (!std::filesystem::is_regular_file(r.resolved_path, ec)) {
        ri.add("embedding file '" + r.embedding_path + "' not found");
      } else {
        try {
          const std::size_t rows = options.check_payloads ? read_embedding_file(r.resolved_path).rows()
                                                          : read_embedding_header(r.resolved_path).rows;
          if (modality == Modality::text && rows != 1) {
            ri.add("text embedding must have exactly 1 row, found " + std::to_string(rows));
          }
        } catch (const Error& e) {
          ri.add(e.what());
        }
      }
    }
    for (auto& msg : ri.messages) issues.push_back({label, std::move(msg)});
    if (ri.messages.empty()) m.records.push_back(std::move(r));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  if (m.records.empty()) throw ValidationError({{path.string(), "manifest contains no records"}});
  return m;
}

nlohmann::json record_to_json(const UtteranceRecord& r) {
  nlohmann::json labels = nlohmann::json::object();
  if (r.labels.cefr_class) labels["cefr_class"] = to_string(*r.labels.cefr_class);
  if (r.labels.holistic_score) labels["holistic_score"] = *r.labels.holistic_score;
  if (!r.labels.subscores.empty()) {
    nlohmann::json subs = nlohmann::json::object();
    for (const auto& [k, v] : r.labels.subscores) subs[std::string(to_string(k))] = v;
    labels["subscores"] = subs;
  }
  return {{"utterance_id", r.utterance_id},
          {"embedding_path", r.embedding_path},
          {"modality", to_string(r.modality)},
          {"transcription_source", to_string(r.transcription_source)},
          {"split", to_string(r.split)},
          {"labels", labels}};
}

void write_manifest(const std::filesystem::path& path, std::span<const UtteranceRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw Error(path.string() + ": write failed");
}

double Task::score_max() const noexcept {
  switch (kind) {
    case TaskKind::classify5:
      return static_cast<double>(kCefrClassCount - 1);
    case TaskKind::regress_holistic:
      return kHolisticMax;
    case TaskKind::regress_subscore:
      return kSubscoreMax;
  }
  return 0.0;
}

std::string to_string(const Task& t) {
  switch (t.kind) {
    case TaskKind::classify5:
      return "classify5";
    case TaskKind::regress_holistic:
      return "regress_holistic";
    case TaskKind::regress_subscore:
      return "regress_subscore:" + std::string(to_string(t.indicator));
  }
  return "?";
}

Task parse_task(std::string_view s) {
  if (s == "classify5") return {TaskKind::classify5};
  if (s == "regress_holistic") return {TaskKind::regress_holistic};
  constexpr std::string_view kPrefix = "regress_subscore:";
  if (s.starts_with(kPrefix)) {
    if (auto ind = parse_subscore(s.substr(kPrefix.size()))) return {TaskKind::regress_subscore, *ind};
  }
  throw ConfigError("unknown task '" + std::string(s) +
                    "' (expected classify5, regress_holistic or regress_subscore:<indicator>)");
}

Targets encode_labels(std::span<const UtteranceRecord* const> records, const Task& task) {
  Targets t;
  std::vector<ValidationIssue> missing;
  for (const UtteranceRecord* r : records) {
    const LabelSet& l = r->labels;
    switch (task.kind) {
      case TaskKind::classify5:
        if (l.cefr_class) {
          t.classes.push_back(static_cast<int>(*l.cefr_class));
          continue;
        }
        break;
      case TaskKind::regress_holistic:
        if (l.holistic_score) {
          t.scores.push_back(*l.holistic_score);
          continue;
        }
        break;
      case TaskKind::regress_subscore:
        if (auto it = l.subscores.find(task.indicator); it != l.subscores.end()) {
          t.scores.push_back(static_cast<double>(it->second));
          continue;
        }
        break;
    }
    missing.push_back({r->utterance_id, "missing label for task " + to_string(task)});
  }
  if (!missing.empty()) throw ValidationError(std::move(missing));
  return t;
}

}  // namespace l2grade
