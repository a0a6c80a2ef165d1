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

#include "l2grade/grader.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "l2grade/embedding_file.hpp"
#include "l2grade/errors.hpp"
#include "l2grade/prediction.hpp"

namespace l2grade {
namespace {

using nlohmann::json;

const std::set<std::string> kConfigKeys{
    "format_version", "name",         "head_kind", "task",        "input_dim",    "hidden_units",
    "hidden_activation", "dropout_rate", "epochs",    "batch_size",  "grad_accum",   "optimizer",
    "learning_rate",  "beta1",        "beta2",     "epsilon",     "weight_decay", "max_rows",
    "hidden_rep",     "seed"};

bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::size_t get_count(const json& v, const std::string& path) {
  if (is_count(v)) return v.get<std::size_t>();
  if (v.is_number_integer()) {
    throw ConfigError("expected a non-negative integer, got " + v.dump(), path);
  }
  throw ConfigError(std::string("expected a non-negative integer, got ") + v.type_name(), path);
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(std::string("expected a number, got ") + v.type_name(), path);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError("expected a finite number", path);
  return d;
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(std::string("expected a string, got ") + v.type_name(), path);
  return v.get<std::string>();
}

GraderConfig speech_preset(std::string name, Task task, std::size_t epochs, double lr, double dropout) {
  GraderConfig c;
  c.name = std::move(name);
  c.head_kind = HeadKind::speech_head;
  c.task = task;
  c.epochs = epochs;
  c.batch_size = 4;
  c.grad_accum = 2;
  c.dropout_rate = dropout;
  c.optimizer.kind = OptimizerKind::adamw;
  c.optimizer.learning_rate = lr;
  c.optimizer.weight_decay = 0.01;
  c.normalize();
  return c;
}

GraderConfig text_preset(std::string name, Task task, std::size_t epochs, double lr, double dropout,
                         std::size_t max_rows) {
  GraderConfig c;
  c.name = std::move(name);
  c.head_kind = HeadKind::text_head;
  c.task = task;
  c.epochs = epochs;
  c.batch_size = 256;
  c.grad_accum = 1;
  c.dropout_rate = dropout;
  c.optimizer.kind = OptimizerKind::adam;
  c.optimizer.learning_rate = lr;
  c.optimizer.weight_decay = 0.0;
  c.max_rows = max_rows;
  c.normalize();
  return c;
}

struct SubscoreRecipe {
  Subscore indicator;
  std::size_t epochs;
  double learning_rate;
  double dropout;
};

// Per-indicator speech recipes; batch size and accumulation follow the holistic grader.
constexpr std::array<SubscoreRecipe, 6> kSpeechSubscoreRecipes{{
    {Subscore::relevance, 13, 5e-6, 0.1},
    {Subscore::correctness, 19, 2e-6, 0.1},
    {Subscore::lexical, 12, 4e-6, 0.1},
    {Subscore::pronunciation, 8, 1e-5, 0.0},
    {Subscore::fluency, 6, 8e-6, 0.1},
    {Subscore::communicative, 10, 1e-5, 0.1},
}};

std::vector<GraderConfig> all_presets() {
  std::vector<GraderConfig> out;
  out.push_back(speech_preset("icnale-speech", {TaskKind::classify5}, 8, 1e-5, 0.2));
  out.push_back(speech_preset("tlt-speech-holistic", {TaskKind::regress_holistic}, 12, 5e-5, 0.2));
  for (const auto& r : kSpeechSubscoreRecipes) {
    out.push_back(speech_preset("tlt-speech-" + std::string(to_string(r.indicator)),
                                {TaskKind::regress_subscore, r.indicator}, r.epochs, r.learning_rate, r.dropout));
  }
  out.push_back(text_preset("icnale-text", {TaskKind::classify5}, 600, 5e-5, 0.0, 256));
  out.push_back(text_preset("tlt-text-holistic-manual", {TaskKind::regress_holistic}, 800, 2e-5, 0.2, 64));
  out.push_back(text_preset("tlt-text-holistic-asr", {TaskKind::regress_holistic}, 150, 2e-5, 0.2, 64));
  for (const Subscore s : kAllSubscores) {
    out.push_back(text_preset("tlt-text-" + std::string(to_string(s)), {TaskKind::regress_subscore, s}, 800, 2e-5,
                              s == Subscore::fluency ? 0.4 : 0.2, 64));
  }
  return out;
}

std::vector<double> dropout_schedule(const GraderConfig& c) {
  // One dropout between the last hidden layer and the output layer.
  std::vector<double> d(c.hidden_units.size() + 1, 0.0);
  d[c.hidden_units.size() - 1] = c.dropout_rate;
  return d;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(path.string() + ": write failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError(path.string() + ": missing checkpoint file");
  return {(std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()};
}

MatrixD outputs_to_double(const Matrix& m) { return m.cast<double>(); }

}  // namespace

std::string_view to_string(HeadKind k) noexcept {
  switch (k) {
    case HeadKind::speech_head:
      return "speech_head";
    case HeadKind::text_head:
      return "text_head";
    case HeadKind::fusion_head:
      return "fusion_head";
  }
  return "?";
}

std::string_view to_string(HiddenRep r) noexcept { return r == HiddenRep::encoder ? "encoder" : "penultimate"; }

std::optional<HeadKind> parse_head_kind(std::string_view s) noexcept {
  if (s == "speech_head") return HeadKind::speech_head;
  if (s == "text_head") return HeadKind::text_head;
  if (s == "fusion_head") return HeadKind::fusion_head;
  return std::nullopt;
}

std::optional<HiddenRep> parse_hidden_rep(std::string_view s) noexcept {
  if (s == "encoder") return HiddenRep::encoder;
  if (s == "penultimate") return HiddenRep::penultimate;
  return std::nullopt;
}

std::vector<std::size_t> default_hidden_units(HeadKind kind) {
  switch (kind) {
    case HeadKind::speech_head:
      return {kEncoderWidth};
    case HeadKind::text_head:
      return {kEncoderWidth, kEncoderWidth, kEncoderWidth, 128, 128, 128};
    case HeadKind::fusion_head:
      return {16};
  }
  return {};
}

void GraderConfig::normalize() {
  if (hidden_units.empty()) hidden_units = default_hidden_units(head_kind);
  validate();
}

void GraderConfig::validate() const {
  if (input_dim == 0) throw ConfigError("must be positive", "$.input_dim");
  if (head_kind == HeadKind::fusion_head) {
    if (hidden_units.size() != 1 || hidden_units[0] == 0) {
      throw ConfigError("fusion_head takes exactly one positive hidden width", "$.hidden_units");
    }
  } else if (hidden_units != default_hidden_units(head_kind)) {
    throw ConfigError(std::string(to_string(head_kind)) + " has a fixed hidden layer stack", "$.hidden_units");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("must be in [0, 1)", "$.dropout_rate");
  if (epochs == 0) throw ConfigError("must be positive", "$.epochs");
  if (batch_size == 0) throw ConfigError("must be positive", "$.batch_size");
  if (grad_accum == 0) throw ConfigError("must be positive", "$.grad_accum");
  if (max_rows && *max_rows == 0) throw ConfigError("must be positive", "$.max_rows");
  try {
    optimizer.validate();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    std::string key = "$.optimizer";
    for (const auto& [needle, field] : {std::pair{"learning rate", "$.learning_rate"}, std::pair{"beta1", "$.beta1"},
                                        std::pair{"beta2", "$.beta2"}, std::pair{"epsilon", "$.epsilon"},
                                        std::pair{"weight decay", "$.weight_decay"}}) {
      if (msg.find(needle) != std::string::npos) {
        key = field;
        break;
      }
    }
    throw ConfigError(msg, key);
  }
}

std::size_t GraderConfig::parameter_count() const {
  std::size_t n = 0;
  std::size_t prev = input_dim;
  for (const std::size_t w : hidden_units) {
    n += prev * w + w;
    prev = w;
  }
  return n + prev * output_units() + output_units();
}

GraderConfig builtin_config(std::string_view name) {
  for (auto& c : all_presets()) {
    if (c.name == name) return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> builtin_config_names() {
  std::vector<std::string> names;
  for (const auto& c : all_presets()) names.push_back(c.name);
  return names;
}

json config_to_json(const GraderConfig& c) {
  json j;
  j["format_version"] = kConfigFormatVersion;
  j["name"] = c.name;
  j["head_kind"] = to_string(c.head_kind);
  j["task"] = to_string(c.task);
  j["input_dim"] = c.input_dim;
  j["hidden_units"] = c.hidden_units;
  j["hidden_activation"] = to_string(c.hidden_activation);
  j["dropout_rate"] = c.dropout_rate;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["grad_accum"] = c.grad_accum;
  j["optimizer"] = to_string(c.optimizer.kind);
  j["learning_rate"] = c.optimizer.learning_rate;
  j["beta1"] = c.optimizer.beta1;
  j["beta2"] = c.optimizer.beta2;
  j["epsilon"] = c.optimizer.epsilon;
  j["weight_decay"] = c.optimizer.weight_decay;
  j["max_rows"] = c.max_rows ? json(*c.max_rows) : json(nullptr);
  j["hidden_rep"] = to_string(c.hidden_rep);
  j["seed"] = c.seed;
  return j;
}

void apply_config_overrides(GraderConfig& c, const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected an object", path);
  for (const auto& [key, _] : j.items()) {
    if (!kConfigKeys.contains(key)) throw ConfigError("unknown key '" + key + "'", path + "." + key);
  }
  auto at = [&](const char* key) { return path + "." + key; };
  if (j.contains("format_version")) {
    const auto v = get_count(j["format_version"], at("format_version"));
    if (v != static_cast<std::size_t>(kConfigFormatVersion)) {
      throw ConfigError("unsupported config format version " + std::to_string(v), at("format_version"));
    }
  }
  if (j.contains("name")) c.name = get_string(j["name"], at("name"));
  if (j.contains("head_kind")) {
    const auto s = get_string(j["head_kind"], at("head_kind"));
    const auto k = parse_head_kind(s);
    if (!k) throw ConfigError("unknown head_kind '" + s + "'", at("head_kind"));
    if (*k != c.head_kind) c.hidden_units.clear();
    c.head_kind = *k;
  }
  if (j.contains("task")) {
    try {
      c.task = parse_task(get_string(j["task"], at("task")));
    } catch (const ConfigError& e) {
      if (!e.path().empty()) throw;
      throw ConfigError(e.what(), at("task"));
    }
  }
  if (j.contains("input_dim")) c.input_dim = get_count(j["input_dim"], at("input_dim"));
  if (j.contains("hidden_units")) {
    const auto& h = j["hidden_units"];
    if (!h.is_array()) throw ConfigError("expected an array", at("hidden_units"));
    c.hidden_units.clear();
    for (std::size_t i = 0; i < h.size(); ++i) {
      c.hidden_units.push_back(get_count(h[i], at("hidden_units") + "[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("hidden_activation")) {
    try {
      c.hidden_activation = activation_from_string(get_string(j["hidden_activation"], at("hidden_activation")));
    } catch (const ConfigError& e) {
      if (!e.path().empty()) throw;
      throw ConfigError(e.what(), at("hidden_activation"));
    }
  }
  if (j.contains("dropout_rate")) c.dropout_rate = get_number(j["dropout_rate"], at("dropout_rate"));
  if (j.contains("epochs")) c.epochs = get_count(j["epochs"], at("epochs"));
  if (j.contains("batch_size")) c.batch_size = get_count(j["batch_size"], at("batch_size"));
  if (j.contains("grad_accum")) c.grad_accum = get_count(j["grad_accum"], at("grad_accum"));
  if (j.contains("optimizer")) {
    const auto s = get_string(j["optimizer"], at("optimizer"));
    try {
      c.optimizer.kind = optimizer_from_string(s);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), at("optimizer"));
    }
    if (!j.contains("weight_decay")) c.optimizer.weight_decay = c.optimizer.kind == OptimizerKind::adamw ? 0.01 : 0.0;
  }
  if (j.contains("learning_rate")) c.optimizer.learning_rate = get_number(j["learning_rate"], at("learning_rate"));
  if (j.contains("beta1")) c.optimizer.beta1 = get_number(j["beta1"], at("beta1"));
  if (j.contains("beta2")) c.optimizer.beta2 = get_number(j["beta2"], at("beta2"));
  if (j.contains("epsilon")) c.optimizer.epsilon = get_number(j["epsilon"], at("epsilon"));
  if (j.contains("weight_decay")) c.optimizer.weight_decay = get_number(j["weight_decay"], at("weight_decay"));
  if (j.contains("max_rows")) {
    if (j["max_rows"].is_null()) {
      c.max_rows.reset();
    } else {
      c.max_rows = get_count(j["max_rows"], at("max_rows"));
    }
  }
  if (j.contains("hidden_rep")) {
    const auto s = get_string(j["hidden_rep"], at("hidden_rep"));
    const auto r = parse_hidden_rep(s);
    if (!r) throw ConfigError("unknown hidden_rep '" + s + "'", at("hidden_rep"));
    c.hidden_rep = *r;
  }
  if (j.contains("seed")) {
    if (!is_count(j["seed"])) throw ConfigError("expected an unsigned 64-bit integer", at("seed"));
    c.seed = j["seed"].get<std::uint64_t>();
  }
  try {
    c.normalize();
  } catch (const ConfigError& e) {
    // validate() reports "$.key"; re-root under `path`.
    if (path != "$" && e.path().starts_with("$")) {
      throw ConfigError(std::string(e.what()).substr(e.path().size() + 2), path + e.path().substr(1));
    }
    throw;
  }
}

GraderConfig config_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected an object", path);
  for (const char* key : {"head_kind", "task", "epochs", "batch_size", "optimizer", "learning_rate"}) {
    if (!j.contains(key)) throw ConfigError("missing required field", path + "." + key);
  }
  GraderConfig c;
  apply_config_overrides(c, j, path);
  return c;
}

Mlp<float> build_head(const GraderConfig& config, RngStream& rng) {
  config.validate();
  Mlp<float> net;
  std::size_t prev = config.input_dim;
  for (const std::size_t w : config.hidden_units) {
    net.layers.push_back(init_dense<float>(prev, w, config.hidden_activation, rng));
    prev = w;
  }
  net.layers.push_back(init_dense<float>(prev, config.output_units(), Activation::identity, rng));
  net.dropout_after = dropout_schedule(config);
  return net;
}

Matrix utterance_input(const UtteranceRecord& record, const GraderConfig& config) {
  switch (config.head_kind) {
    case HeadKind::speech_head:
      if (record.modality != Modality::speech) {
        throw ConfigError("utterance '" + record.utterance_id + "' is " + std::string(to_string(record.modality)) +
                          " but speech_head needs speech embeddings");
      }
      return mean_pool(read_embedding_file(record.resolved_path));
    case HeadKind::text_head: {
      if (record.modality != Modality::text) {
        throw ConfigError("utterance '" + record.utterance_id + "' is " + std::string(to_string(record.modality)) +
                          " but text_head needs text embeddings");
      }
      const Matrix rows = read_embedding_rows(record.resolved_path, config.max_rows.value_or(1));
      Matrix cls(1, rows.cols());
      std::copy(rows.row(0).begin(), rows.row(0).end(), cls.row(0).begin());
      return cls;
    }
    case HeadKind::fusion_head:
      break;
  }
  throw ConfigError("fusion_head models consume prediction sets, not manifests");
}

TrainingData load_split(const Manifest& manifest, std::optional<Split> split, const GraderConfig& config,
                        bool require_targets) {
  std::vector<const UtteranceRecord*> records;
  for (const auto& r : manifest.records) {
    if (!split || r.split == *split) records.push_back(&r);
  }
  TrainingData data;
  if (records.empty()) return data;
  data.inputs = Matrix(records.size(), config.input_dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Matrix x = utterance_input(*records[i], config);
    if (x.cols() != config.input_dim) {
      throw ShapeError("utterance '" + records[i]->utterance_id + "': embedding dim " + std::to_string(x.cols()) +
                       " does not match model input dim " + std::to_string(config.input_dim));
    }
    std::copy(x.row(0).begin(), x.row(0).end(), data.inputs.row(i).begin());
    data.ids.push_back(records[i]->utterance_id);
    data.splits.push_back(records[i]->split);
  }
  try {
    Targets t = encode_labels(records, config.task);
    data.classes = std::move(t.classes);
    data.scores = std::move(t.scores);
    data.has_targets = true;
  } catch (const ValidationError&) {
    if (require_targets) throw;
  }
  return data;
}

Matrix infer(const GraderModel& model, const Matrix& inputs, Matrix* penultimate) {
  if (inputs.cols() != model.network.input_dim()) {
    throw ShapeError("model expects input dim " + std::to_string(model.network.input_dim()) + ", got " +
                     std::to_string(inputs.cols()));
  }
  constexpr std::size_t kChunk = 256;
  Matrix out(inputs.rows(), model.network.output_dim());
  const std::size_t pen_dim = model.network.layers.back().in_dim();
  if (penultimate != nullptr) *penultimate = Matrix(inputs.rows(), pen_dim);
  for (std::size_t start = 0; start < inputs.rows(); start += kChunk) {
    const std::size_t n = std::min(kChunk, inputs.rows() - start);
    Matrix chunk(n, inputs.cols());
    for (std::size_t r = 0; r < n; ++r) std::ranges::copy(inputs.row(start + r), chunk.row(r).begin());
    const auto trace = mlp_forward(model.network, chunk, nullptr, false);
    for (std::size_t r = 0; r < n; ++r) {
      std::ranges::copy(trace.result().row(r), out.row(start + r).begin());
      if (penultimate != nullptr) std::ranges::copy(trace.penultimate().row(r), penultimate->row(start + r).begin());
    }
  }
  return out;
}

GraderModel train_head(const GraderConfig& config_in, const TrainingData& train, const TrainingData* dev,
                       const EpochCallback& on_epoch) {
  GraderConfig config = config_in;
  config.normalize();
  const std::size_t n = train.size();
  if (n == 0) throw TrainingError("train split is empty");
  if (!train.has_targets) throw TrainingError("train split has no targets for task " + to_string(config.task));
  if (train.inputs.cols() != config.input_dim) {
    throw ShapeError("training inputs have dim " + std::to_string(train.inputs.cols()) + ", config expects " +
                     std::to_string(config.input_dim));
  }
  const bool classify = config.task.is_classification();

  RngStream master(config.seed);
  RngStream init_rng = master.fork(1);
  RngStream shuffle_rng = master.fork(2);
  RngStream dropout_rng = master.fork(3);

  GraderModel model{config, build_head(config, init_rng), {}, {}};
  OptimizerState optimizer(config.optimizer);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t micro = config.batch_size;
  const std::size_t group = config.batch_size * config.grad_accum;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t gs = 0; gs < n; gs += group) {
      const std::size_t ge = std::min(n, gs + group);
      const double total = static_cast<double>(ge - gs);
      auto acc = zero_gradients(model.network);
      for (std::size_t ms = gs; ms < ge; ms += micro, ++batch_index) {
        const std::size_t me = std::min(ge, ms + micro);
        const std::size_t rows = me - ms;
        Matrix x(rows, config.input_dim);
        std::vector<int> labels;
        std::vector<double> targets;
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t idx = order[ms + r];
          std::ranges::copy(train.inputs.row(idx), x.row(r).begin());
          if (classify) {
            labels.push_back(train.classes[idx]);
          } else {
            targets.push_back(train.scores[idx]);
          }
        }
        const auto trace = mlp_forward(model.network, x, &dropout_rng, true);
        double loss = 0.0;
        MatrixD grad_out;
        if (classify) {
          auto ce = softmax_cross_entropy(trace.result(), labels);
          loss = ce.loss;
          grad_out = std::move(ce.grad_logits);
        } else {
          const MatrixD out = outputs_to_double(trace.result());
          auto m = mse_loss(out.values(), targets);
          loss = m.loss;
          grad_out = MatrixD(rows, 1, std::move(m.grad));
        }
        if (!std::isfinite(loss)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_index));
        }
        loss_sum += loss * static_cast<double>(rows);
        accumulate_gradients(acc, mlp_backward(model.network, trace, std::move(grad_out)),
                             static_cast<double>(rows) / total);
      }
      const auto blocks = parameter_blocks(model.network, acc);
      optimizer.step(std::span<const ParamBlock<float>>(blocks));
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(n), std::nullopt};
    if (dev != nullptr && dev->size() > 0 && dev->has_targets) {
      const Matrix out = infer(model, dev->inputs, nullptr);
      if (classify) {
        std::size_t correct = 0;
        for (std::size_t r = 0; r < dev->size(); ++r) {
          const auto row = out.row(r);
          const auto best = static_cast<int>(std::ranges::max_element(row) - row.begin());
          correct += best == dev->classes[r] ? 1 : 0;
        }
        rec.dev_metric = static_cast<double>(correct) / static_cast<double>(dev->size());
      } else {
        double s = 0.0;
        for (std::size_t r = 0; r < dev->size(); ++r) {
          const double d = static_cast<double>(out(r, 0)) - dev->scores[r];
          s += d * d;
        }
        rec.dev_metric = s / static_cast<double>(dev->size());
      }
    }
    model.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return model;
}

GraderModel train_grader(const Manifest& manifest, const GraderConfig& config, const EpochCallback& on_epoch) {
  if (config.head_kind == HeadKind::fusion_head) throw ConfigError("fusion heads are trained with deep_fuse");
  const TrainingData train = load_split(manifest, Split::train, config, true);
  if (train.size() == 0) throw TrainingError("manifest '" + manifest.dataset_name + "' has an empty train split");
  const TrainingData dev = load_split(manifest, Split::dev, config, false);
  GraderModel model = train_head(config, train, dev.size() > 0 ? &dev : nullptr, on_epoch);
  model.manifest_hash = manifest.content_hash;
  return model;
}

void persist_model(const GraderModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "weights");
  write_text(dir / "config.json", config_to_json(model.config).dump(2) + "\n");
  json hist = json::array();
  for (const auto& h : model.history) {
    json e{{"epoch", h.epoch}, {"train_loss", h.train_loss}};
    e["dev_metric"] = h.dev_metric ? json(*h.dev_metric) : json(nullptr);
    hist.push_back(e);
  }
  write_text(dir / "history.json", hist.dump(2) + "\n");
  write_text(dir / "manifest.hash", model.manifest_hash + "\n");
  for (std::size_t i = 0; i < model.network.layers.size(); ++i) {
    const auto& layer = model.network.layers[i];
    const std::string stem = "layer" + std::to_string(i);
    write_embedding_file(layer.weights, dir / "weights" / (stem + "_W.emb1"));
    write_embedding_file(Matrix(1, layer.bias.size(), layer.bias), dir / "weights" / (stem + "_b.emb1"));
  }
}

GraderModel load_model(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_text(dir / "config.json"));
  } catch (const json::parse_error& e) {
    throw IntegrityError(dir.string() + "/config.json: " + e.what());
  }
  GraderModel model;
  try {
    if (!j.is_object() || !j.contains("format_version")) {
      throw ConfigError("missing format_version", "$.format_version");
    }
    model.config = config_from_json(j);
  } catch (const ConfigError& e) {
    throw IntegrityError("incompatible checkpoint version or config in " + dir.string() + ": " + e.what());
  }
  const GraderConfig& c = model.config;

  std::vector<std::size_t> widths = c.hidden_units;
  widths.push_back(c.output_units());
  std::size_t prev = c.input_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string stem = "layer" + std::to_string(i);
    Matrix w;
    Matrix b;
    try {
      w = read_embedding_file(dir / "weights" / (stem + "_W.emb1"));
      b = read_embedding_file(dir / "weights" / (stem + "_b.emb1"));
    } catch (const FormatError& e) {
      throw IntegrityError(std::string("checkpoint weight file unreadable: ") + e.what());
    }
    if (w.rows() != prev || w.cols() != widths[i] || b.rows() != 1 || b.cols() != widths[i]) {
      throw IntegrityError(stem + " shape " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                           " does not match config (" + std::to_string(prev) + "x" + std::to_string(widths[i]) + ")");
    }
    const Activation act = i + 1 < widths.size() ? c.hidden_activation : Activation::identity;
    model.network.layers.push_back({std::move(w), std::vector<float>(b.values().begin(), b.values().end()), act});
    prev = widths[i];
  }
  model.network.dropout_after = dropout_schedule(c);

  if (std::filesystem::exists(dir / "history.json")) {
    const json hist = json::parse(read_text(dir / "history.json"));
    for (const auto& e : hist) {
      EpochRecord rec{e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(), std::nullopt};
      if (!e.at("dev_metric").is_null()) rec.dev_metric = e.at("dev_metric").get<double>();
      model.history.push_back(rec);
    }
  }
  if (std::filesystem::exists(dir / "manifest.hash")) {
    std::string h = read_text(dir / "manifest.hash");
    while (!h.empty() && (h.back() == '\n' || h.back() == '\r')) h.pop_back();
    model.manifest_hash = h;
  }
  return model;
}

GradCheckReport check_head_gradients(const GraderConfig& config_in, const HeadCheckOptions& options) {
  GraderConfig config = config_in;
  config.normalize();
  RngStream rng(options.seed);
  RngStream init_rng = rng.fork(1);
  Mlp<double> net = build_head(config, init_rng).cast<double>();

  // Speech inputs are pooled from short random sequences; text/fusion inputs are single rows.
  MatrixD inputs(options.batch, config.input_dim);
  for (std::size_t r = 0; r < options.batch; ++r) {
    const std::size_t frames = config.head_kind == HeadKind::speech_head ? 3 + rng.below(6) : 1;
    MatrixD seq(frames, config.input_dim);
    for (double& v : seq.values()) v = rng.normal();
    const MatrixD pooled = mean_pool(seq);
    std::ranges::copy(pooled.row(0), inputs.row(r).begin());
  }
  std::vector<int> labels;
  std::vector<double> targets;
  for (std::size_t r = 0; r < options.batch; ++r) {
    if (config.task.is_classification()) {
      labels.push_back(static_cast<int>(rng.below(config.output_units())));
    } else {
      targets.push_back(rng.uniform(config.task.score_min(), config.task.score_max()));
    }
  }

  auto loss_and_grad = [&](bool want_grad, std::vector<DenseGrad>* grads) {
    const auto trace = mlp_forward(net, inputs, nullptr, false);
    double loss;
    MatrixD grad_out;
    if (config.task.is_classification()) {
      auto ce = softmax_cross_entropy(trace.result(), labels);
      loss = ce.loss;
      grad_out = std::move(ce.grad_logits);
    } else {
      auto m = mse_loss(trace.result().values(), targets);
      loss = m.loss;
      grad_out = MatrixD(options.batch, 1, std::move(m.grad));
    }
    if (want_grad) *grads = mlp_backward(net, trace, std::move(grad_out));
    return loss;
  };

  std::vector<DenseGrad> analytic;
  loss_and_grad(true, &analytic);
  if (options.gradient_corruption != 0.0) {
    for (auto& g : analytic) {
      for (double& v : g.weights.values()) v *= 1.0 + options.gradient_corruption;
      for (double& v : g.bias) v *= 1.0 + options.gradient_corruption;
    }
  }
  std::vector<GradCheckParam> params;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    params.push_back({"layer" + std::to_string(i) + ".W", net.layers[i].weights.values(), analytic[i].weights.values()});
    params.push_back({"layer" + std::to_string(i) + ".b", net.layers[i].bias, analytic[i].bias});
  }
  return finite_difference_check(params, [&] { return loss_and_grad(false, nullptr); },
                                 {options.tolerance, options.samples, options.seed ^ 0x5eedULL});
}

}  // namespace l2grade
