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


#include "cli/commands.hpp"

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cli/run_config.hpp"
#include "l2grade/errors.hpp"
#include "l2grade/fusion.hpp"
#include "l2grade/grader.hpp"
#include "l2grade/manifest.hpp"
#include "l2grade/metrics.hpp"
#include "l2grade/prediction.hpp"
#include "l2grade/stats.hpp"
#include "l2grade/synthetic.hpp"

namespace l2grade::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Flags {
  std::string config;
  std::string preset;
  std::string manifest;
  std::string model;
  std::string predictions;
  std::string predictions_b;
  std::string table;
  std::string out;
  std::string split;
  std::string mode;
  std::string family = "speech";
  std::string kind = "separable";
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  std::size_t seeds = 5;
  bool hidden = false;
  bool no_payloads = false;
};

RunConfig build_run_config(const Flags& f) {
  RunConfig rc = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (!f.preset.empty()) rc.preset = f.preset;
  if (!f.manifest.empty()) rc.manifest = f.manifest;
  if (!f.model.empty()) rc.model = f.model;
  if (!f.predictions.empty()) rc.predictions = f.predictions;
  if (!f.predictions_b.empty()) rc.predictions_b = f.predictions_b;
  if (!f.table.empty()) rc.table = f.table;
  if (!f.out.empty()) rc.out = f.out;
  if (!f.split.empty()) {
    rc.split = parse_split(f.split);
    if (!rc.split) throw ConfigError("unknown split '" + f.split + "'", "--split");
  }
  if (f.sigma) {
    if (!(*f.sigma > 0.0)) throw ConfigError("sigma must be positive", "--sigma");
    rc.sigma = *f.sigma;
  }
  if (!f.mode.empty()) {
    if (f.mode == "shallow") {
      rc.fusion.mode = FusionMode::shallow;
    } else if (f.mode == "deep") {
      rc.fusion.mode = FusionMode::deep;
    } else {
      throw ConfigError("unknown fusion mode '" + f.mode + "'", "--mode");
    }
  }
  resolve(rc);
  return rc;
}

template <class T>
const T& need(const std::optional<T>& v, const char* key) {
  if (!v) throw ConfigError(std::string("missing required field (flag --") + key + ")", std::string("$.") + key);
  return *v;
}

const GraderConfig& need_grader(const RunConfig& rc) {
  if (!rc.grader) throw ConfigError("no grader configuration: give a preset or the grader fields", "$.preset");
  return *rc.grader;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f.flush()) throw Error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

fs::path output_dir(const RunConfig& rc) {
  const fs::path dir = need(rc.out, "out");
  fs::create_directories(dir);
  return dir;
}

void write_resolved(const RunConfig& rc, const std::string& command) {
  write_json(need(rc.out, "out") / "resolved_config.json", resolved_to_json(rc, command));
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

void print_report(const EvalReport& r, std::ostream& out) {
  out << "task " << r.task << ", " << r.count << " utterances\n";
  if (r.classification) {
    out << "accuracy     " << fmt(r.classification->accuracy) << "\n";
    out << "weighted_f1  " << fmt(r.classification->weighted_f1) << "\n";
  }
  if (r.regression) {
    out << "pcc  " << fmt(r.regression->pcc) << "\n";
    out << "src  " << fmt(r.regression->src) << "\n";
    out << "mse  " << fmt(r.regression->mse) << "\n";
  }
}

void write_report(const fs::path& dir, const EvalReport& r) {
  write_json(dir / "eval_report.json", to_json(r));
  if (r.classification) write_file(dir / "confusion.csv", confusion_csv(r.classification->confusion));
  if (r.regression && !r.regression->curve.empty()) write_file(dir / "curve.csv", curve_csv(r.regression->curve));
}

int cmd_validate(const Flags& f, std::ostream& out) {
  const RunConfig rc = build_run_config(f);
  ManifestOptions opts;
  opts.check_payloads = !f.no_payloads;
  const Manifest m = load_manifest(need(rc.manifest, "manifest"), opts);
  const SplitCounts c = m.split_counts();
  out << "dataset  " << m.dataset_name << "\n"
      << "records  " << m.records.size() << "\n"
      << "train    " << c.train << "\n"
      << "dev      " << c.dev << "\n"
      << "test     " << c.test << "\n"
      << "hash     " << m.content_hash << "\n";
  if (rc.out) {
    write_json(*rc.out / "validation.json", {{"dataset", m.dataset_name},
                                             {"records", m.records.size()},
                                             {"splits", {{"train", c.train}, {"dev", c.dev}, {"test", c.test}}},
                                             {"content_hash", m.content_hash}});
    write_resolved(rc, "validate-data");
  }
  return kExitOk;
}

int cmd_train(const Flags& f, std::ostream& out) {
  const RunConfig rc = build_run_config(f);
  const GraderConfig& g = need_grader(rc);
  const fs::path dir = output_dir(rc);
  const Manifest m = load_manifest(need(rc.manifest, "manifest"));
  out << "training " << g.name << ": " << g.parameter_count() << " parameters, " << g.epochs << " epochs\n";
  const GraderModel model = train_grader(m, g, [&](const EpochRecord& e) {
    out << "epoch " << e.epoch << "/" << g.epochs << "  loss " << fmt(e.train_loss);
    if (e.dev_metric) out << "  dev " << fmt(*e.dev_metric);
    out << "\n";
  });
  persist_model(model, dir);
  write_resolved(rc, "train");
  out << "checkpoint " << dir.generic_string() << "\n";
  return kExitOk;
}

PredictionSet predictions_from(const RunConfig& rc, bool hidden, std::optional<Split> default_split) {
  const std::optional<Split> split = rc.split ? rc.split : default_split;
  if (rc.predictions) {
    PredictionSet p = read_predictions(*rc.predictions);
    return split ? select_split(p, *split) : p;
  }
  const GraderModel model = load_model(need(rc.model, "model"));
  const Manifest m = load_manifest(need(rc.manifest, "manifest"));
  PredictOptions opts;
  opts.include_hidden = hidden;
  return predict(model, m, split, opts);
}

int cmd_predict(const Flags& f, std::ostream& out) {
  RunConfig rc = build_run_config(f);
  rc.predictions.reset();
  const fs::path dir = output_dir(rc);
  const PredictionSet p = predictions_from(rc, f.hidden, std::nullopt);
  write_predictions(dir / "predictions.jsonl", p);
  write_resolved(rc, "predict");
  out << "wrote " << p.size() << " predictions to " << (dir / "predictions.jsonl").generic_string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const Flags& f, std::ostream& out) {
  const RunConfig rc = build_run_config(f);
  const fs::path dir = output_dir(rc);
  const PredictionSet p = predictions_from(rc, false, rc.predictions ? std::nullopt : std::optional<Split>(Split::test));
  const EvalReport r = evaluate_predictions(p, rc.sigma);
  write_report(dir, r);
  write_resolved(rc, "evaluate");
  print_report(r, out);
  return kExitOk;
}

int cmd_stats(const Flags& f, std::ostream& out) {
  const RunConfig rc = build_run_config(f);
  const fs::path dir = output_dir(rc);
  const PairedScoreTable t = read_score_table_csv(need(rc.table, "table"));
  const FriedmanResult fr = friedman_test(t);
  const PosthocResult ph = nemenyi_test(t, rc.alpha);
  write_json(dir / "stats.json", stats_summary_json(fr, ph));
  write_file(dir / "nemenyi_pvalues.csv", pvalue_matrix_csv(ph));
  write_file(dir / "mean_ranks.csv", mean_ranks_csv(ph));
  write_resolved(rc, "stats");
  out << "friedman chi2 " << fmt(fr.statistic) << "  df " << fr.df << "  p " << fmt(fr.p_value) << "\n";
  for (std::size_t g = 0; g < ph.group_names.size(); ++g) {
    out << "  " << ph.group_names[g] << "  mean rank " << fmt(ph.mean_ranks[g]) << "\n";
  }
  return kExitOk;
}

int cmd_curve(const Flags& f, std::ostream& out) {
  const RunConfig rc = build_run_config(f);
  const fs::path dir = output_dir(rc);
  const PredictionSet p = predictions_from(rc, false, std::nullopt);
  if (p.task.is_classification()) throw ConfigError("the MSE-by-score curve needs regression predictions");
  if (!p.has_targets) throw ConfigError("the MSE-by-score curve needs targets");
  const auto curve = mse_by_score_curve(p.scores, p.target_scores, rc.sigma);
  write_file(dir / "curve.csv", curve_csv(curve));
  write_resolved(rc, "curve");
  out << curve.size() << " score levels, sigma " << fmt(rc.sigma) << "\n";
  return kExitOk;
}

int cmd_fuse(const Flags& f, std::ostream& out) {
  const RunConfig rc = build_run_config(f);
  const fs::path dir = output_dir(rc);
  const PredictionSet a = read_predictions(need(rc.predictions, "predictions"));
  const PredictionSet b = read_predictions(need(rc.predictions_b, "predictions_b"));
  PredictionSet fused;
  if (rc.fusion.mode == FusionMode::shallow) {
    fused = shallow_fuse(a, b);
  } else {
    const FusionInputs in = align_for_fusion(a, b);
    DeepFusionResult res = deep_fuse(in, rc.fusion);
    persist_model(res.model, dir / "model");
    fused = std::move(res.predictions);
  }
  write_predictions(dir / "predictions.jsonl", fused);
  write_resolved(rc, "fuse");
  out << "fused " << fused.size() << " predictions ("
      << (rc.fusion.mode == FusionMode::shallow ? "shallow" : "deep") << ")\n";
  if (fused.has_targets) {
    const PredictionSet test = select_split(fused, Split::test);
    const EvalReport r = evaluate_predictions(test.size() > 0 ? test : fused, rc.sigma);
    write_report(dir, r);
    print_report(r, out);
  }
  return kExitOk;
}

int cmd_grad_check(const Flags& f, std::ostream& out) {
  const RunConfig rc = build_run_config(f);
  const GraderConfig& g = need_grader(rc);
  json runs = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < f.seeds; ++i) {
    HeadCheckOptions opts;
    opts.seed = g.seed + i;
    const GradCheckReport r = check_head_gradients(g, opts);
    ok = ok && r.passed;
    out << "seed " << opts.seed << "  max rel err " << fmt(r.max_relative_error) << "  (" << r.checked
        << " params, worst " << r.worst << ")  " << (r.passed ? "ok" : "FAIL") << "\n";
    runs.push_back({{"seed", opts.seed},
                    {"max_relative_error", r.max_relative_error},
                    {"checked", r.checked},
                    {"worst", r.worst},
                    {"passed", r.passed}});
  }
  if (rc.out) {
    write_json(*rc.out / "grad_check.json", {{"config", g.name}, {"runs", runs}, {"passed", ok}});
    write_resolved(rc, "grad-check");
  }
  return ok ? kExitOk : kExitInvalid;
}

int cmd_train_all(const Flags& f, std::ostream& out) {
  if (f.family != "speech" && f.family != "text") throw ConfigError("family must be speech or text", "--family");
  RunConfig rc = build_run_config(f);
  const fs::path dir = output_dir(rc);
  const Manifest m = load_manifest(need(rc.manifest, "manifest"));

  std::vector<GraderConfig> configs;
  for (const Subscore s : kAllSubscores) {
    GraderConfig g = builtin_config("tlt-" + f.family + "-" + std::string(to_string(s)));
    apply_config_overrides(g, rc.grader_overrides);
    if (rc.seed) g.seed = *rc.seed;
    configs.push_back(std::move(g));
  }
  std::vector<std::exception_ptr> failures(configs.size());
  std::vector<std::size_t> epochs(configs.size());
  {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          const GraderModel model = train_grader(m, configs[i]);
          persist_model(model, dir / std::string(to_string(configs[i].task.indicator)));
          epochs[i] = model.history.size();
        } catch (...) {
          failures[i] = std::current_exception();
        }
      });
    }
  }
  for (auto& fail : failures) {
    if (fail) std::rethrow_exception(fail);
  }
  rc.grader.reset();
  write_resolved(rc, "train-all-subscores");
  for (std::size_t i = 0; i < configs.size(); ++i) {
    out << configs[i].name << "  " << epochs[i] << " epochs  -> "
        << (dir / std::string(to_string(configs[i].task.indicator))).generic_string() << "\n";
  }
  return kExitOk;
}

int cmd_synth(const Flags& f, std::ostream& out) {
  if (f.out.empty()) throw ConfigError("missing required field (flag --out)", "$.out");
  std::size_t n = 0;
  if (f.kind == "separable") {
    synthetic::SeparableOptions o;
    if (f.seed) o.seed = *f.seed;
    n = synthetic::write_separable_speech(f.out, o).size();
  } else if (f.kind == "linear") {
    synthetic::LinearOptions o;
    if (f.seed) o.seed = *f.seed;
    n = synthetic::write_linear_speech(f.out, o).size();
  } else {
    throw ConfigError("kind must be separable or linear", "--kind");
  }
  out << "wrote " << n << " utterances, manifest " << (fs::path(f.out) / "manifest.jsonl").generic_string() << "\n";
  return kExitOk;
}

void report_issues(const ValidationError& e, std::ostream& err) {
  err << "validation failed: " << e.issues().size() << " issue(s)\n";
  for (const auto& i : e.issues()) err << "  " << i.record << ": " << i.message << "\n";
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Proficiency grader training, evaluation, statistics and fusion"};
  app.name("l2grade");
  app.require_subcommand(1, 1);
  Flags f;

  auto config_opt = [&](CLI::App* c) { c->add_option("--config", f.config, "Run configuration (JSON)"); };
  auto out_opt = [&](CLI::App* c) { c->add_option("--out", f.out, "Output directory"); };

  auto* validate = app.add_subcommand("validate-data", "Check a manifest and its embedding files");
  config_opt(validate);
  validate->add_option("--manifest", f.manifest, "Manifest (JSONL)");
  validate->add_flag("--no-payloads", f.no_payloads, "Check EMB1 headers only");
  out_opt(validate);

  auto* train = app.add_subcommand("train", "Train a grader and write a checkpoint");
  config_opt(train);
  train->add_option("--preset", f.preset, "Built-in configuration name");
  train->add_option("--manifest", f.manifest, "Manifest (JSONL)");
  out_opt(train);

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint or a prediction file");
  config_opt(evaluate);
  evaluate->add_option("--model", f.model, "Checkpoint directory");
  evaluate->add_option("--manifest", f.manifest, "Manifest (JSONL)");
  evaluate->add_option("--predictions", f.predictions, "Predictions (JSONL) instead of a checkpoint");
  evaluate->add_option("--split", f.split, "train, dev or test (checkpoint default: test)");
  evaluate->add_option("--sigma", f.sigma, "Curve smoothing sigma");
  out_opt(evaluate);

  auto* predict_cmd = app.add_subcommand("predict", "Run a checkpoint over a manifest");
  config_opt(predict_cmd);
  predict_cmd->add_option("--model", f.model, "Checkpoint directory");
  predict_cmd->add_option("--manifest", f.manifest, "Manifest (JSONL)");
  predict_cmd->add_option("--split", f.split, "Restrict to one split");
  predict_cmd->add_flag("--hidden", f.hidden, "Include penultimate activations");
  out_opt(predict_cmd);

  auto* stats = app.add_subcommand("stats", "Friedman test with Nemenyi post-hoc over a score table");
  config_opt(stats);
  stats->add_option("--table", f.table, "CSV: header of group names, one row per subject");
  out_opt(stats);

  auto* curve = app.add_subcommand("curve", "MSE-by-score curve from regression predictions");
  config_opt(curve);
  curve->add_option("--predictions", f.predictions, "Predictions (JSONL)");
  curve->add_option("--split", f.split, "Restrict to one split");
  curve->add_option("--sigma", f.sigma, "Gaussian smoothing sigma (default 0.5)");
  out_opt(curve);

  auto* fuse = app.add_subcommand("fuse", "Combine two graders' predictions");
  config_opt(fuse);
  fuse->add_option("--mode", f.mode, "shallow or deep")->check(CLI::IsMember({"shallow", "deep"}));
  fuse->add_option("--a", f.predictions, "First predictions (JSONL)");
  fuse->add_option("--b", f.predictions_b, "Second predictions (JSONL)");
  out_opt(fuse);

  auto* grad = app.add_subcommand("grad-check", "Finite-difference check of a freshly initialized head");
  config_opt(grad);
  grad->add_option("--preset", f.preset, "Built-in configuration name");
  grad->add_option("--seeds", f.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  out_opt(grad);

  auto* all = app.add_subcommand("train-all-subscores", "Train the six subscore graders concurrently");
  config_opt(all);
  all->add_option("--family", f.family, "speech or text")->check(CLI::IsMember({"speech", "text"}));
  all->add_option("--manifest", f.manifest, "Manifest (JSONL)");
  out_opt(all);

  auto* synth = app.add_subcommand("synth", "Write a synthetic embedding dataset");
  synth->add_option("--kind", f.kind, "separable or linear")->check(CLI::IsMember({"separable", "linear"}));
  synth->add_option("--seed", f.seed, "Generator seed");
  out_opt(synth);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    if (validate->parsed()) return cmd_validate(f, out);
    if (train->parsed()) return cmd_train(f, out);
    if (evaluate->parsed()) return cmd_evaluate(f, out);
    if (predict_cmd->parsed()) return cmd_predict(f, out);
    if (stats->parsed()) return cmd_stats(f, out);
    if (curve->parsed()) return cmd_curve(f, out);
    if (fuse->parsed()) return cmd_fuse(f, out);
    if (grad->parsed()) return cmd_grad_check(f, out);
    if (all->parsed()) return cmd_train_all(f, out);
    if (synth->parsed()) return cmd_synth(f, out);
  } catch (const ValidationError& e) {
    report_issues(e, err);
    return kExitInvalid;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const FormatError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitInvalid;
}

}  // namespace l2grade::cli
