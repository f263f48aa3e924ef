/*
 * Copyright 2026 The fsbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fsbias/error.hpp"
#include "fsbias/experiment.hpp"

namespace fsbias::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Inputs {
  std::string config;
  std::string task;
  std::string repo;
  std::string eval;
};

void add_inputs(CLI::App* cmd, Inputs& in, bool with_repo, bool with_eval) {
  cmd->add_option("--config", in.config,
                  "Experiment YAML supplying task and data paths");
  cmd->add_option("--task", in.task, "Built-in task name or task JSON file");
  if (with_repo) cmd->add_option("--repo", in.repo, "Labeled repository");
  if (with_eval) cmd->add_option("--eval", in.eval, "Evaluation set");
}

struct Resolved {
  TaskSpec task;
  std::optional<DataSource> repo;
  std::optional<DataSource> eval;
  std::optional<ExperimentConfig> config;
};

// Explicit flags win over the config file.
Resolved resolve_inputs(const Inputs& in, bool need_repo, bool need_eval) {
  Resolved r;
  if (!in.config.empty()) {
    r.config = load_experiment_config(in.config);
    r.task = r.config->pipeline.task;
    r.repo = r.config->repository;
    r.eval = r.config->eval;
  }
  if (!in.task.empty()) {
    r.task = resolve_task(in.task);
  } else if (!r.config) {
    throw UsageError("--task or --config is required");
  }
  if (!in.repo.empty()) r.repo = DataSource{in.repo, input_format_for(in.repo)};
  if (!in.eval.empty()) r.eval = DataSource{in.eval, input_format_for(in.eval)};
  if (need_repo && !r.repo) throw UsageError("--repo or --config is required");
  if (need_eval && !r.eval) throw UsageError("--eval or --config is required");
  return r;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

struct RunFlags {
  std::string config;
  std::string out = "runs";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::string strategy;
  std::string scorer;
  std::string endpoint;
  bool parallel = false;
  bool save_prompts = false;
};

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = load_experiment_config(f.config);
  if (f.seed) {
    cfg.pipeline.selection.seed = *f.seed;
    cfg.sweep.seeds = {*f.seed};
  }
  if (f.k) {
    cfg.pipeline.selection.k = *f.k;
    cfg.sweep.k_values = {*f.k};
  }
  if (!f.strategy.empty()) cfg.pipeline.selection.strategy = parse_strategy(f.strategy);
  if (!f.scorer.empty()) cfg.pipeline.scorer.backend = parse_scorer_backend(f.scorer);
  if (!f.endpoint.empty()) cfg.pipeline.scorer.endpoint = f.endpoint;
  if (f.parallel) cfg.parallel = true;
  if (f.save_prompts) cfg.save_prompts = true;
  cfg.pipeline.scorer.validate();

  RunOptions opts;
  opts.out_root = f.out;
  const RunSummary summary = run_experiment(cfg, opts);
  for (const auto& w : summary.warnings) err << "warning: " << w << "\n";
  out << "run " << summary.fingerprint << " -> " << summary.run_dir.string()
      << "\n";
  out << render_run_report(summary.to_json(), std::nullopt);
  return kOk;
}

struct DedupFlags {
  Inputs in;
  double threshold = 0.1;
  std::string denominator = "sum";
  std::string out;
  std::string report;
};

int cmd_dedup(const DedupFlags& f, std::ostream& out) {
  const Resolved r = resolve_inputs(f.in, true, true);
  DedupOptions opts;
  opts.threshold = f.threshold;
  opts.denominator = parse_ratio_denominator(f.denominator);
  const auto repo = load_repository(r.repo->path, r.repo->format, r.task);
  const auto eval = load_posts(r.eval->path, r.eval->format, r.task, false);
  const auto [clean, report] = dedup_repository(repo, eval, opts);
  write_posts_jsonl(f.out, clean.posts());
  const std::string rj = report.to_json().dump(2) + "\n";
  if (!f.report.empty()) write_file(f.report, rj);
  out << "kept " << clean.size() << " of " << repo.size() << " posts, removed "
      << report.discarded.size() << "\n";
  if (f.report.empty()) out << rj;
  return kOk;
}

struct KeywordFlags {
  std::string config;
  std::vector<std::string> tasks;
  std::vector<std::string> evals;
  std::string lexicon;
  bool json = false;
};

int cmd_keyword_corr(const KeywordFlags& f, std::ostream& out) {
  std::vector<std::pair<TaskSpec, DataSource>> pairs;
  if (!f.config.empty()) {
    const auto cfg = load_experiment_config(f.config);
    pairs.emplace_back(cfg.pipeline.task, cfg.eval);
  }
  if (f.tasks.size() != f.evals.size()) {
    throw UsageError("--task and --eval must be given the same number of times");
  }
  for (std::size_t i = 0; i < f.tasks.size(); ++i) {
    pairs.emplace_back(resolve_task(f.tasks[i]),
                       DataSource{f.evals[i], input_format_for(f.evals[i])});
  }
  if (pairs.empty()) throw UsageError("give --config or --task/--eval pairs");
  const Lexicon lexicon = Lexicon::load(f.lexicon);
  std::vector<KeywordCorrelation> rows;
  for (const auto& [task, src] : pairs) {
    const auto eval = load_posts(src.path, src.format, task, true);
    rows.push_back(keyword_correlation(eval, task, lexicon));
  }
  if (f.json) {
    json j = json::array();
    for (const auto& r : rows) j.push_back(r.to_json());
    out << j.dump(2) << "\n";
  } else {
    out << render_keyword_table(rows);
  }
  return kOk;
}

struct BaselineFlags {
  Inputs in;
  std::vector<std::string> lexicons;
  std::optional<std::size_t> k;
  std::string json_out;
};

int cmd_baselines(const BaselineFlags& f, std::ostream& out) {
  const Resolved r = resolve_inputs(f.in, true, true);
  const std::size_t k =
      f.k ? *f.k : (r.config ? r.config->pipeline.selection.k : 32);
  TokenizerConfig tok;
  if (r.config) tok = r.config->pipeline.provider.tokenizer;
  const auto repo = load_repository(r.repo->path, r.repo->format, r.task);
  const auto eval = load_posts(r.eval->path, r.eval->format, r.task, true);
  std::vector<Lexicon> lexicons;
  for (const auto& p : f.lexicons) lexicons.push_back(Lexicon::load(p));
  const BaselineReport report =
      run_baselines(r.task, repo, eval, lexicons, k, tok);
  if (!f.json_out.empty()) write_file(f.json_out, report.to_json().dump(2) + "\n");
  out << report.render();
  if (report.best_keyword) out << "best keyword lexicon: " << *report.best_keyword << "\n";
  return kOk;
}

int cmd_report(const std::string& run_dir, const std::string& reference,
               std::ostream& out) {
  out << render_run_report(
      fs::path(run_dir),
      reference.empty() ? std::nullopt : std::optional<std::string>(reference));
  return kOk;
}

struct OverlapFlags {
  Inputs in;
  std::string cell_dir;
  bool json = false;
};

int cmd_term_overlap(const OverlapFlags& f, std::ostream& out) {
  const Resolved r = resolve_inputs(f.in, true, false);
  const auto repo = load_repository(r.repo->path, r.repo->format, r.task);
  const auto records = load_cell_records(f.cell_dir, repo);
  const OverlapReport report = shot_term_overlap_report(records, r.task);
  if (f.json) {
    out << report.to_json().dump(2) << "\n";
    return kOk;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "queries %zu/%zu  mean same-label %.3f  mean opposite-label %.3f",
                report.included, report.per_query.size(), report.mean_same,
                report.mean_opposite);
  out << buf;
  if (report.mean_ratio) {
    std::snprintf(buf, sizeof(buf), "  mean ratio %.3f", *report.mean_ratio);
    out << buf;
  }
  out << "\nterms: " << report.term_extraction << "\n";
  return kOk;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out,
         std::ostream& err) {
  CLI::App app{"Few-shot social bias classification experiments", "fsbias"};
  app.require_subcommand(1);

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "Execute an experiment sweep");
  run_cmd->add_option("--config", run.config, "Experiment YAML")->required();
  run_cmd->add_option("--out", run.out, "Output root")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Single seed, replaces the sweep seeds");
  run_cmd->add_option("--k", run.k, "Single k, replaces the k sweep");
  run_cmd->add_option("--strategy", run.strategy, "Shot selection strategy");
  run_cmd->add_option("--scorer", run.scorer, "Scorer backend");
  run_cmd->add_option("--endpoint", run.endpoint, "Scorer endpoint URL");
  run_cmd->add_flag("--parallel", run.parallel, "Run grid cells concurrently");
  run_cmd->add_flag("--save-prompts", run.save_prompts, "Persist prompts per cell");

  DedupFlags dedup;
  auto* dedup_cmd = app.add_subcommand(
      "dedup", "Drop repository posts that nearly duplicate eval posts");
  add_inputs(dedup_cmd, dedup.in, true, true);
  dedup_cmd->add_option("--threshold", dedup.threshold, "Ratio threshold")
      ->capture_default_str();
  dedup_cmd->add_option("--denominator", dedup.denominator, "sum or product")
      ->capture_default_str();
  dedup_cmd->add_option("--out", dedup.out, "Cleaned repository JSONL")->required();
  dedup_cmd->add_option("--report", dedup.report, "Write the report JSON here");

  KeywordFlags kw;
  auto* kw_cmd = app.add_subcommand(
      "keyword-corr", "Keyword prevalence among positive and negative posts");
  kw_cmd->add_option("--config", kw.config, "Experiment YAML (task and eval)");
  kw_cmd->add_option("--task", kw.tasks, "Task, repeatable; pairs with --eval");
  kw_cmd->add_option("--eval", kw.evals, "Eval set, repeatable");
  kw_cmd->add_option("--lexicon", kw.lexicon, "Keyword list")->required();
  kw_cmd->add_flag("--json", kw.json, "Print JSON instead of a table");

  BaselineFlags bl;
  auto* bl_cmd = app.add_subcommand("baselines", "Keyword and TF-IDF vote baselines");
  add_inputs(bl_cmd, bl.in, true, true);
  bl_cmd->add_option("--lexicon", bl.lexicons, "Keyword list, repeatable");
  bl_cmd->add_option("--k", bl.k, "Shots considered by the vote baseline");
  bl_cmd->add_option("--json", bl.json_out, "Write the report JSON here");

  std::string report_dir;
  std::string reference;
  auto* rep_cmd = app.add_subcommand("report", "Render tables for a run directory");
  rep_cmd->add_option("run_dir", report_dir, "runs/<fingerprint>")->required();
  rep_cmd->add_option("--reference", reference, "Group id to compare against");

  OverlapFlags ov;
  auto* ov_cmd = app.add_subcommand(
      "term-overlap", "Query term overlap with same- and opposite-label shots");
  add_inputs(ov_cmd, ov.in, true, false);
  ov_cmd->add_option("cell_dir", ov.cell_dir, "runs/<fingerprint>/cells/<cell>")
      ->required();
  ov_cmd->add_flag("--json", ov.json, "Print JSON");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run, out, err);
    if (dedup_cmd->parsed()) return cmd_dedup(dedup, out);
    if (kw_cmd->parsed()) return cmd_keyword_corr(kw, out);
    if (bl_cmd->parsed()) return cmd_baselines(bl, out);
    if (rep_cmd->parsed()) return cmd_report(report_dir, reference, out);
    if (ov_cmd->parsed()) return cmd_term_overlap(ov, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kBackend;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace fsbias::cli
