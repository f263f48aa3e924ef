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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsbias/classify.hpp"
#include "fsbias/corpus.hpp"
#include "fsbias/http.hpp"
#include "fsbias/lexicon.hpp"
#include "fsbias/metrics.hpp"

namespace fsbias {

struct DataSource {
  std::filesystem::path path;
  InputFormat format = InputFormat::kJsonl;
};

struct SweepAxes {
  std::vector<std::size_t> k_values;
  std::vector<std::size_t> repo_sizes;  // downsampled sizes; full is implicit
  std::vector<std::uint64_t> seeds;
  std::vector<Perturbation> perturbations;
  std::vector<PromptAblation> ablations;
};

struct ExperimentConfig {
  PipelineConfig pipeline;
  DataSource repository;
  DataSource eval;
  bool dedup = true;
  DedupOptions dedup_options;
  SweepAxes sweep;                             // resolved: never empty axes
  std::optional<std::filesystem::path> error_lexicon;
  bool parallel = false;
  bool save_prompts = false;

  // Fields that change results; excludes output, concurrency, timeouts,
  // retries and credentials.
  nlohmann::json semantic_json() const;
  // 16 hex digits of FNV-1a over semantic_json().
  std::string fingerprint() const;
};

// YAML experiment file; relative data paths resolve against the file's
// directory. Throws UsageError for unknown keys or bad values.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& yaml,
                                         const std::filesystem::path& base_dir);

// Fills empty sweep axes from the single-valued pipeline settings.
void resolve_sweep(ExperimentConfig& config);

struct Cell {
  std::optional<std::size_t> repo_size;  // nullopt: full repository
  std::uint64_t seed = 0;
  std::size_t k = 0;
  Perturbation perturbation = Perturbation::kNone;
  PromptAblation ablation;

  std::string id() const;
  std::string group_id() const;  // id without the seed
};

// Cross product in a fixed order: repo size (full first), k, perturbation,
// ablation, seed. The full-repository cell repeats over seeds only when a
// seed can change its result (random strategies or random_half).
std::vector<Cell> enumerate_cells(const ExperimentConfig& config);

struct CellOutcome {
  Cell cell;
  std::optional<MetricsReport> metrics;
  std::optional<std::string> skipped;
  std::size_t n_predictions = 0;
};

struct MeanStd {
  double mean = 0.0;
  std::optional<double> std;  // population std, only with >= 2 values
};

MeanStd mean_std(std::span<const double> values);

struct AggregateRow {
  std::string group;
  Cell representative;
  std::size_t n_cells = 0;
  std::optional<MeanStd> auc;
  std::optional<MeanStd> f1;  // positive-class F1, or weighted if multiclass
  MeanStd f1_macro;
  MeanStd f1_weighted;
};

std::vector<AggregateRow> aggregate(std::span<const CellOutcome> cells);

struct RunSummary {
  std::string fingerprint;
  std::filesystem::path run_dir;
  std::vector<CellOutcome> cells;
  std::vector<AggregateRow> aggregates;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

struct RunOptions {
  std::filesystem::path out_root = "runs";
  // Scorer/embedding transport override (tests).
  std::shared_ptr<HttpTransport> transport;
};

// Executes every cell and writes
//   <out_root>/<fingerprint>/cells/<cell-id>/{predictions,shots}.jsonl,
//   metrics.json, errors.csv, optional prompts.jsonl, plus summary.json,
//   config.json, ksweep.csv and error_breakdown.csv at the run root.
// Invalid cells are recorded as skipped; backend failures abort the run
// with the cell id in the message.
RunSummary run_experiment(const ExperimentConfig& config,
                          const RunOptions& options = {});

// --- analyses ---------------------------------------------------------

struct KeywordCorrelation {
  std::string task;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  double positive_share = 0.0;  // fraction of posts that are positive
  double pos_pct = 0.0;         // % of positives with >= 1 keyword
  double neg_pct = 0.0;
  std::optional<double> ratio;  // pos_pct / neg_pct; +inf when neg_pct = 0
  std::optional<std::string> flag;

  nlohmann::json to_json() const;
};

KeywordCorrelation keyword_correlation(std::span<const Post> eval,
                                       const TaskSpec& task,
                                       const Lexicon& lexicon);
std::string render_keyword_table(std::span<const KeywordCorrelation> rows);

struct BaselineReport {
  std::vector<std::pair<std::string, MetricsReport>> keyword;
  std::optional<std::string> best_keyword;
  std::optional<MetricsReport> tfidf_vote;

  nlohmann::json to_json() const;
  std::string render() const;
};

// Keyword baseline per lexicon (binary tasks) and the TF-IDF vote baseline.
BaselineReport run_baselines(const TaskSpec& task,
                             const LabeledRepository& repo,
                             std::span<const Post> eval,
                             std::span<const Lexicon> lexicons, std::size_t k,
                             const TokenizerConfig& tokenizer = {});

// 100 * (value - reference) / reference.
double relative_change_pct(double value, double reference);

// Table over summary.json aggregates: mean +- std (percent) and, when a
// reference group is named, the relative change of each row against it.
std::string render_run_report(const nlohmann::json& summary,
                              const std::optional<std::string>& reference);
std::string render_run_report(const std::filesystem::path& run_dir,
                              const std::optional<std::string>& reference);

// Rebuilds prediction records of one cell, resolving shot texts from `repo`.
std::vector<PredictionRecord> load_cell_records(
    const std::filesystem::path& cell_dir, const LabeledRepository& repo);

}  // namespace fsbias
