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

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fsbias/error.hpp"
#include "fsbias/experiment.hpp"
#include "fsbias/parallel.hpp"

namespace fsbias {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

json mean_std_json(const MeanStd& m) {
  json j = {{"mean", m.mean}};
  j["std"] = m.std ? json(*m.std) : json(nullptr);
  return j;
}

json cell_json(const Cell& c) {
  json j = {{"id", c.id()},
            {"group", c.group_id()},
            {"seed", c.seed},
            {"k", c.k},
            {"perturbation", to_string(c.perturbation)},
            {"ablation", c.ablation.name()}};
  j["repo_size"] = c.repo_size ? json(*c.repo_size) : json(nullptr);
  return j;
}

struct ErrorCounts {
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t fp_keyword = 0;
  std::size_t fn_keyword = 0;
};

// False positives and negatives of a binary cell, tagged with whether the
// query contains a lexicon term.
ErrorCounts write_errors(const fs::path& path,
                         std::span<const PredictionRecord> records,
                         const TaskSpec& task, const Lexicon* lexicon) {
  ErrorCounts counts;
  std::string out = "query_id,gold,predicted,error,has_keyword\n";
  if (task.is_binary()) {
    const std::string& pos = task.positive_class();
    for (const auto& r : records) {
      if (!r.gold || *r.gold == r.predicted) continue;
      const bool fp = r.predicted == pos;
      const bool kw = lexicon != nullptr && lexicon->matches(r.query_text);
      (fp ? counts.fp : counts.fn)++;
      if (kw) (fp ? counts.fp_keyword : counts.fn_keyword)++;
      out += csv_field(r.query_id) + "," + csv_field(*r.gold) + "," +
             csv_field(r.predicted) + "," + (fp ? "FP" : "FN") + "," +
             (lexicon == nullptr ? "" : (kw ? "1" : "0")) + "\n";
    }
  }
  write_text(path, out);
  return counts;
}

struct CellResult {
  CellOutcome outcome;
  ErrorCounts errors;
  std::vector<std::string> warnings;
};

CellResult run_cell(const ExperimentConfig& config, const Cell& cell,
                    const LabeledRepository& repo,
                    std::span<const Post> eval, Scorer& scorer,
                    EmbeddingProvider* shared_provider, const Lexicon* lexicon,
                    const fs::path& cells_dir) {
  CellResult result;
  result.outcome.cell = cell;
  const std::string id = cell.id();
  try {
    PipelineConfig pc = config.pipeline;
    pc.selection.k = cell.k;
    pc.selection.seed = cell.seed;
    pc.selection.perturbation = cell.perturbation;
    pc.ablation = cell.ablation;
    pc.keep_prompts = config.save_prompts;
    pc.validate();

    std::optional<LabeledRepository> sampled;
    if (cell.repo_size) sampled = downsample(repo, *cell.repo_size, cell.seed);
    const LabeledRepository& cell_repo = sampled ? *sampled : repo;

    std::unique_ptr<EmbeddingProvider> owned;
    EmbeddingProvider* provider = shared_provider;
    if (provider == nullptr && cell.k > 0 &&
        uses_similarity(pc.selection.strategy)) {
      owned = make_provider(pc.provider, cell_repo);
      provider = owned.get();
    }
    PipelineResult run = run_pipeline(pc, cell_repo, eval, scorer, provider);

    const fs::path dir = cells_dir / id;
    fs::create_directories(dir);
    std::string preds;
    std::string shots;
    std::string prompts;
    for (const auto& r : run.records) {
      json line = r.to_json();
      line.erase("prompt");
      preds += line.dump() + "\n";
      shots += r.shots.to_json().dump() + "\n";
      if (r.prompt) {
        prompts += json{{"query_id", r.query_id}, {"prompt", *r.prompt}}.dump() +
                   "\n";
      }
    }
    write_text(dir / "predictions.jsonl", preds);
    write_text(dir / "shots.jsonl", shots);
    if (config.save_prompts) write_text(dir / "prompts.jsonl", prompts);

    MetricsReport metrics = evaluate(run.records, pc.task);
    json mj = metrics.to_json();
    mj["cell"] = cell_json(cell);
    mj["skipped_queries"] = run.skipped.size();
    write_text(dir / "metrics.json", mj.dump(2) + "\n");
    result.errors = write_errors(dir / "errors.csv", run.records, pc.task, lexicon);

    result.outcome.metrics = std::move(metrics);
    result.outcome.n_predictions = run.records.size();
    for (auto& w : run.warnings) result.warnings.push_back(id + ": " + w);
    for (const auto& s : run.skipped) {
      result.warnings.push_back(id + ": skipped query " + s.query_id + ": " +
                                s.error);
    }
  } catch (const BackendError& e) {
    throw BackendError("cell " + id + ": " + e.what());
  } catch (const UsageError& e) {
    result.outcome.skipped = e.what();
  } catch (const DataError& e) {
    result.outcome.skipped = e.what();
  }
  return result;
}

std::string ksweep_csv(std::span<const AggregateRow> rows) {
  std::string out =
      "group,repo_size,k,perturbation,ablation,n_cells,auc_mean,auc_std,"
      "f1_mean,f1_std,f1_macro_mean,f1_macro_std,f1_weighted_mean,"
      "f1_weighted_std\n";
  for (const auto& r : rows) {
    const Cell& c = r.representative;
    out += csv_field(r.group) + "," +
           (c.repo_size ? std::to_string(*c.repo_size) : "full") + "," +
           std::to_string(c.k) + "," + std::string(to_string(c.perturbation)) +
           "," + c.ablation.name() + "," + std::to_string(r.n_cells) + ",";
    out += (r.auc ? fmt(r.auc->mean) + "," + fmt(r.auc->std) : ",") + ",";
    out += (r.f1 ? fmt(r.f1->mean) + "," + fmt(r.f1->std) : ",") + ",";
    out += fmt(r.f1_macro.mean) + "," + fmt(r.f1_macro.std) + ",";
    out += fmt(r.f1_weighted.mean) + "," + fmt(r.f1_weighted.std) + "\n";
  }
  return out;
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw DataError("mean of an empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  MeanStd out{sum / static_cast<double>(values.size()), std::nullopt};
  if (values.size() >= 2) {
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(values.size()));
  }
  return out;
}

std::vector<AggregateRow> aggregate(std::span<const CellOutcome> cells) {
  std::vector<AggregateRow> rows;
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<const MetricsReport*>> members;
  for (const auto& c : cells) {
    if (!c.metrics) continue;
    const std::string g = c.cell.group_id();
    auto [it, fresh] = slot.emplace(g, rows.size());
    if (fresh) {
      rows.push_back(AggregateRow{g, c.cell, 0, {}, {}, {}, {}});
      members.emplace_back();
    }
    members[it->second].push_back(&*c.metrics);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> auc, f1, macro, weighted;
    for (const MetricsReport* m : members[i]) {
      if (m->auc) auc.push_back(*m->auc);
      f1.push_back(m->f1_binary_pos ? *m->f1_binary_pos : m->f1_weighted);
      macro.push_back(m->f1_macro);
      weighted.push_back(m->f1_weighted);
    }
    rows[i].n_cells = members[i].size();
    if (!auc.empty()) rows[i].auc = mean_std(auc);
    rows[i].f1 = mean_std(f1);
    rows[i].f1_macro = mean_std(macro);
    rows[i].f1_weighted = mean_std(weighted);
  }
  return rows;
}

nlohmann::json RunSummary::to_json() const {
  json cj = json::array();
  for (const auto& c : cells) {
    json j = cell_json(c.cell);
    j["n_predictions"] = c.n_predictions;
    j["metrics"] = c.metrics ? c.metrics->to_json() : json(nullptr);
    j["skipped"] = c.skipped ? json(*c.skipped) : json(nullptr);
    cj.push_back(std::move(j));
  }
  json aj = json::array();
  for (const auto& a : aggregates) {
    json j = cell_json(a.representative);
    j.erase("id");
    j.erase("seed");
    j["group"] = a.group;
    j["n_cells"] = a.n_cells;
    j["auc"] = a.auc ? mean_std_json(*a.auc) : json(nullptr);
    j["f1"] = a.f1 ? mean_std_json(*a.f1) : json(nullptr);
    j["f1_macro"] = mean_std_json(a.f1_macro);
    j["f1_weighted"] = mean_std_json(a.f1_weighted);
    aj.push_back(std::move(j));
  }
  return {{"fingerprint", fingerprint},
          {"cells", std::move(cj)},
          {"aggregates", std::move(aj)},
          {"warnings", warnings}};
}

RunSummary run_experiment(const ExperimentConfig& config,
                          const RunOptions& options) {
  const TaskSpec& task = config.pipeline.task;
  LabeledRepository repo =
      load_repository(config.repository.path, config.repository.format, task);
  const std::vector<Post> eval =
      load_posts(config.eval.path, config.eval.format, task, true);

  RunSummary summary;
  summary.fingerprint = config.fingerprint();
  summary.run_dir = options.out_root / summary.fingerprint;
  const fs::path cells_dir = summary.run_dir / "cells";
  fs::remove_all(cells_dir);
  fs::create_directories(cells_dir);

  if (config.dedup) {
    auto [clean, report] = dedup_repository(repo, eval, config.dedup_options);
    write_text(summary.run_dir / "dedup.json", report.to_json().dump(2) + "\n");
    if (!report.discarded.empty()) {
      summary.warnings.push_back("dedup removed " +
                                 std::to_string(report.discarded.size()) +
                                 " repository posts");
    }
    repo = std::move(clean);
  }

  std::optional<Lexicon> lexicon;
  if (config.error_lexicon) lexicon = Lexicon::load(*config.error_lexicon);

  auto scorer = make_scorer(config.pipeline.scorer, options.transport);
  std::unique_ptr<EmbeddingProvider> shared_provider;
  if (config.pipeline.provider.kind == EmbeddingKind::kRemote) {
    shared_provider = std::make_unique<RemoteEmbeddingProvider>(
        config.pipeline.provider.remote, options.transport);
  }

  const std::vector<Cell> cells = enumerate_cells(config);
  std::vector<CellResult> results(cells.size());
  parallel_for(cells.size(), config.parallel ? 0u : 1u, [&](std::size_t i) {
    results[i] = run_cell(config, cells[i], repo, eval, *scorer,
                          shared_provider.get(),
                          lexicon ? &*lexicon : nullptr, cells_dir);
  });

  std::string breakdown =
      "cell,fp,fn,fp_with_keyword,fn_with_keyword\n";
  for (auto& r : results) {
    if (r.outcome.skipped) {
      summary.warnings.push_back("cell " + r.outcome.cell.id() +
                                 " skipped: " + *r.outcome.skipped);
    } else {
      breakdown += csv_field(r.outcome.cell.id()) + "," +
                   std::to_string(r.errors.fp) + "," +
                   std::to_string(r.errors.fn) + "," +
                   std::to_string(r.errors.fp_keyword) + "," +
                   std::to_string(r.errors.fn_keyword) + "\n";
    }
    for (auto& w : r.warnings) summary.warnings.push_back(std::move(w));
    summary.cells.push_back(std::move(r.outcome));
  }
  summary.aggregates = aggregate(summary.cells);

  json cfg = config.semantic_json();
  cfg["fingerprint"] = summary.fingerprint;
  write_text(summary.run_dir / "config.json", cfg.dump(2) + "\n");
  write_text(summary.run_dir / "summary.json", summary.to_json().dump(2) + "\n");
  write_text(summary.run_dir / "ksweep.csv", ksweep_csv(summary.aggregates));
  write_text(summary.run_dir / "error_breakdown.csv", breakdown);
  return summary;
}

}  // namespace fsbias
