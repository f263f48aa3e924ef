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
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsbias/corpus.hpp"
#include "fsbias/embed.hpp"
#include "fsbias/lexicon.hpp"
#include "fsbias/lm.hpp"
#include "fsbias/prompt.hpp"
#include "fsbias/select.hpp"
#include "fsbias/task.hpp"

namespace fsbias {

enum class EmbeddingKind { kTfidf, kRemote };

struct ProviderConfig {
  EmbeddingKind kind = EmbeddingKind::kTfidf;
  TokenizerConfig tokenizer;
  RemoteEmbeddingConfig remote;
};

// Builds the provider a pipeline uses: TF-IDF is fitted on `repo`.
std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& config,
                                                 const LabeledRepository& repo);

struct PipelineConfig {
  TaskSpec task;
  SelectionConfig selection;
  PromptAblation ablation;
  ScorerConfig scorer;
  ProviderConfig provider;
  unsigned workers = 1;
  bool skip_failed = false;  // log and skip a failing query instead of aborting
  bool keep_prompts = false;

  void validate() const;
};

struct PredictionRecord {
  std::string query_id;
  std::string query_text;
  std::string predicted;
  ClassScores scores;
  ShotSet shots;
  std::optional<std::string> gold;
  std::optional<std::string> prompt;

  // One predictions.jsonl line (shots are written separately).
  nlohmann::json to_json() const;
};

struct SkippedQuery {
  std::string query_id;
  std::string error;
};

struct PipelineResult {
  std::vector<PredictionRecord> records;  // input order
  std::vector<SkippedQuery> skipped;
  std::vector<std::string> warnings;
};

// For each query: embed, select shots, optionally perturb their labels,
// build the prompt, score and predict. Random strategies and perturbation
// draw from a per-query seed derived from (selection.seed, query id), so
// results do not depend on worker count. k = 0 runs zero-shot without
// touching the repository.
PipelineResult run_pipeline(const PipelineConfig& config,
                            const LabeledRepository& repo,
                            std::span<const Post> queries, Scorer& scorer,
                            EmbeddingProvider* provider = nullptr);

PipelineResult run_pipeline(const PipelineConfig& config,
                            const LabeledRepository& repo,
                            std::span<const Post> queries);

// Positive class iff some lexicon term matches a whole token of the query.
// Throws UsageError for an empty lexicon or a non-binary task.
std::string keyword_baseline(const Lexicon& lexicon, const Post& query,
                             const TaskSpec& task);

struct VoteResult {
  std::string label;
  ClassScores mean_similarity;  // per class, task order
};

// Mean cosine of each class's top k/|C| posts; the highest mean wins, ties
// to the first class in task order.
VoteResult tfidf_vote_baseline(const LabeledRepository& repo,
                               std::span<const double> similarities,
                               std::size_t k, const TaskSpec& task);

struct QueryOverlap {
  std::string query_id;
  std::vector<std::string> terms;
  std::size_t same_label = 0;
  std::size_t opposite_label = 0;
  std::optional<double> ratio;  // same / opposite when opposite > 0
  std::vector<std::string> flags;
  bool included = false;
};

struct OverlapReport {
  std::vector<QueryOverlap> per_query;
  std::size_t included = 0;
  double mean_same = 0.0;
  double mean_opposite = 0.0;
  std::optional<double> mean_ratio;
  std::string term_extraction;

  nlohmann::json to_json() const;
};

// Lowercased word tokens of length >= 2, minus English stopwords and pure
// numbers.
std::vector<std::string> content_terms(std::string_view text);
const std::set<std::string, std::less<>>& english_stopwords();

// Counts, per query, how often its content terms occur in shots whose true
// label matches the query's gold label versus the opposite label.
// Binary tasks only; zero-shot records are rejected with DataError.
OverlapReport shot_term_overlap_report(std::span<const PredictionRecord> records,
                                       const TaskSpec& task);

}  // namespace fsbias
