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

#include "fsbias/classify.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "fsbias/error.hpp"
#include "fsbias/parallel.hpp"
#include "fsbias/random.hpp"
#include "fsbias/text.hpp"

namespace fsbias {
namespace {

using nlohmann::json;

constexpr std::string_view kTermExtraction =
    "lowercased word tokens (length >= 2) minus English stopwords and "
    "numbers; no lemmatization or part-of-speech filtering";

bool is_number(std::string_view token) {
  return std::all_of(token.begin(), token.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& config,
                                                 const LabeledRepository& repo) {
  if (config.kind == EmbeddingKind::kRemote) {
    return std::make_unique<RemoteEmbeddingProvider>(config.remote);
  }
  return TfidfProvider::fit(repo, config.tokenizer);
}

void PipelineConfig::validate() const {
  task.validate();
  selection.validate(task);
  ablation.validate();
  scorer.validate();
}

nlohmann::json PredictionRecord::to_json() const {
  json j = {{"query_id", query_id},
            {"text", query_text},
            {"predicted", predicted},
            {"scores", scores.to_json()}};
  j["gold"] = gold ? json(*gold) : json(nullptr);
  if (prompt) j["prompt"] = *prompt;
  return j;
}

PipelineResult run_pipeline(const PipelineConfig& config,
                            const LabeledRepository& repo,
                            std::span<const Post> queries, Scorer& scorer,
                            EmbeddingProvider* provider) {
  config.validate();
  const TaskSpec& task = config.task;
  const SelectionConfig& sel = config.selection;
  const bool few_shot = sel.k > 0;
  const bool needs_similarity = few_shot && uses_similarity(sel.strategy);

  PipelineResult result;
  if (few_shot) {
    std::unordered_set<std::string_view> repo_texts;
    for (const auto& p : repo.posts()) repo_texts.insert(p.text);
    std::size_t overlap = 0;
    for (const auto& q : queries) overlap += repo_texts.count(q.text);
    if (overlap > 0) {
      result.warnings.push_back(
          std::to_string(overlap) +
          " queries have exact copies in the repository; run dedup first");
    }
  }

  std::unique_ptr<EmbeddingProvider> owned;
  EmbeddingIndex index;
  std::vector<Embedding> query_vecs;
  if (needs_similarity) {
    if (provider == nullptr) {
      owned = make_provider(config.provider, repo);
      provider = owned.get();
    }
    index = embed_repository(*provider, repo);
    std::vector<std::string> texts;
    texts.reserve(queries.size());
    for (const auto& q : queries) texts.push_back(q.text);
    query_vecs = provider->embed(texts);
  }

  std::vector<std::optional<PredictionRecord>> slots(queries.size());
  std::vector<std::optional<std::string>> errors(queries.size());
  parallel_for(queries.size(), config.workers, [&](std::size_t i) {
    const Post& query = queries[i];
    try {
      ShotSet shots;
      shots.query_id = query.id;
      shots.strategy = sel.strategy;
      if (few_shot) {
        std::vector<double> sims;
        if (needs_similarity) sims = index.similarities(query_vecs[i]);
        const auto seed = derive_seed(sel.seed, query.id);
        shots = select_shots(sel, repo, sims, query.id, seed);
        shots = perturb_labels(std::move(shots), sel.perturbation,
                               derive_seed(sel.seed, "perturb:" + query.id),
                               task);
      }
      Prompt prompt = build_few_shot(task, shots, query, config.ablation);
      PredictionRecord rec;
      rec.query_id = query.id;
      rec.query_text = query.text;
      rec.scores = scorer.score(prompt);
      rec.predicted = predict(rec.scores, task);
      rec.shots = std::move(shots);
      rec.gold = query.label;
      if (config.keep_prompts) rec.prompt = std::move(prompt.text);
      slots[i] = std::move(rec);
    } catch (const Error& e) {
      if (!config.skip_failed) throw;
      errors[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (slots[i]) {
      result.records.push_back(std::move(*slots[i]));
    } else if (errors[i]) {
      result.skipped.push_back({queries[i].id, std::move(*errors[i])});
    }
  }
  return result;
}

PipelineResult run_pipeline(const PipelineConfig& config,
                            const LabeledRepository& repo,
                            std::span<const Post> queries) {
  auto scorer = make_scorer(config.scorer);
  return run_pipeline(config, repo, queries, *scorer);
}

std::string keyword_baseline(const Lexicon& lexicon, const Post& query,
                             const TaskSpec& task) {
  if (lexicon.empty()) throw UsageError("keyword baseline needs a lexicon");
  if (!task.is_binary()) {
    throw UsageError("keyword baseline is only defined for binary tasks");
  }
  return lexicon.matches(query.text) ? task.classes[0] : task.classes[1];
}

VoteResult tfidf_vote_baseline(const LabeledRepository& repo,
                               std::span<const double> similarities,
                               std::size_t k, const TaskSpec& task) {
  const ShotSet shots = select_similarity_balanced(
      repo, similarities, k, {}, ShotOrder::kInterleavedDescending);
  std::map<std::string, double> sums;
  std::map<std::string, std::size_t> counts;
  for (const auto& s : shots.shots) {
    sums[s.true_label] += *s.similarity;
    ++counts[s.true_label];
  }
  VoteResult out;
  for (const auto& c : task.classes) {
    const double mean =
        counts[c] > 0 ? sums[c] / static_cast<double>(counts[c]) : 0.0;
    out.mean_similarity.per_class.push_back({c, mean});
  }
  out.label = predict(out.mean_similarity, task);
  return out;
}

const std::set<std::string, std::less<>>& english_stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a", "about", "above", "after", "again", "against", "all", "also", "am",
      "an", "and", "any", "are", "aren", "as", "at", "be", "because", "been",
      "before", "being", "below", "between", "both", "but", "by", "can",
      "cannot", "could", "couldn", "did", "didn", "do", "does", "doesn",
      "doing", "don", "down", "during", "each", "either", "else", "etc",
      "even", "ever", "every", "few", "for", "from", "further", "get", "gets",
      "got", "had", "hadn", "has", "hasn", "have", "haven", "having", "he",
      "her", "here", "hers", "herself", "him", "himself", "his", "how",
      "however", "i", "if", "in", "into", "is", "isn", "it", "its", "itself",
      "just", "ll", "may", "me", "might", "more", "most", "much", "must",
      "my", "myself", "neither", "no", "nor", "not", "now", "of", "off", "on",
      "once", "only", "or", "other", "ought", "our", "ours", "ourselves",
      "out", "over", "own", "re", "same", "shall", "she", "should",
      "shouldn", "so", "some", "such", "than", "that", "the", "their",
      "theirs", "them", "themselves", "then", "there", "these", "they",
      "this", "those", "through", "to", "too", "under", "until", "up", "us",
      "ve", "very", "was", "wasn", "we", "were", "weren", "what", "when",
      "where", "whether", "which", "while", "who", "whom", "whose", "why",
      "will", "with", "won", "would", "wouldn", "yet", "you", "your",
      "yours", "yourself", "yourselves"};
  return words;
}

std::vector<std::string> content_terms(std::string_view text) {
  std::vector<std::string> out;
  const auto& stop = english_stopwords();
  for (auto& t : text::word_tokens(text, true, 2)) {
    if (stop.contains(t) || is_number(t)) continue;
    if (std::find(out.begin(), out.end(), t) == out.end()) {
      out.push_back(std::move(t));
    }
  }
  return out;
}

nlohmann::json OverlapReport::to_json() const {
  json rows = json::array();
  for (const auto& q : per_query) {
    json row = {{"query_id", q.query_id},
                {"terms", q.terms},
                {"same_label", q.same_label},
                {"opposite_label", q.opposite_label},
                {"included", q.included},
                {"flags", q.flags}};
    row["ratio"] = q.ratio ? json(*q.ratio) : json(nullptr);
    rows.push_back(std::move(row));
  }
  json j = {{"term_extraction", term_extraction},
            {"included", included},
            {"mean_same", mean_same},
            {"mean_opposite", mean_opposite},
            {"per_query", std::move(rows)}};
  j["mean_ratio"] = mean_ratio ? json(*mean_ratio) : json(nullptr);
  return j;
}

OverlapReport shot_term_overlap_report(std::span<const PredictionRecord> records,
                                       const TaskSpec& task) {
  if (!task.is_binary()) {
    throw UsageError("term overlap report is only defined for binary tasks");
  }
  OverlapReport report;
  report.term_extraction = std::string(kTermExtraction);
  double same_total = 0.0;
  double opposite_total = 0.0;
  double ratio_total = 0.0;
  std::size_t ratio_count = 0;
  for (const auto& rec : records) {
    if (rec.shots.shots.empty()) {
      throw DataError("record '" + rec.query_id +
                      "' is zero-shot; term overlap needs shots");
    }
    QueryOverlap q;
    q.query_id = rec.query_id;
    q.terms = content_terms(rec.query_text);
    if (!rec.gold) q.flags.emplace_back("no_gold_label");
    if (q.terms.empty()) q.flags.emplace_back("no_content_terms");
    const std::set<std::string, std::less<>> terms(q.terms.begin(),
                                                   q.terms.end());
    for (const auto& shot : rec.shots.shots) {
      std::size_t hits = 0;
      for (const auto& t : text::word_tokens(shot.post.text, true, 2)) {
        hits += terms.count(t);
      }
      if (rec.gold && shot.true_label == *rec.gold) {
        q.same_label += hits;
      } else if (rec.gold) {
        q.opposite_label += hits;
      }
    }
    q.included = q.flags.empty();
    if (q.included) {
      ++report.included;
      same_total += static_cast<double>(q.same_label);
      opposite_total += static_cast<double>(q.opposite_label);
      if (q.opposite_label > 0) {
        q.ratio = static_cast<double>(q.same_label) /
                  static_cast<double>(q.opposite_label);
        ratio_total += *q.ratio;
        ++ratio_count;
      } else {
        q.flags.emplace_back("no_opposite_overlap");
      }
    }
    report.per_query.push_back(std::move(q));
  }
  if (report.included > 0) {
    report.mean_same = same_total / static_cast<double>(report.included);
    report.mean_opposite =
        opposite_total / static_cast<double>(report.included);
  }
  if (ratio_count > 0) {
    report.mean_ratio = ratio_total / static_cast<double>(ratio_count);
  }
  return report;
}

}  // namespace fsbias
