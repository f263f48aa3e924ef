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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsbias/corpus.hpp"
#include "fsbias/task.hpp"

namespace fsbias {

struct PredictionRecord;

struct ScoredLabel {
  double score = 0.0;
  bool positive = false;
};

// Mann-Whitney AUC: the fraction of (positive, negative) pairs ranked
// correctly, ties counting one half. Computed from mid-ranks in
// O(n log n). Throws DataError unless both classes are present.
double roc_auc_binary(std::span<const ScoredLabel> scored);

// One-vs-rest AUC per class present in `gold` (ranking by that class's
// score column), averaged with gold-support weights. scores[i][c] is sample
// i's score for classes[c]. Throws DataError when fewer than two classes
// occur in `gold`.
double roc_auc_weighted_ovr(const std::vector<std::vector<double>>& scores,
                            std::span<const std::string> gold,
                            std::span<const std::string> classes);

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct F1Report {
  std::optional<double> f1_binary_pos;  // binary tasks: F1 of classes[0]
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
};

// Precision, recall and F1 use 0 for 0/0. Macro averages over every listed
// class; weighted uses gold support. Throws DataError on length mismatch,
// empty input, or labels outside `classes`.
F1Report f1_scores(std::span<const std::string> predicted,
                   std::span<const std::string> gold,
                   std::span<const std::string> classes, bool binary);

// Fraction of posts per class, in class order. Throws DataError if empty.
std::vector<std::pair<std::string, double>> class_balance_report(
    std::span<const Post> posts, std::span<const std::string> classes);

struct MetricsReport {
  std::string task;
  std::size_t n = 0;
  std::optional<double> auc;
  std::optional<double> f1_binary_pos;
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<ClassMetrics> per_class;
  std::vector<std::string> classes;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

// AUC ranks binary tasks by the positive-class score and multiclass tasks by
// support-weighted one-vs-rest; it is left empty when undefined.
MetricsReport compute_metrics(const TaskSpec& task,
                              std::span<const std::string> predicted,
                              std::span<const std::string> gold,
                              const std::vector<std::vector<double>>& scores);

// Metrics over the records that carry a gold label.
MetricsReport evaluate(std::span<const PredictionRecord> records,
                       const TaskSpec& task);

// Fixed-width table with one row per (name, report): n, AUC, F1 (positive
// class, or weighted for multiclass), F1m, F1w, all as percentages.
std::string render_metrics_table(
    std::span<const std::pair<std::string, MetricsReport>> rows);

}  // namespace fsbias
