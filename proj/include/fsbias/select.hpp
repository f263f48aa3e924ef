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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsbias/corpus.hpp"
#include "fsbias/embed.hpp"
#include "fsbias/task.hpp"

namespace fsbias {

enum class Strategy {
  kRandom,              // label-agnostic uniform sample
  kRandomBalanced,      // uniform, k/|C| per class
  kSimilarityBalanced,  // top k/|C| by cosine per class
  kStratifiedBalanced,  // class-balanced draws bin by bin over cosine
};

enum class Perturbation { kNone, kFlip, kRandomHalf };

// Order of shots inside the prompt for similarity strategies.
enum class ShotOrder {
  // Rank rounds from least to most similar; within a round classes go by
  // ascending similarity, so the closest exemplar sits next to the query.
  kInterleavedAscending,
  // Rank rounds from most to least similar, classes in task order.
  kInterleavedDescending,
};

std::string_view to_string(Strategy s);
std::string_view to_string(Perturbation p);
std::string_view to_string(ShotOrder o);
Strategy parse_strategy(std::string_view name);
Perturbation parse_perturbation(std::string_view name);
ShotOrder parse_shot_order(std::string_view name);

bool is_balanced(Strategy s);
bool uses_similarity(Strategy s);

struct SelectionConfig {
  std::size_t k = 32;
  Strategy strategy = Strategy::kSimilarityBalanced;
  std::uint64_t seed = 0;
  Perturbation perturbation = Perturbation::kNone;
  ShotOrder order = ShotOrder::kInterleavedAscending;

  // Throws UsageError if a balanced strategy gets k not divisible by |C| or
  // a perturbation is requested for a non-binary task.
  void validate(const TaskSpec& task) const;
};

struct Shot {
  Post post;
  std::string true_label;
  std::string presented_label;
  std::optional<double> similarity;
};

struct ShotSet {
  std::string query_id;
  Strategy strategy = Strategy::kRandom;
  std::uint64_t seed = 0;
  std::vector<Shot> shots;

  std::size_t size() const { return shots.size(); }
  nlohmann::json to_json() const;
};

ShotSet select_random(const LabeledRepository& repo, std::size_t k,
                      std::uint64_t seed, std::string query_id = {});

ShotSet select_random_balanced(const LabeledRepository& repo, std::size_t k,
                               std::uint64_t seed, std::string query_id = {});

// `similarities[i]` is the query's cosine to repo[i]. Ties go to the lower
// post id.
ShotSet select_similarity_balanced(
    const LabeledRepository& repo, std::span<const double> similarities,
    std::size_t k, std::string query_id = {},
    ShotOrder order = ShotOrder::kInterleavedAscending);

ShotSet select_similarity_balanced(
    const LabeledRepository& repo, const EmbeddingIndex& index,
    const Embedding& query, std::size_t k, std::string query_id = {},
    ShotOrder order = ShotOrder::kInterleavedAscending);

// Bins all similarities (numpy "auto" rule: the narrower of the Sturges and
// Freedman-Diaconis widths), then walks bins from the most similar down,
// taking in each the largest class-balanced group still needed.
// Throws DataError if the bins cannot supply k balanced shots.
ShotSet select_stratified_balanced(
    const LabeledRepository& repo, std::span<const double> similarities,
    std::size_t k, std::string query_id = {},
    ShotOrder order = ShotOrder::kInterleavedAscending);

ShotSet select_stratified_balanced(
    const LabeledRepository& repo, const EmbeddingIndex& index,
    const Embedding& query, std::size_t k, std::string query_id = {},
    ShotOrder order = ShotOrder::kInterleavedAscending);

// Dispatches on config.strategy. `similarities` is required for the
// similarity strategies and ignored otherwise. Applies no perturbation.
ShotSet select_shots(const SelectionConfig& config,
                     const LabeledRepository& repo,
                     std::span<const double> similarities,
                     std::string query_id, std::uint64_t seed);

// flip: every presented label inverted. random_half: floor(k/2) shots chosen
// uniformly (seeded) are inverted. Binary tasks only.
ShotSet perturb_labels(ShotSet shots, Perturbation mode, std::uint64_t seed,
                       const TaskSpec& task);

// Histogram bin edges following numpy's "auto" estimator.
std::size_t auto_bin_count(std::span<const double> values);
std::vector<double> histogram_bin_edges(std::span<const double> values);
// Bin of `value` for ascending `edges` (last bin closed on the right).
std::size_t histogram_bin(std::span<const double> edges, double value);

// Linear-interpolation percentile, q in [0, 100].
double percentile(std::span<const double> values, double q);

}  // namespace fsbias
