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

#include "fsbias/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fsbias/error.hpp"
#include "fsbias/random.hpp"
#include "fsbias/text.hpp"

namespace fsbias {
namespace {

Shot make_shot(const Post& post, std::optional<double> similarity) {
  return Shot{post, *post.label, *post.label, similarity};
}

std::size_t per_class_quota(const LabeledRepository& repo, std::size_t k) {
  const std::size_t n_classes = repo.classes().size();
  if (k == 0) throw UsageError("k must be positive for shot selection");
  if (n_classes == 0 || k % n_classes != 0) {
    throw UsageError("k=" + std::to_string(k) +
                     " is not divisible by the number of classes (" +
                     std::to_string(n_classes) + ")");
  }
  const std::size_t quota = k / n_classes;
  for (const auto& label : repo.classes()) {
    const std::size_t have = repo.class_counts().at(label);
    if (have < quota) {
      throw DataError("class '" + label + "' has " + std::to_string(have) +
                      " posts, " + std::to_string(quota) + " needed");
    }
  }
  return quota;
}

void check_similarities(const LabeledRepository& repo,
                        std::span<const double> similarities) {
  if (similarities.size() != repo.size()) {
    throw UsageError("got " + std::to_string(similarities.size()) +
                     " similarities for a repository of " +
                     std::to_string(repo.size()));
  }
}

// Orders candidate positions by similarity descending, then post id.
auto by_similarity(const LabeledRepository& repo,
                   std::span<const double> similarities) {
  return [&repo, similarities](std::size_t a, std::size_t b) {
    if (similarities[a] != similarities[b]) {
      return similarities[a] > similarities[b];
    }
    return repo[a].id < repo[b].id;
  };
}

// `chosen[c]` holds class c's picks, most similar first.
ShotSet arrange(const LabeledRepository& repo,
                std::span<const double> similarities,
                const std::vector<std::vector<std::size_t>>& chosen,
                std::size_t quota, ShotOrder order, Strategy strategy,
                std::string query_id) {
  ShotSet set{std::move(query_id), strategy, 0, {}};
  std::vector<std::size_t> classes(chosen.size());
  for (std::size_t r = 0; r < quota; ++r) {
    const std::size_t rank =
        order == ShotOrder::kInterleavedAscending ? quota - 1 - r : r;
    std::iota(classes.begin(), classes.end(), std::size_t{0});
    if (order == ShotOrder::kInterleavedAscending) {
      std::stable_sort(classes.begin(), classes.end(),
                       [&](std::size_t a, std::size_t b) {
                         return similarities[chosen[a][rank]] <
                                similarities[chosen[b][rank]];
                       });
    }
    for (std::size_t c : classes) {
      const std::size_t pos = chosen[c][rank];
      set.shots.push_back(make_shot(repo[pos], similarities[pos]));
    }
  }
  return set;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRandom:
      return "random";
    case Strategy::kRandomBalanced:
      return "random_balanced";
    case Strategy::kSimilarityBalanced:
      return "similarity_balanced";
    case Strategy::kStratifiedBalanced:
      return "stratified_balanced";
  }
  return "?";
}

std::string_view to_string(Perturbation p) {
  switch (p) {
    case Perturbation::kNone:
      return "none";
    case Perturbation::kFlip:
      return "flip";
    case Perturbation::kRandomHalf:
      return "random_half";
  }
  return "?";
}

std::string_view to_string(ShotOrder o) {
  return o == ShotOrder::kInterleavedAscending ? "interleaved_ascending"
                                               : "interleaved_descending";
}

Strategy parse_strategy(std::string_view name) {
  const std::string n = text::to_lower(name);
  if (n == "random" || n == "rnd") return Strategy::kRandom;
  if (n == "random_balanced" || n == "rnd-50" || n == "rnd50") {
    return Strategy::kRandomBalanced;
  }
  if (n == "similarity_balanced" || n == "similarity") {
    return Strategy::kSimilarityBalanced;
  }
  if (n == "stratified_balanced" || n == "stratified") {
    return Strategy::kStratifiedBalanced;
  }
  throw UsageError("unknown selection strategy '" + std::string(name) + "'");
}

Perturbation parse_perturbation(std::string_view name) {
  const std::string n = text::to_lower(name);
  if (n == "none" || n == "correct") return Perturbation::kNone;
  if (n == "flip") return Perturbation::kFlip;
  if (n == "random_half" || n == "random") return Perturbation::kRandomHalf;
  throw UsageError("unknown perturbation '" + std::string(name) + "'");
}

ShotOrder parse_shot_order(std::string_view name) {
  const std::string n = text::to_lower(name);
  if (n == "interleaved_ascending") return ShotOrder::kInterleavedAscending;
  if (n == "interleaved_descending") return ShotOrder::kInterleavedDescending;
  throw UsageError("unknown shot order '" + std::string(name) + "'");
}

bool is_balanced(Strategy s) { return s != Strategy::kRandom; }

bool uses_similarity(Strategy s) {
  return s == Strategy::kSimilarityBalanced ||
         s == Strategy::kStratifiedBalanced;
}

void SelectionConfig::validate(const TaskSpec& task) const {
  if (k > 0 && is_balanced(strategy) && k % task.classes.size() != 0) {
    throw UsageError("k=" + std::to_string(k) + " is not divisible by the " +
                     std::to_string(task.classes.size()) + " classes of '" +
                     task.name + "'");
  }
  if (perturbation != Perturbation::kNone && !task.is_binary()) {
    throw UsageError("label perturbation is only defined for binary tasks");
  }
}

nlohmann::json ShotSet::to_json() const {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& s : shots) {
    nlohmann::json item = {{"id", s.post.id},
                           {"true_label", s.true_label},
                           {"presented_label", s.presented_label}};
    item["similarity"] = s.similarity ? nlohmann::json(*s.similarity)
                                      : nlohmann::json(nullptr);
    items.push_back(std::move(item));
  }
  return {{"query_id", query_id},
          {"strategy", to_string(strategy)},
          {"seed", seed},
          {"shots", std::move(items)}};
}

ShotSet select_random(const LabeledRepository& repo, std::size_t k,
                      std::uint64_t seed, std::string query_id) {
  if (k == 0) throw UsageError("k must be positive for shot selection");
  if (k > repo.size()) {
    throw DataError("cannot draw " + std::to_string(k) +
                    " shots from a repository of " +
                    std::to_string(repo.size()));
  }
  Rng rng(seed);
  ShotSet set{std::move(query_id), Strategy::kRandom, seed, {}};
  for (std::size_t pos : rng.sample_indices(repo.size(), k)) {
    set.shots.push_back(make_shot(repo[pos], std::nullopt));
  }
  return set;
}

ShotSet select_random_balanced(const LabeledRepository& repo, std::size_t k,
                               std::uint64_t seed, std::string query_id) {
  const std::size_t quota = per_class_quota(repo, k);
  Rng rng(seed);
  std::vector<std::size_t> picked;
  for (const auto& label : repo.classes()) {
    const auto members = repo.members_of(label);
    for (std::size_t i : rng.sample_indices(members.size(), quota)) {
      picked.push_back(members[i]);
    }
  }
  rng.shuffle(std::span<std::size_t>(picked));
  ShotSet set{std::move(query_id), Strategy::kRandomBalanced, seed, {}};
  for (std::size_t pos : picked) {
    set.shots.push_back(make_shot(repo[pos], std::nullopt));
  }
  return set;
}

ShotSet select_similarity_balanced(const LabeledRepository& repo,
                                   std::span<const double> similarities,
                                   std::size_t k, std::string query_id,
                                   ShotOrder order) {
  check_similarities(repo, similarities);
  const std::size_t quota = per_class_quota(repo, k);
  const auto less = by_similarity(repo, similarities);
  std::vector<std::vector<std::size_t>> chosen;
  for (const auto& label : repo.classes()) {
    auto members = repo.members_of(label);
    std::partial_sort(members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(quota),
                      members.end(), less);
    members.resize(quota);
    chosen.push_back(std::move(members));
  }
  return arrange(repo, similarities, chosen, quota, order,
                 Strategy::kSimilarityBalanced, std::move(query_id));
}

ShotSet select_similarity_balanced(const LabeledRepository& repo,
                                   const EmbeddingIndex& index,
                                   const Embedding& query, std::size_t k,
                                   std::string query_id, ShotOrder order) {
  const auto sims = index.similarities(query);
  return select_similarity_balanced(repo, sims, k, std::move(query_id), order);
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

std::size_t auto_bin_count(std::span<const double> values) {
  if (values.empty()) throw DataError("cannot bin an empty sample");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double range = *hi_it - *lo_it;
  if (range == 0.0) return 1;
  const double n = static_cast<double>(values.size());
  const double sturges_width = range / (std::log2(n) + 1.0);
  const double iqr = percentile(values, 75.0) - percentile(values, 25.0);
  const double fd_width = 2.0 * iqr * std::pow(n, -1.0 / 3.0);
  const double width =
      fd_width > 0.0 ? std::min(fd_width, sturges_width) : sturges_width;
  if (!(width > 0.0)) return 1;
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(range / width)));
}

std::vector<double> histogram_bin_edges(std::span<const double> values) {
  const std::size_t bins = auto_bin_count(values);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double first = *lo_it;
  double last = *hi_it;
  if (first == last) {
    first -= 0.5;
    last += 0.5;
  }
  std::vector<double> edges(bins + 1);
  const double step = (last - first) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = first + static_cast<double>(i) * step;
  }
  edges.back() = last;
  return edges;
}

std::size_t histogram_bin(std::span<const double> edges, double value) {
  const std::size_t bins = edges.size() - 1;
  const double first = edges.front();
  const double last = edges.back();
  const double scaled =
      (value - first) * (static_cast<double>(bins) / (last - first));
  auto idx = static_cast<std::ptrdiff_t>(std::floor(std::max(scaled, 0.0)));
  idx = std::min<std::ptrdiff_t>(idx, static_cast<std::ptrdiff_t>(bins) - 1);
  // Same edge corrections as numpy.histogram.
  if (value < edges[static_cast<std::size_t>(idx)] && idx > 0) --idx;
  if (static_cast<std::size_t>(idx) + 1 < bins &&
      value >= edges[static_cast<std::size_t>(idx) + 1]) {
    ++idx;
  }
  return static_cast<std::size_t>(idx);
}

ShotSet select_stratified_balanced(const LabeledRepository& repo,
                                   std::span<const double> similarities,
                                   std::size_t k, std::string query_id,
                                   ShotOrder order) {
  check_similarities(repo, similarities);
  const std::size_t quota = per_class_quota(repo, k);
  const std::size_t n_classes = repo.classes().size();

  const auto edges = histogram_bin_edges(similarities);
  const std::size_t bins = edges.size() - 1;
  // members[bin][class] -> positions, most similar first.
  std::vector<std::vector<std::vector<std::size_t>>> members(
      bins, std::vector<std::vector<std::size_t>>(n_classes));
  std::map<std::string, std::size_t> class_pos;
  for (std::size_t c = 0; c < n_classes; ++c) class_pos[repo.classes()[c]] = c;
  for (std::size_t i = 0; i < repo.size(); ++i) {
    members[histogram_bin(edges, similarities[i])][class_pos.at(*repo[i].label)]
        .push_back(i);
  }
  const auto less = by_similarity(repo, similarities);

  std::vector<std::vector<std::size_t>> chosen(n_classes);
  std::size_t taken = 0;
  for (std::size_t b = bins; b-- > 0 && taken < quota;) {
    std::size_t take = quota - taken;
    for (const auto& group : members[b]) take = std::min(take, group.size());
    if (take == 0) continue;
    for (std::size_t c = 0; c < n_classes; ++c) {
      auto& group = members[b][c];
      std::partial_sort(group.begin(),
                        group.begin() + static_cast<std::ptrdiff_t>(take),
                        group.end(), less);
      chosen[c].insert(chosen[c].end(), group.begin(),
                       group.begin() + static_cast<std::ptrdiff_t>(take));
    }
    taken += take;
  }
  if (taken < quota) {
    throw DataError("stratified selection found only " +
                    std::to_string(taken) + " of " + std::to_string(quota) +
                    " balanced shots per class");
  }
  return arrange(repo, similarities, chosen, quota, order,
                 Strategy::kStratifiedBalanced, std::move(query_id));
}

ShotSet select_stratified_balanced(const LabeledRepository& repo,
                                   const EmbeddingIndex& index,
                                   const Embedding& query, std::size_t k,
                                   std::string query_id, ShotOrder order) {
  const auto sims = index.similarities(query);
  return select_stratified_balanced(repo, sims, k, std::move(query_id), order);
}

ShotSet select_shots(const SelectionConfig& config,
                     const LabeledRepository& repo,
                     std::span<const double> similarities,
                     std::string query_id, std::uint64_t seed) {
  ShotSet set;
  switch (config.strategy) {
    case Strategy::kRandom:
      set = select_random(repo, config.k, seed, std::move(query_id));
      break;
    case Strategy::kRandomBalanced:
      set = select_random_balanced(repo, config.k, seed, std::move(query_id));
      break;
    case Strategy::kSimilarityBalanced:
      set = select_similarity_balanced(repo, similarities, config.k,
                                       std::move(query_id), config.order);
      break;
    case Strategy::kStratifiedBalanced:
      set = select_stratified_balanced(repo, similarities, config.k,
                                       std::move(query_id), config.order);
      break;
  }
  set.seed = seed;
  return set;
}

ShotSet perturb_labels(ShotSet shots, Perturbation mode, std::uint64_t seed,
                       const TaskSpec& task) {
  if (mode == Perturbation::kNone) return shots;
  if (!task.is_binary()) {
    throw UsageError("label perturbation is only defined for binary tasks");
  }
  if (mode == Perturbation::kFlip) {
    for (auto& s : shots.shots) {
      s.presented_label = task.complement(s.presented_label);
    }
    return shots;
  }
  Rng rng(seed);
  const std::size_t n = shots.shots.size();
  for (std::size_t i : rng.sample_indices(n, n / 2)) {
    auto& s = shots.shots[i];
    s.presented_label = task.complement(s.presented_label);
  }
  return shots;
}

}  // namespace fsbias
