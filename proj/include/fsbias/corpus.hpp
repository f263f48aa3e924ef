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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsbias/task.hpp"

namespace fsbias {

// One text item. Queries carry no label; repository posts always do.
struct Post {
  std::string id;
  std::string text;
  std::optional<std::string> label;

  friend bool operator==(const Post&, const Post&) = default;
};

// The labeled support set shots are drawn from. Immutable once built, so it
// can be shared freely across threads.
class LabeledRepository {
 public:
  LabeledRepository() = default;

  // Throws DataError if a post is unlabeled, carries a label outside
  // `classes`, has blank text, or repeats an id.
  LabeledRepository(std::string task_name, std::vector<std::string> classes,
                    std::vector<Post> posts);

  static LabeledRepository from_posts(const TaskSpec& task,
                                      std::vector<Post> posts) {
    return LabeledRepository(task.name, task.classes, std::move(posts));
  }

  const std::string& task_name() const { return task_name_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<Post>& posts() const { return posts_; }
  const std::map<std::string, std::size_t>& class_counts() const {
    return class_counts_;
  }
  std::size_t size() const { return posts_.size(); }
  bool empty() const { return posts_.empty(); }
  const Post& operator[](std::size_t i) const { return posts_[i]; }

  // Positions of the posts labeled `label`, in repository order.
  std::vector<std::size_t> members_of(std::string_view label) const;

  // Keeps the posts at `positions` (repository order is preserved).
  LabeledRepository subset(std::vector<std::size_t> positions) const;

 private:
  std::string task_name_;
  std::vector<std::string> classes_;
  std::vector<Post> posts_;
  std::map<std::string, std::size_t> class_counts_;
};

enum class InputFormat { kJsonl, kCsv };

InputFormat parse_input_format(std::string_view name);
// ".csv" selects CSV, anything else JSONL.
InputFormat input_format_for(const std::filesystem::path& path);

// Reads id/text/label records. Labels are optional unless `require_label`;
// any label present must belong to `task`. Errors carry the line number.
std::vector<Post> load_posts(const std::filesystem::path& path,
                             InputFormat format, const TaskSpec& task,
                             bool require_label);

LabeledRepository load_repository(const std::filesystem::path& path,
                                  InputFormat format, const TaskSpec& task);

void write_posts_jsonl(const std::filesystem::path& path,
                       std::span<const Post> posts);
nlohmann::json post_to_json(const Post& post);

// Unit-cost Levenshtein distance over Unicode scalar values.
std::size_t edit_distance(std::string_view a, std::string_view b);
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

// Distance if it is at most `bound`, otherwise nullopt. Banded DP, O(n*bound).
std::optional<std::size_t> edit_distance_within(std::u32string_view a,
                                                std::u32string_view b,
                                                std::size_t bound);

enum class RatioDenominator {
  kSum,      // 2l / (|q| + |x|): fraction of characters changed
  kProduct,  // 2l / (|q| * |x|): literal displayed form
};

RatioDenominator parse_ratio_denominator(std::string_view name);

// Normalized edit ratio. Throws DataError when both strings are empty.
// The product form is +inf when exactly one string is empty and is not
// bounded by 1.
double dedup_ratio(std::string_view q, std::string_view x,
                   RatioDenominator denominator = RatioDenominator::kSum);

struct DedupMatch {
  std::string id;               // repository post
  double min_ratio = 0.0;       // smallest ratio over all eval posts
  std::string matched_eval_id;  // first eval post attaining it
};

struct DedupReport {
  double threshold = 0.1;
  RatioDenominator denominator = RatioDenominator::kSum;
  std::vector<DedupMatch> discarded;  // sorted by id

  std::vector<std::string> discarded_ids() const;
  nlohmann::json to_json() const;
};

struct DedupOptions {
  double threshold = 0.1;
  RatioDenominator denominator = RatioDenominator::kSum;
  unsigned workers = 0;  // 0: hardware concurrency
};

// Drops every repository post whose ratio to ANY eval post is below the
// threshold. Threshold must lie in (0, 1].
std::pair<LabeledRepository, DedupReport> dedup_repository(
    const LabeledRepository& repo, std::span<const Post> eval_posts,
    const DedupOptions& options = {});

// Class-balanced sample of exactly target_size / |C| posts per class,
// seeded; output keeps repository order.
LabeledRepository downsample(const LabeledRepository& repo,
                             std::size_t target_size, std::uint64_t seed);

}  // namespace fsbias
