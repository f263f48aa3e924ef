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

#include <string>
#include <vector>

#include "fsbias/corpus.hpp"
#include "fsbias/select.hpp"
#include "fsbias/task.hpp"

namespace fsbias {

// Which semantic components reach the model. A dropped component keeps its
// structural tag with empty content.
struct PromptAblation {
  bool include_shot_text = true;
  bool include_definition = true;
  bool include_query = true;
  bool include_shot_labels = true;

  // Throws UsageError if every component is dropped.
  void validate() const;
  // "full", or the dropped components joined by '-', e.g. "no_def-no_query".
  std::string name() const;

  friend bool operator==(const PromptAblation&, const PromptAblation&) = default;
};

struct Prompt {
  std::string text;                            // ends with "Answer:"
  std::vector<std::string> answer_candidates;  // aligned with class_labels
  std::vector<std::string> class_labels;
};

inline constexpr std::string_view kPostTag = "Post:";
inline constexpr std::string_view kQuestionTag = "Question:";
inline constexpr std::string_view kAnswerTag = "Answer:";

// "Post: {Q}\nQuestion: {d}\nAnswer:". Throws UsageError for a blank query.
Prompt build_zero_shot(const TaskSpec& task, const Post& query);

// One "Post: x\nQuestion: d\nAnswer: c\n\n" block per shot, then the
// zero-shot block for the query. With no shots and no ablation this equals
// build_zero_shot byte for byte. Throws DataError when a presented label is
// not a task class.
Prompt build_few_shot(const TaskSpec& task, const ShotSet& shots,
                      const Post& query, const PromptAblation& ablation = {});

}  // namespace fsbias
