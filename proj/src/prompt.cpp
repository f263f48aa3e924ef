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

#include "fsbias/prompt.hpp"

#include "fsbias/error.hpp"
#include "fsbias/text.hpp"

namespace fsbias {
namespace {

void append_line(std::string& out, std::string_view tag,
                 std::string_view content) {
  out += tag;
  if (!content.empty()) {
    out += ' ';
    out += content;
  }
}

Prompt finish(const TaskSpec& task, std::string text) {
  Prompt p;
  p.text = std::move(text);
  p.class_labels = task.classes;
  for (const auto& c : task.classes) {
    p.answer_candidates.push_back(task.answer_token(c));
  }
  return p;
}

}  // namespace

void PromptAblation::validate() const {
  if (!include_shot_text && !include_definition && !include_query &&
      !include_shot_labels) {
    throw UsageError("prompt ablation drops every component");
  }
}

std::string PromptAblation::name() const {
  std::string out;
  auto add = [&out](bool kept, std::string_view tag) {
    if (kept) return;
    if (!out.empty()) out += '-';
    out += tag;
  };
  add(include_shot_text, "no_shot_text");
  add(include_definition, "no_def");
  add(include_query, "no_query");
  add(include_shot_labels, "no_labels");
  return out.empty() ? "full" : out;
}

Prompt build_zero_shot(const TaskSpec& task, const Post& query) {
  return build_few_shot(task, ShotSet{}, query, PromptAblation{});
}

Prompt build_few_shot(const TaskSpec& task, const ShotSet& shots,
                      const Post& query, const PromptAblation& ablation) {
  ablation.validate();
  if (text::is_blank(query.text)) {
    throw UsageError("query '" + query.id + "' has blank text");
  }
  const std::string_view definition =
      ablation.include_definition ? std::string_view(task.definition)
                                  : std::string_view();
  std::string out;
  for (const auto& shot : shots.shots) {
    if (!task.has_class(shot.presented_label)) {
      throw DataError("shot '" + shot.post.id + "' presents label '" +
                      shot.presented_label + "' outside task '" + task.name +
                      "'");
    }
    append_line(out, kPostTag,
                ablation.include_shot_text ? std::string_view(shot.post.text)
                                           : std::string_view());
    out += '\n';
    append_line(out, kQuestionTag, definition);
    out += '\n';
    append_line(out, kAnswerTag,
                ablation.include_shot_labels
                    ? std::string_view(task.answer_token(shot.presented_label))
                    : std::string_view());
    out += "\n\n";
  }
  append_line(out, kPostTag,
              ablation.include_query ? std::string_view(query.text)
                                     : std::string_view());
  out += '\n';
  append_line(out, kQuestionTag, definition);
  out += '\n';
  out += kAnswerTag;
  return finish(task, std::move(out));
}

}  // namespace fsbias
