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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fsbias {

enum class TaskKind { kBinary, kMulticlass };

// A classification task: the bias definition shown after "Question:", the
// ordered class labels, and the answer string scored for each class.
// For binary tasks classes[0] is the positive class.
struct TaskSpec {
  std::string name;
  std::string definition;
  std::vector<std::string> classes;
  std::map<std::string, std::string> answer_tokens;
  TaskKind kind = TaskKind::kBinary;

  // Throws DataError unless classes and answer tokens are bijective, tokens
  // are distinct and binary tasks have exactly two classes.
  void validate() const;

  bool is_binary() const { return kind == TaskKind::kBinary; }
  bool has_class(std::string_view label) const;
  std::size_t class_index(std::string_view label) const;
  const std::string& answer_token(std::string_view label) const;
  const std::string& positive_class() const;
  // The other label of a binary task.
  const std::string& complement(std::string_view label) const;
};

std::vector<std::string> builtin_task_names();
// Case-insensitive lookup in the built-in catalog. Throws UsageError.
TaskSpec builtin_task(std::string_view name);

TaskSpec task_from_json(const nlohmann::json& j);
nlohmann::json task_to_json(const TaskSpec& task);
TaskSpec load_task_spec(const std::filesystem::path& path);

// A built-in task name, or else a path to a task JSON file.
TaskSpec resolve_task(std::string_view name_or_path);

}  // namespace fsbias
