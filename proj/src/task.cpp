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

#include "fsbias/task.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "fsbias/error.hpp"
#include "fsbias/text.hpp"

namespace fsbias {
namespace {

TaskSpec yes_no(std::string name, std::string definition) {
  return TaskSpec{std::move(name),
                  std::move(definition),
                  {"Yes", "No"},
                  {{"Yes", "Yes"}, {"No", "No"}},
                  TaskKind::kBinary};
}

TaskSpec multiclass(std::string name, std::string definition,
                    std::vector<std::string> classes) {
  TaskSpec t{std::move(name), std::move(definition), std::move(classes), {},
             TaskKind::kMulticlass};
  for (const auto& c : t.classes) t.answer_tokens[c] = c;
  return t;
}

const std::vector<TaskSpec>& catalog() {
  static const std::vector<TaskSpec> tasks = {
      yes_no("offensive", "Does this post contain offensive language?"),
      yes_no("intent", "Does this post contain intentional insults?"),
      yes_no("lewd", "Does this post contain sexual content?"),
      yes_no("group", "Does this post contain offense to a group?"),
      multiclass("who",
                 "Who is referred to/targeted by this post - body, culture, "
                 "disabled, gender, race, social, victim?",
                 {"body", "culture", "disabled", "gender", "race", "social",
                  "victim"}),
      yes_no("hof",
             "Does this post contain any form of non-acceptable language such "
             "as hate speech, offensiveness, aggression, profanity?"),
      multiclass("hop", "This post contains", {"hate", "offense", "profanity"}),
      yes_no("target",
             "Does this post contain an insult/threat to an individual, group, "
             "or others?"),
  };
  return tasks;
}

std::string_view kind_name(TaskKind k) {
  return k == TaskKind::kBinary ? "binary" : "multiclass";
}

}  // namespace

void TaskSpec::validate() const {
  if (name.empty()) throw DataError("task has no name");
  if (classes.size() < 2) {
    throw DataError("task '" + name + "' needs at least two classes");
  }
  if (kind == TaskKind::kBinary && classes.size() != 2) {
    throw DataError("binary task '" + name + "' must have exactly 2 classes");
  }
  std::set<std::string> seen_classes(classes.begin(), classes.end());
  if (seen_classes.size() != classes.size()) {
    throw DataError("task '" + name + "' lists a class twice");
  }
  if (answer_tokens.size() != classes.size()) {
    throw DataError("task '" + name +
                    "': answer_tokens must have one entry per class");
  }
  std::set<std::string> seen_tokens;
  for (const auto& c : classes) {
    auto it = answer_tokens.find(c);
    if (it == answer_tokens.end()) {
      throw DataError("task '" + name + "': no answer token for class '" + c +
                      "'");
    }
    if (text::is_blank(it->second)) {
      throw DataError("task '" + name + "': blank answer token for '" + c +
                      "'");
    }
    if (!seen_tokens.insert(it->second).second) {
      throw DataError("task '" + name + "': answer token '" + it->second +
                      "' is not distinct");
    }
  }
}

bool TaskSpec::has_class(std::string_view label) const {
  return std::find(classes.begin(), classes.end(), label) != classes.end();
}

std::size_t TaskSpec::class_index(std::string_view label) const {
  auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) {
    throw DataError("label '" + std::string(label) +
                    "' is not a class of task '" + name + "'");
  }
  return static_cast<std::size_t>(it - classes.begin());
}

const std::string& TaskSpec::answer_token(std::string_view label) const {
  auto it = answer_tokens.find(std::string(label));
  if (it == answer_tokens.end()) {
    throw DataError("label '" + std::string(label) +
                    "' has no answer token in task '" + name + "'");
  }
  return it->second;
}

const std::string& TaskSpec::positive_class() const {
  if (!is_binary()) {
    throw UsageError("task '" + name + "' is not binary");
  }
  return classes.front();
}

const std::string& TaskSpec::complement(std::string_view label) const {
  if (!is_binary()) {
    throw UsageError("task '" + name + "' is not binary");
  }
  return classes[1 - class_index(label)];
}

std::vector<std::string> builtin_task_names() {
  std::vector<std::string> names;
  for (const auto& t : catalog()) names.push_back(t.name);
  return names;
}

TaskSpec builtin_task(std::string_view name) {
  const std::string wanted = text::to_lower(name);
  for (const auto& t : catalog()) {
    if (t.name == wanted) return t;
  }
  throw UsageError("unknown built-in task '" + std::string(name) + "'");
}

TaskSpec task_from_json(const nlohmann::json& j) {
  try {
    TaskSpec t;
    t.name = j.at("name").get<std::string>();
    t.definition = j.at("definition").get<std::string>();
    t.classes = j.at("classes").get<std::vector<std::string>>();
    t.answer_tokens =
        j.at("answer_tokens").get<std::map<std::string, std::string>>();
    const std::string kind = j.value("kind", t.classes.size() == 2
                                                 ? std::string("binary")
                                                 : std::string("multiclass"));
    if (kind == "binary") {
      t.kind = TaskKind::kBinary;
    } else if (kind == "multiclass") {
      t.kind = TaskKind::kMulticlass;
    } else {
      throw DataError("task kind must be 'binary' or 'multiclass', got '" +
                      kind + "'");
    }
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed task spec: ") + e.what());
  }
}

nlohmann::json task_to_json(const TaskSpec& task) {
  return {{"name", task.name},
          {"definition", task.definition},
          {"classes", task.classes},
          {"answer_tokens", task.answer_tokens},
          {"kind", kind_name(task.kind)}};
}

TaskSpec load_task_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open task spec " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("task spec " + path.string() + ": " + e.what());
  }
  return task_from_json(j);
}

TaskSpec resolve_task(std::string_view name_or_path) {
  const std::string lowered = text::to_lower(name_or_path);
  for (const auto& t : catalog()) {
    if (t.name == lowered) return t;
  }
  return load_task_spec(std::filesystem::path(std::string(name_or_path)));
}

}  // namespace fsbias
