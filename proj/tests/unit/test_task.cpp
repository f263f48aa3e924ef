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

#include <gtest/gtest.h>

#include "fsbias/error.hpp"
#include "fsbias/task.hpp"
#include "helpers.hpp"

namespace fsbias {
namespace {

TEST(Task, CatalogHasEveryTask) {
  const auto names = builtin_task_names();
  EXPECT_EQ(names.size(), 8u);
  for (const auto& n : names) {
    const TaskSpec t = builtin_task(n);
    EXPECT_NO_THROW(t.validate()) << n;
  }
}

TEST(Task, LookupIsCaseInsensitive) {
  EXPECT_EQ(builtin_task("Offensive").name, "offensive");
  EXPECT_THROW(builtin_task("nope"), UsageError);
}

TEST(Task, BinaryHelpers) {
  const TaskSpec t = builtin_task("offensive");
  EXPECT_TRUE(t.is_binary());
  EXPECT_EQ(t.positive_class(), "Yes");
  EXPECT_EQ(t.complement("Yes"), "No");
  EXPECT_EQ(t.complement("No"), "Yes");
  EXPECT_EQ(t.class_index("No"), 1u);
  EXPECT_EQ(t.definition, "Does this post contain offensive language?");
}

TEST(Task, MulticlassTasks) {
  const TaskSpec who = builtin_task("who");
  EXPECT_FALSE(who.is_binary());
  EXPECT_EQ(who.classes.size(), 7u);
  const TaskSpec hop = builtin_task("hop");
  EXPECT_EQ(hop.definition, "This post contains");
  EXPECT_EQ(hop.classes, (std::vector<std::string>{"hate", "offense", "profanity"}));
}

TEST(Task, JsonRoundTripAndValidation) {
  const TaskSpec t = builtin_task("hop");
  const TaskSpec back = task_from_json(task_to_json(t));
  EXPECT_EQ(back.name, t.name);
  EXPECT_EQ(back.classes, t.classes);
  EXPECT_EQ(back.answer_tokens, t.answer_tokens);

  auto j = task_to_json(builtin_task("offensive"));
  j["answer_tokens"] = {{"Yes", "Y"}, {"No", "Y"}};
  EXPECT_THROW(task_from_json(j), DataError);
  j = task_to_json(builtin_task("offensive"));
  j["classes"] = {"Yes", "No", "Maybe"};
  EXPECT_THROW(task_from_json(j), DataError);
}

TEST(Task, ResolveReadsFiles) {
  testing::TempDir dir;
  testing::write_file(dir / "t.json", task_to_json(testing::classes_task(3)).dump());
  EXPECT_EQ(resolve_task((dir / "t.json").string()).classes.size(), 3u);
  EXPECT_EQ(resolve_task("lewd").name, "lewd");
}

}  // namespace
}  // namespace fsbias
