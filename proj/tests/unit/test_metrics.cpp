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

#include <cmath>

#include <gtest/gtest.h>

#include "fsbias/classify.hpp"
#include "fsbias/error.hpp"
#include "fsbias/metrics.hpp"
#include "helpers.hpp"
#include "metrics_oracle.hpp"

namespace fsbias {
namespace {

TEST(Auc, Examples) {
  const std::vector<ScoredLabel> s{{0.9, true}, {0.8, false}, {0.7, true}, {0.1, false}};
  EXPECT_DOUBLE_EQ(roc_auc_binary(s), 0.75);
  const std::vector<ScoredLabel> sep{{0.9, true}, {0.1, false}};
  EXPECT_DOUBLE_EQ(roc_auc_binary(sep), 1.0);
  const std::vector<ScoredLabel> ties{{0.5, true}, {0.5, false}, {0.5, true}};
  EXPECT_DOUBLE_EQ(roc_auc_binary(ties), 0.5);
  const std::vector<ScoredLabel> one{{0.5, true}};
  EXPECT_THROW(roc_auc_binary(one), DataError);
}

TEST(Auc, MatchesPairCountingOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = testing::random_scored(rng);
    ASSERT_NEAR(roc_auc_binary(s), testing::auc_by_pairs(s), 1e-12);
  }
}

TEST(Auc, MonotoneTransformInvariance) {
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = testing::random_scored(rng);
    const double base = roc_auc_binary(s);
    for (auto& x : s) x.score = std::exp(3 * x.score) - 7;
    ASSERT_NEAR(roc_auc_binary(s), base, 1e-12);
  }
}

TEST(Auc, ComplementProperty) {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = testing::random_scored(rng);
    const double base = roc_auc_binary(s);
    for (auto& x : s) x.score = 1.0 - x.score;
    ASSERT_NEAR(roc_auc_binary(s), 1.0 - base, 1e-12);
  }
}

TEST(WeightedOvr, FrozenThreeClassFixture) {
  const std::vector<std::string> classes{"x", "y", "z"};
  const std::vector<std::string> gold{"x", "x", "x", "x", "x", "y",
                                      "y", "y", "y", "z", "z", "z"};
  const std::vector<std::vector<double>> probs{
      {0.7, 0.2, 0.1}, {0.5, 0.3, 0.2}, {0.3, 0.4, 0.3}, {0.6, 0.1, 0.3},
      {0.2, 0.2, 0.6}, {0.1, 0.8, 0.1}, {0.3, 0.5, 0.2}, {0.4, 0.4, 0.2},
      {0.2, 0.3, 0.5}, {0.1, 0.1, 0.8}, {0.3, 0.3, 0.4}, {0.5, 0.2, 0.3}};
  EXPECT_NEAR(roc_auc_weighted_ovr(probs, gold, classes), 0.8324239417989419, 1e-12);
}

TEST(WeightedOvr, BinaryReducesToPositiveClassAuc) {
  const std::vector<std::string> classes{"Yes", "No"};
  const std::vector<std::string> gold{"Yes", "No", "Yes", "No"};
  const std::vector<std::vector<double>> probs{{0.9, 0.1}, {0.8, 0.2}, {0.7, 0.3}, {0.1, 0.9}};
  EXPECT_DOUBLE_EQ(roc_auc_weighted_ovr(probs, gold, classes), 0.75);
  const std::vector<std::string> mono{"Yes", "Yes", "Yes", "Yes"};
  EXPECT_THROW(roc_auc_weighted_ovr(probs, mono, classes), DataError);
}

TEST(F1, Examples) {
  const std::vector<std::string> classes{"Yes", "No"};
  // TP=1, FP=1, FN=1 for Yes.
  const std::vector<std::string> pred{"Yes", "Yes", "No", "No"};
  const std::vector<std::string> gold{"Yes", "No", "Yes", "No"};
  const auto r = f1_scores(pred, gold, classes, true);
  EXPECT_DOUBLE_EQ(r.per_class[0].precision, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class[0].recall, 0.5);
  EXPECT_DOUBLE_EQ(*r.f1_binary_pos, 0.5);

  const auto perfect = f1_scores(gold, gold, classes, true);
  EXPECT_DOUBLE_EQ(perfect.f1_macro, 1.0);
  EXPECT_EQ(perfect.confusion, (std::vector<std::vector<std::size_t>>{{2, 0}, {0, 2}}));
}

TEST(F1, FrozenThreeClassFixtures) {
  const std::vector<std::string> classes{"a", "b", "c"};
  const std::vector<std::string> gold{"a", "a", "b", "b", "c", "c"};
  const std::vector<std::string> pred{"a", "b", "b", "c", "c", "a"};
  const auto r = f1_scores(pred, gold, classes, false);
  EXPECT_DOUBLE_EQ(r.f1_macro, 0.5);
  EXPECT_DOUBLE_EQ(r.f1_weighted, 0.5);
  EXPECT_FALSE(r.f1_binary_pos.has_value());

  const std::vector<std::string> gold2{"a", "a", "a", "b", "b", "c"};
  const std::vector<std::string> pred2{"a", "a", "b", "b", "c", "c"};
  const auto u = f1_scores(pred2, gold2, classes, false);
  EXPECT_NEAR(u.f1_macro, 0.6555555555555556, 1e-12);
  EXPECT_NEAR(u.f1_weighted, 0.6777777777777779, 1e-12);
}

TEST(F1, ZeroDivisionIsZero) {
  const std::vector<std::string> classes{"a", "b", "c"};
  const std::vector<std::string> gold{"a", "a"};
  const std::vector<std::string> pred{"a", "a"};
  const auto r = f1_scores(pred, gold, classes, false);
  EXPECT_DOUBLE_EQ(r.per_class[1].f1, 0.0);
  EXPECT_NEAR(r.f1_macro, 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.f1_weighted, 1.0);
}

TEST(F1, MatchesConfusionOracle) {
  Rng rng(34);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t c = 2 + rng.uniform_below(4);
    std::vector<std::string> classes;
    for (std::size_t i = 0; i < c; ++i) classes.push_back("l" + std::to_string(i));
    const std::size_t n = 1 + rng.uniform_below(100);
    std::vector<std::string> pred, gold;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(classes[rng.uniform_below(c)]);
      pred.push_back(classes[rng.uniform_below(c)]);
    }
    const auto got = f1_scores(pred, gold, classes, c == 2);
    const auto want = testing::f1_by_confusion(pred, gold, classes);
    ASSERT_NEAR(got.f1_macro, want.macro, 1e-12);
    ASSERT_NEAR(got.f1_weighted, want.weighted, 1e-12);
    ASSERT_NEAR(got.accuracy, want.accuracy, 1e-12);
    for (std::size_t k = 0; k < c; ++k) ASSERT_NEAR(got.per_class[k].f1, want.f1[k], 1e-12);
    if (c == 2) ASSERT_NEAR(*got.f1_binary_pos, want.f1[0], 1e-12);
  }
}

TEST(F1, WeightedEqualsMacroWithEqualSupport) {
  Rng rng(35);
  const std::vector<std::string> classes{"a", "b", "c"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> gold, pred;
    for (int i = 0; i < 30; ++i) {
      gold.push_back(classes[i % 3]);
      pred.push_back(classes[rng.uniform_below(3)]);
    }
    const auto r = f1_scores(pred, gold, classes, false);
    ASSERT_NEAR(r.f1_weighted, r.f1_macro, 1e-12);
  }
}

TEST(F1, RejectsBadInput) {
  const std::vector<std::string> classes{"a", "b"};
  const std::vector<std::string> one{"a"};
  const std::vector<std::string> two{"a", "b"};
  const std::vector<std::string> bad{"z"};
  EXPECT_THROW(f1_scores(one, two, classes, true), DataError);
  EXPECT_THROW(f1_scores(bad, one, classes, true), DataError);
  EXPECT_THROW(f1_scores({}, {}, classes, true), DataError);
}

TEST(ClassBalance, Shares) {
  const std::vector<std::string> classes{"Yes", "No"};
  std::vector<Post> posts;
  for (int i = 0; i < 1000; ++i) {
    posts.push_back(Post{std::to_string(i), "t", std::string(i < 578 ? "Yes" : "No")});
  }
  const auto r = class_balance_report(posts, classes);
  EXPECT_DOUBLE_EQ(r[0].second, 0.578);
  std::vector<Post> all_yes(3, Post{"x", "t", std::string("Yes")});
  EXPECT_DOUBLE_EQ(class_balance_report(all_yes, classes)[1].second, 0.0);
  EXPECT_THROW(class_balance_report({}, classes), DataError);
}

TEST(MetricsReport, EvaluateAndJsonRoundTrip) {
  const TaskSpec task = testing::yes_no_task();
  std::vector<PredictionRecord> recs;
  const double ps[] = {0.9, 0.8, 0.7, 0.1};
  const char* gold[] = {"Yes", "No", "Yes", "No"};
  for (int i = 0; i < 4; ++i) {
    PredictionRecord r;
    r.query_id = std::to_string(i);
    r.scores.per_class = {{"Yes", ps[i]}, {"No", 1 - ps[i]}};
    r.predicted = ps[i] >= 0.5 ? "Yes" : "No";
    r.gold = gold[i];
    recs.push_back(r);
  }
  const auto m = evaluate(recs, task);
  EXPECT_EQ(m.n, 4u);
  EXPECT_DOUBLE_EQ(*m.auc, 0.75);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
  const auto back = MetricsReport::from_json(m.to_json());
  EXPECT_EQ(back.to_json(), m.to_json());
  const std::vector<std::pair<std::string, MetricsReport>> rows{{"Offensive", m}};
  const std::string table = render_metrics_table(rows);
  EXPECT_NE(table.find("75.00"), std::string::npos) << table;
  EXPECT_NE(table.find("AUC"), std::string::npos);
}

}  // namespace
}  // namespace fsbias
