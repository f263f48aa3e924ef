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

#include "fsbias/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "fsbias/classify.hpp"
#include "fsbias/error.hpp"

namespace fsbias {
namespace {

using nlohmann::json;

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

std::string percent(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v * 100.0);
  return buf;
}

}  // namespace

double roc_auc_binary(std::span<const ScoredLabel> scored) {
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t n_pos = 0;
  for (const auto& s : scored) {
    if (std::isnan(s.score)) throw DataError("AUC input contains NaN scores");
    n_pos += s.positive ? 1 : 0;
  }
  const std::size_t n_neg = scored.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("AUC is undefined without both positive and negative gold");
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].score < scored[b].score;
  });
  // Sum of positive mid-ranks (1-based), doubled to stay integral.
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < order.size() && scored[order[j]].score == scored[order[i]].score) {
      pos_in_group += scored[order[j]].positive ? 1 : 0;
      ++j;
    }
    // Ranks i+1..j share mid-rank (i+1+j)/2.
    twice_rank_sum += static_cast<double>(pos_in_group) *
                      static_cast<double>(i + 1 + j);
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  const double u = (twice_rank_sum - np * (np + 1.0)) / 2.0;
  return u / (np * nn);
}

double roc_auc_weighted_ovr(const std::vector<std::vector<double>>& scores,
                            std::span<const std::string> gold,
                            std::span<const std::string> classes) {
  if (scores.size() != gold.size()) {
    throw DataError("AUC: score rows and gold labels differ in length");
  }
  double weighted = 0.0;
  std::size_t total_support = 0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<ScoredLabel> column;
    column.reserve(gold.size());
    std::size_t support = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (scores[i].size() != classes.size()) {
        throw DataError("AUC: score row has the wrong number of classes");
      }
      const bool member = gold[i] == classes[c];
      support += member ? 1 : 0;
      column.push_back({scores[i][c], member});
    }
    if (support == 0 || support == gold.size()) continue;
    ++present;
    weighted += static_cast<double>(support) * roc_auc_binary(column);
    total_support += support;
  }
  if (present == 0) {
    throw DataError("weighted AUC needs at least two classes in gold");
  }
  return weighted / static_cast<double>(total_support);
}

F1Report f1_scores(std::span<const std::string> predicted,
                   std::span<const std::string> gold,
                   std::span<const std::string> classes, bool binary) {
  if (predicted.size() != gold.size()) {
    throw DataError("F1: " + std::to_string(predicted.size()) +
                    " predictions for " + std::to_string(gold.size()) +
                    " gold labels");
  }
  if (gold.empty()) throw DataError("F1 of an empty evaluation set");
  std::map<std::string_view, std::size_t> index;
  for (std::size_t c = 0; c < classes.size(); ++c) index[classes[c]] = c;
  auto lookup = [&](const std::string& label) {
    auto it = index.find(label);
    if (it == index.end()) {
      throw DataError("F1: label '" + label + "' is not a task class");
    }
    return it->second;
  };
  const std::size_t n = classes.size();
  F1Report r;
  r.confusion.assign(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++r.confusion[lookup(gold[i])][lookup(predicted[i])];
  }
  std::size_t correct = 0;
  double weighted = 0.0;
  double macro = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t tp = r.confusion[c][c];
    std::size_t support = 0;
    std::size_t predicted_c = 0;
    for (std::size_t o = 0; o < n; ++o) {
      support += r.confusion[c][o];
      predicted_c += r.confusion[o][c];
    }
    correct += tp;
    ClassMetrics m{classes[c], 0.0, 0.0, 0.0, support};
    m.precision = safe_div(static_cast<double>(tp),
                           static_cast<double>(predicted_c));
    m.recall = safe_div(static_cast<double>(tp), static_cast<double>(support));
    m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);
    macro += m.f1;
    weighted += m.f1 * static_cast<double>(support);
    r.per_class.push_back(std::move(m));
  }
  r.f1_macro = macro / static_cast<double>(n);
  r.f1_weighted = weighted / static_cast<double>(gold.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  if (binary) r.f1_binary_pos = r.per_class.front().f1;
  return r;
}

std::vector<std::pair<std::string, double>> class_balance_report(
    std::span<const Post> posts, std::span<const std::string> classes) {
  if (posts.empty()) throw DataError("class balance of an empty set");
  std::vector<std::pair<std::string, double>> out;
  for (const auto& c : classes) {
    const auto count = std::count_if(posts.begin(), posts.end(),
                                     [&](const Post& p) { return p.label == c; });
    out.emplace_back(c, static_cast<double>(count) /
                            static_cast<double>(posts.size()));
  }
  return out;
}

nlohmann::json MetricsReport::to_json() const {
  json per = json::array();
  for (const auto& m : per_class) {
    per.push_back({{"label", m.label},
                   {"precision", m.precision},
                   {"recall", m.recall},
                   {"f1", m.f1},
                   {"support", m.support}});
  }
  json j = {{"task", task},
            {"n", n},
            {"f1_macro", f1_macro},
            {"f1_weighted", f1_weighted},
            {"accuracy", accuracy},
            {"classes", classes},
            {"confusion", confusion},
            {"per_class", std::move(per)}};
  j["auc"] = auc ? json(*auc) : json(nullptr);
  j["f1_binary_pos"] = f1_binary_pos ? json(*f1_binary_pos) : json(nullptr);
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.task = j.at("task").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    if (!j.at("auc").is_null()) r.auc = j.at("auc").get<double>();
    if (!j.at("f1_binary_pos").is_null()) {
      r.f1_binary_pos = j.at("f1_binary_pos").get<double>();
    }
    r.f1_macro = j.at("f1_macro").get<double>();
    r.f1_weighted = j.at("f1_weighted").get<double>();
    r.accuracy = j.value("accuracy", 0.0);
    r.classes = j.value("classes", std::vector<std::string>{});
    r.confusion = j.value("confusion", std::vector<std::vector<std::size_t>>{});
    for (const auto& m : j.value("per_class", json::array())) {
      r.per_class.push_back({m.at("label").get<std::string>(),
                             m.at("precision").get<double>(),
                             m.at("recall").get<double>(),
                             m.at("f1").get<double>(),
                             m.at("support").get<std::size_t>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed metrics JSON: ") + e.what());
  }
}

MetricsReport compute_metrics(const TaskSpec& task,
                              std::span<const std::string> predicted,
                              std::span<const std::string> gold,
                              const std::vector<std::vector<double>>& scores) {
  const F1Report f1 = f1_scores(predicted, gold, task.classes, task.is_binary());
  MetricsReport r;
  r.task = task.name;
  r.n = gold.size();
  r.classes = task.classes;
  r.f1_binary_pos = f1.f1_binary_pos;
  r.f1_macro = f1.f1_macro;
  r.f1_weighted = f1.f1_weighted;
  r.accuracy = f1.accuracy;
  r.confusion = f1.confusion;
  r.per_class = f1.per_class;
  try {
    if (task.is_binary()) {
      std::vector<ScoredLabel> scored;
      for (std::size_t i = 0; i < gold.size(); ++i) {
        scored.push_back({scores.at(i).at(0), gold[i] == task.classes[0]});
      }
      r.auc = roc_auc_binary(scored);
    } else {
      r.auc = roc_auc_weighted_ovr(scores, gold, task.classes);
    }
  } catch (const DataError&) {
    r.auc.reset();
  }
  return r;
}

MetricsReport evaluate(std::span<const PredictionRecord> records,
                       const TaskSpec& task) {
  std::vector<std::string> predicted;
  std::vector<std::string> gold;
  std::vector<std::vector<double>> scores;
  for (const auto& rec : records) {
    if (!rec.gold) continue;
    predicted.push_back(rec.predicted);
    gold.push_back(*rec.gold);
    std::vector<double> row;
    for (const auto& c : task.classes) row.push_back(rec.scores.score_of(c));
    scores.push_back(std::move(row));
  }
  return compute_metrics(task, predicted, gold, scores);
}

std::string render_metrics_table(
    std::span<const std::pair<std::string, MetricsReport>> rows) {
  std::size_t name_width = 4;
  for (const auto& [name, r] : rows) name_width = std::max(name_width, name.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %7s %7s %7s %7s %7s\n",
                static_cast<int>(name_width), "Task", "n", "AUC", "F1", "F1m",
                "F1w");
  out += buf;
  for (const auto& [name, r] : rows) {
    const std::optional<double> f1 =
        r.f1_binary_pos ? r.f1_binary_pos : std::optional(r.f1_weighted);
    std::snprintf(buf, sizeof(buf), "%-*s %7zu %7s %7s %7s %7s\n",
                  static_cast<int>(name_width), name.c_str(), r.n,
                  percent(r.auc).c_str(), percent(f1).c_str(),
                  percent(r.f1_macro).c_str(), percent(r.f1_weighted).c_str());
    out += buf;
  }
  return out;
}

}  // namespace fsbias
