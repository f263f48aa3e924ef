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
#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "fsbias/error.hpp"
#include "fsbias/experiment.hpp"
#include "fsbias/text.hpp"

namespace fsbias {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json optional_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return "inf";
  return *v;
}

std::string pct2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string mean_std_cell(const json& ms) {
  if (ms.is_null()) return "-";
  std::string out = pct2(100.0 * ms.at("mean").get<double>());
  if (!ms.at("std").is_null()) {
    out += " ± " + pct2(100.0 * ms.at("std").get<double>());
  }
  return out;
}

// Pads by code points so "±" does not skew the columns.
std::string pad(const std::string& s, std::size_t width, bool left = false) {
  const std::size_t n = text::char_count(s);
  if (n >= width) return s;
  const std::string fill(width - n, ' ');
  return left ? s + fill : fill + s;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::is_blank(line)) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " +
                      e.what());
    }
  }
  return out;
}

}  // namespace

nlohmann::json KeywordCorrelation::to_json() const {
  json j = {{"task", task},
            {"n_pos", n_pos},
            {"n_neg", n_neg},
            {"positive_share", positive_share},
            {"pos_pct", pos_pct},
            {"neg_pct", neg_pct}};
  j["ratio"] = optional_number(ratio);
  j["flag"] = flag ? json(*flag) : json(nullptr);
  return j;
}

KeywordCorrelation keyword_correlation(std::span<const Post> eval,
                                       const TaskSpec& task,
                                       const Lexicon& lexicon) {
  if (!task.is_binary()) {
    throw UsageError("keyword correlation needs a binary task, got " + task.name);
  }
  if (lexicon.empty()) throw UsageError("keyword lexicon is empty");
  if (eval.empty()) throw DataError("keyword correlation over an empty set");
  const std::string& pos = task.positive_class();
  KeywordCorrelation r;
  r.task = task.name;
  std::size_t pos_hits = 0;
  std::size_t neg_hits = 0;
  for (const auto& p : eval) {
    if (!p.label) throw DataError("post " + p.id + " has no label");
    const bool hit = lexicon.matches(p.text);
    if (*p.label == pos) {
      ++r.n_pos;
      pos_hits += hit;
    } else {
      ++r.n_neg;
      neg_hits += hit;
    }
  }
  r.positive_share =
      static_cast<double>(r.n_pos) / static_cast<double>(eval.size());
  if (r.n_pos > 0) r.pos_pct = 100.0 * pos_hits / static_cast<double>(r.n_pos);
  if (r.n_neg > 0) r.neg_pct = 100.0 * neg_hits / static_cast<double>(r.n_neg);
  if (pos_hits == 0 && neg_hits == 0) {
    r.flag = "degenerate: no keyword matches";
  } else if (neg_hits == 0) {
    r.ratio = std::numeric_limits<double>::infinity();
    r.flag = "infinite ratio: no negative post matches";
  } else {
    r.ratio = r.pos_pct / r.neg_pct;
  }
  return r;
}

std::string render_keyword_table(std::span<const KeywordCorrelation> rows) {
  std::size_t w = 4;
  for (const auto& r : rows) w = std::max(w, r.task.size());
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %7s %7s %7s %7s\n",
                static_cast<int>(w), "Task", "%Pos", "p", "n", "p/n");
  std::string out = buf;
  for (const auto& r : rows) {
    std::string ratio = "-";
    if (r.ratio) ratio = std::isinf(*r.ratio) ? "inf" : pct2(*r.ratio);
    std::snprintf(buf, sizeof(buf), "%-*s %7s %7s %7s %7s", static_cast<int>(w),
                  r.task.c_str(), pct2(100.0 * r.positive_share).c_str(),
                  pct2(r.pos_pct).c_str(), pct2(r.neg_pct).c_str(),
                  ratio.c_str());
    out += buf;
    if (r.flag) out += "  [" + *r.flag + "]";
    out += "\n";
  }
  return out;
}

nlohmann::json BaselineReport::to_json() const {
  json kw = json::array();
  for (const auto& [name, m] : keyword) {
    kw.push_back({{"lexicon", name}, {"metrics", m.to_json()}});
  }
  json j = {{"keyword", std::move(kw)}};
  j["best_keyword"] = best_keyword ? json(*best_keyword) : json(nullptr);
  j["tfidf_vote"] = tfidf_vote ? tfidf_vote->to_json() : json(nullptr);
  return j;
}

std::string BaselineReport::render() const {
  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (const auto& [name, m] : keyword) {
    rows.emplace_back("KWD:" + name + (best_keyword && *best_keyword == name
                                           ? " *"
                                           : ""),
                      m);
  }
  if (tfidf_vote) rows.emplace_back("TF-IDF vote", *tfidf_vote);
  return render_metrics_table(rows);
}

BaselineReport run_baselines(const TaskSpec& task,
                             const LabeledRepository& repo,
                             std::span<const Post> eval,
                             std::span<const Lexicon> lexicons, std::size_t k,
                             const TokenizerConfig& tokenizer) {
  BaselineReport report;
  std::vector<std::string> gold;
  for (const auto& q : eval) {
    if (!q.label) throw DataError("eval post " + q.id + " has no label");
    gold.push_back(*q.label);
  }

  if (!lexicons.empty()) {
    if (!task.is_binary()) {
      throw UsageError("keyword baseline needs a binary task, got " + task.name);
    }
    std::optional<std::size_t> best;
    for (std::size_t li = 0; li < lexicons.size(); ++li) {
      const Lexicon& lex = lexicons[li];
      std::vector<std::string> pred;
      std::vector<std::vector<double>> scores;
      for (const auto& q : eval) {
        pred.push_back(keyword_baseline(lex, q, task));
        const bool pos = pred.back() == task.positive_class();
        scores.push_back({pos ? 1.0 : 0.0, pos ? 0.0 : 1.0});
      }
      const std::string name =
          lex.name().empty() ? "lexicon" + std::to_string(li) : lex.name();
      report.keyword.emplace_back(name, compute_metrics(task, pred, gold, scores));
      const MetricsReport& m = report.keyword.back().second;
      if (!best) {
        best = li;
        continue;
      }
      const MetricsReport& b = report.keyword[*best].second;
      const double f1 = m.f1_binary_pos.value_or(0.0);
      const double bf1 = b.f1_binary_pos.value_or(0.0);
      if (f1 > bf1 || (f1 == bf1 && m.auc.value_or(0.0) > b.auc.value_or(0.0))) {
        best = li;
      }
    }
    report.best_keyword = report.keyword[*best].first;
  }

  if (k > 0) {
    auto provider = TfidfProvider::fit(repo, tokenizer);
    const EmbeddingIndex index = embed_repository(*provider, repo);
    std::vector<std::string> texts;
    for (const auto& q : eval) texts.push_back(q.text);
    const auto query_vecs = provider->embed(texts);
    std::vector<std::string> pred;
    std::vector<std::vector<double>> scores;
    for (const auto& qv : query_vecs) {
      const auto sims = index.similarities(qv);
      VoteResult vote = tfidf_vote_baseline(repo, sims, k, task);
      pred.push_back(vote.label);
      std::vector<double> row;
      for (const auto& c : task.classes) {
        row.push_back(vote.mean_similarity.score_of(c));
      }
      scores.push_back(std::move(row));
    }
    report.tfidf_vote = compute_metrics(task, pred, gold, scores);
  }
  return report;
}

double relative_change_pct(double value, double reference) {
  if (reference == 0.0) {
    throw DataError("relative change against a zero reference");
  }
  return 100.0 * (value - reference) / reference;
}

std::string render_run_report(const nlohmann::json& summary,
                              const std::optional<std::string>& reference) {
  const json& rows = summary.at("aggregates");
  const json* ref = nullptr;
  if (reference) {
    for (const auto& r : rows) {
      if (r.at("group") == *reference) ref = &r;
    }
    if (ref == nullptr) {
      throw UsageError("reference group '" + *reference + "' not in summary");
    }
  }
  auto delta = [&](const json& row, const char* key) -> std::string {
    if (ref == nullptr || row.at(key).is_null() || ref->at(key).is_null()) {
      return "-";
    }
    const double d = relative_change_pct(row.at(key).at("mean").get<double>(),
                                         ref->at(key).at("mean").get<double>());
    return (d >= 0 ? "+" : "") + pct2(d) + "%";
  };

  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.at("group").get<std::string>().size());
  std::vector<std::string> header = {"cells", "AUC", "F1", "F1m", "F1w"};
  if (ref != nullptr) {
    header.push_back("dAUC");
    header.push_back("dF1");
  }
  constexpr std::size_t kCol = 15;
  std::string out = pad("Group", w, true);
  for (const auto& h : header) out += " " + pad(h, kCol);
  out += "\n";
  for (const auto& r : rows) {
    std::vector<std::string> cells = {
        std::to_string(r.at("n_cells").get<std::size_t>()),
        mean_std_cell(r.at("auc")), mean_std_cell(r.at("f1")),
        mean_std_cell(r.at("f1_macro")), mean_std_cell(r.at("f1_weighted"))};
    if (ref != nullptr) {
      cells.push_back(delta(r, "auc"));
      cells.push_back(delta(r, "f1"));
    }
    out += pad(r.at("group").get<std::string>(), w, true);
    for (const auto& c : cells) out += " " + pad(c, kCol);
    out += "\n";
  }
  return out;
}

std::string render_run_report(const std::filesystem::path& run_dir,
                              const std::optional<std::string>& reference) {
  const fs::path path = run_dir / "summary.json";
  std::ifstream in(path);
  if (!in) throw UsageError("no summary.json in " + run_dir.string());
  json summary;
  try {
    summary = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return render_run_report(summary, reference);
}

std::vector<PredictionRecord> load_cell_records(
    const std::filesystem::path& cell_dir, const LabeledRepository& repo) {
  std::unordered_map<std::string_view, const Post*> by_id;
  for (const auto& p : repo.posts()) by_id.emplace(p.id, &p);

  const auto preds = read_jsonl(cell_dir / "predictions.jsonl");
  const auto shots = read_jsonl(cell_dir / "shots.jsonl");
  if (preds.size() != shots.size()) {
    throw DataError("predictions and shots differ in length in " +
                    cell_dir.string());
  }
  std::vector<PredictionRecord> out;
  try {
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const json& p = preds[i];
      const json& s = shots[i];
      PredictionRecord r;
      r.query_id = p.at("query_id").get<std::string>();
      r.query_text = p.at("text").get<std::string>();
      r.predicted = p.at("predicted").get<std::string>();
      for (const auto& [label, v] : p.at("scores").items()) {
        r.scores.per_class.push_back({label, v.get<double>()});
      }
      r.scores.normalized = true;
      if (!p.at("gold").is_null()) r.gold = p.at("gold").get<std::string>();
      if (s.at("query_id") != r.query_id) {
        throw DataError("shots line " + std::to_string(i + 1) +
                        " does not match query " + r.query_id);
      }
      r.shots.query_id = r.query_id;
      r.shots.strategy = parse_strategy(s.at("strategy").get<std::string>());
      r.shots.seed = s.at("seed").get<std::uint64_t>();
      for (const auto& item : s.at("shots")) {
        const auto id = item.at("id").get<std::string>();
        auto it = by_id.find(id);
        if (it == by_id.end()) {
          throw DataError("shot " + id + " is not in the repository");
        }
        Shot shot{*it->second, item.at("true_label").get<std::string>(),
                  item.at("presented_label").get<std::string>(), std::nullopt};
        if (!item.at("similarity").is_null()) {
          shot.similarity = item.at("similarity").get<double>();
        }
        r.shots.shots.push_back(std::move(shot));
      }
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError(cell_dir.string() + ": " + e.what());
  }
  return out;
}

}  // namespace fsbias
