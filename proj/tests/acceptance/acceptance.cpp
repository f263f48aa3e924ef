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

// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit 1 on any
// failure. The live endpoint check runs only when FSBIAS_LIVE_ENDPOINT is
// set and otherwise prints [SKIP].

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "fsbias/corpus.hpp"
#include "fsbias/embed.hpp"
#include "fsbias/error.hpp"
#include "fsbias/experiment.hpp"
#include "fsbias/http.hpp"
#include "fsbias/metrics.hpp"
#include "fsbias/random.hpp"
#include "fsbias/select.hpp"
#include "fsbias/task.hpp"
#include "helpers.hpp"
#include "metrics_oracle.hpp"
#include "select_oracle.hpp"
#include "tfidf_oracle.hpp"

namespace {

using namespace fsbias;
using nlohmann::json;
using testing::TempDir;
namespace fs = std::filesystem;

struct Outcome {
  bool ok = true;
  std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Outcome()> check;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

Outcome selection_oracle() {
  Rng rng(20230501);
  for (int t = 0; t < 500; ++t) {
    const auto inst = testing::random_instance(rng);
    const auto set = select_similarity_balanced(inst.repo, inst.sims, inst.k);
    std::set<std::string> got;
    for (const auto& s : set.shots) got.insert(s.post.id);
    if (got != testing::brute_force_top(inst) || set.size() != inst.k) {
      return fail("instance " + std::to_string(t) + " differs from brute force");
    }
  }
  return {true, "500 instances"};
}

Outcome tfidf_oracle() {
  Rng rng(7);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<std::string> corpus;
    const auto n_docs = 1 + rng.uniform_below(8);
    for (std::uint64_t d = 0; d < n_docs; ++d) corpus.push_back(testing::random_sentence(rng));
    worst = std::max(worst, testing::tfidf_max_error(corpus, corpus[0]));
    worst = std::max(worst, testing::tfidf_max_error(corpus, testing::random_sentence(rng)));
  }
  if (!(worst <= 1e-9)) return fail("max error " + fmt(worst));
  TokenizerConfig cfg;
  cfg.min_token_length = 1;
  const std::vector<std::string> corpus{"a b", "a c"};
  const TfidfModel m = fit_tfidf(corpus, cfg);
  const SparseVector v = transform(m, "a b");
  double wa = 0.0, wb = 0.0;
  for (const auto& [i, w] : v.entries()) {
    if (i == m.vocabulary().at("a")) wa = w;
    if (i == m.vocabulary().at("b")) wb = w;
  }
  if (std::abs(wa - 0.579739) > 1e-6 || std::abs(wb - 0.814803) > 1e-6) {
    return fail("worked example gave " + fmt(wa) + "/" + fmt(wb));
  }
  return {true, "max error " + fmt(worst, 3) + ", worked example " + fmt(wa) + "/" + fmt(wb)};
}

Outcome metric_oracles() {
  Rng rng(11);
  for (int t = 0; t < 1000; ++t) {
    const auto s = testing::random_scored(rng);
    const double want = testing::auc_by_pairs(s);
    if (std::abs(roc_auc_binary(s) - want) > 1e-12) {
      return fail("AUC fixture " + std::to_string(t));
    }
    const std::size_t c = 2 + rng.uniform_below(4);
    const auto task = testing::classes_task(c);
    const std::size_t n = 1 + rng.uniform_below(100);
    std::vector<std::string> pred, gold;
    for (std::size_t i = 0; i < n; ++i) {
      pred.push_back(task.classes[rng.uniform_below(c)]);
      gold.push_back(task.classes[rng.uniform_below(c)]);
    }
    const auto got = f1_scores(pred, gold, task.classes, false);
    const auto ref = testing::f1_by_confusion(pred, gold, task.classes);
    bool same = std::abs(got.f1_macro - ref.macro) <= 1e-12 &&
                std::abs(got.f1_weighted - ref.weighted) <= 1e-12 &&
                std::abs(got.accuracy - ref.accuracy) <= 1e-12;
    for (std::size_t k = 0; k < c; ++k) {
      same = same && std::abs(got.per_class[k].f1 - ref.f1[k]) <= 1e-12;
    }
    if (!same) return fail("F1 fixture " + std::to_string(t));
  }
  for (int t = 0; t < 100; ++t) {
    auto s = testing::random_scored(rng);
    const double before = roc_auc_binary(s);
    for (auto& p : s) p.score = std::exp(3.0 * p.score) - 7.0;
    if (roc_auc_binary(s) != before) return fail("monotone fixture " + std::to_string(t));
  }
  return {true, "1000 AUC + 1000 F1 fixtures, 100 monotone"};
}

// Full-matrix Levenshtein, independent of the banded library routine.
std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                          std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

Outcome dedup_contract() {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  Rng rng(404);
  auto random_text = [&](std::size_t len) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.uniform_below(alphabet.size())];
    return s;
  };
  auto substitute = [&](std::string s, std::size_t edits) {
    const auto idx = rng.sample_indices(s.size(), edits);
    for (auto i : idx) {
      char c;
      do c = alphabet[rng.uniform_below(alphabet.size())]; while (c == s[i]);
      s[i] = c;
    }
    return s;
  };
  const TaskSpec task = builtin_task("offensive");
  std::vector<Post> eval;
  std::vector<Post> repo_posts;
  std::set<std::string> expect_removed, expect_kept;
  auto add = [&](const std::string& text, bool near) {
    const std::string id = "r" + std::to_string(repo_posts.size());
    repo_posts.push_back(testing::post(id, text, repo_posts.size() % 2 ? "Yes" : "No"));
    (near ? expect_removed : expect_kept).insert(id);
  };
  for (int i = 0; i < 40; ++i) {
    const std::size_t len = 50 + rng.uniform_below(101);
    const std::string base = random_text(len);
    eval.push_back(testing::post("q" + std::to_string(i), base, "Yes"));
    const auto tenth = (len + 9) / 10;  // ceil(len / 10)
    add(substitute(base, tenth - 1), true);
    add(substitute(base, tenth), false);
    // m appended characters give 2m / (2len + m).
    std::size_t m = 0;
    while (2.0 * (m + 1) / (2.0 * len + m + 1) < 0.1) ++m;
    add(base + random_text(m), true);
    add(base + random_text(m + 1), false);
    add(random_text(len), false);
  }
  const auto repo = LabeledRepository::from_posts(task, repo_posts);
  const auto [clean, report] = dedup_repository(repo, eval);
  std::set<std::string> removed;
  for (const auto& id : report.discarded_ids()) removed.insert(id);
  if (removed != expect_removed) {
    return fail("removed " + std::to_string(removed.size()) + ", expected " +
                std::to_string(expect_removed.size()));
  }
  std::size_t violations = 0;
  for (const auto& p : clean.posts()) {
    for (const auto& q : eval) {
      const double r = 2.0 * static_cast<double>(levenshtein(p.text, q.text)) /
                       static_cast<double>(p.text.size() + q.text.size());
      violations += r < 0.1;
    }
  }
  if (violations > 0) return fail(std::to_string(violations) + " rescan violations");
  return {true, std::to_string(removed.size()) + " removed, " +
                    std::to_string(clean.size()) + " kept, 0 rescan violations"};
}

fs::path e2e_dir() { return fs::path(FSBIAS_SOURCE_DIR) / "tests" / "fixtures" / "e2e"; }

struct E2E {
  TaskSpec task = builtin_task("offensive");
  LabeledRepository repo;
  std::vector<Post> queries;
  json golden;

  E2E() {
    repo = load_repository(e2e_dir() / "repo.jsonl", InputFormat::kJsonl, task);
    queries = load_posts(e2e_dir() / "queries.jsonl", InputFormat::kJsonl, task, true);
    std::ifstream in(e2e_dir() / "golden.json");
    golden = json::parse(in);
  }

  PipelineResult run(Strategy strategy, Perturbation perturbation) const {
    PipelineConfig cfg;
    cfg.task = task;
    cfg.selection.k = golden.at("k").get<std::size_t>();
    cfg.selection.strategy = strategy;
    cfg.selection.perturbation = perturbation;
    cfg.scorer.backend = ScorerBackend::kMockNearestLabel;
    return run_pipeline(cfg, repo, queries);
  }
};

Outcome e2e_pipeline() {
  const E2E e;
  const double golden = e.golden.at("auc_correct").get<double>();
  const auto sim = evaluate(e.run(Strategy::kSimilarityBalanced, Perturbation::kNone).records,
                            e.task);
  const auto rnd = evaluate(e.run(Strategy::kRandom, Perturbation::kNone).records, e.task);
  if (!sim.auc || std::abs(*sim.auc - golden) > 1e-9) {
    return fail("AUC " + fmt(sim.auc.value_or(NAN), 17) + " vs golden " + fmt(golden, 17));
  }
  if (!rnd.auc || !(*sim.auc > *rnd.auc)) {
    return fail("random strategy AUC " + fmt(rnd.auc.value_or(NAN)) + " not below");
  }
  return {true, "AUC " + fmt(*sim.auc) + " = golden, random " + fmt(*rnd.auc) + " (" +
                    std::to_string(e.repo.size()) + " repo, " +
                    std::to_string(e.queries.size()) + " queries)"};
}

Outcome flip_property() {
  const E2E e;
  const auto base = e.run(Strategy::kSimilarityBalanced, Perturbation::kNone);
  const auto flip = e.run(Strategy::kSimilarityBalanced, Perturbation::kFlip);
  if (base.records.size() != flip.records.size()) return fail("record counts differ");
  for (std::size_t i = 0; i < base.records.size(); ++i) {
    if (base.records[i].predicted == flip.records[i].predicted) {
      return fail("query " + base.records[i].query_id + " not complemented");
    }
  }
  const double a = *evaluate(base.records, e.task).auc;
  const double b = *evaluate(flip.records, e.task).auc;
  if (std::abs(a + b - 1.0) > 1e-9) return fail("AUC " + fmt(a) + " + " + fmt(b) + " != 1");
  if (std::abs(b - e.golden.at("auc_flip").get<double>()) > 1e-9) {
    return fail("flip AUC " + fmt(b) + " differs from golden");
  }
  return {true, "all " + std::to_string(base.records.size()) + " complemented, AUC " +
                    fmt(a) + " / " + fmt(b)};
}

Outcome stratification_property() {
  Rng rng(77);
  int done = 0, exhausted = 0, worse = 0;
  double gap_strat = 0.0, gap_sim = 0.0;
  while (done < 100) {
    const auto inst = testing::stratification_instance(rng);
    ShotSet strat;
    try {
      strat = select_stratified_balanced(inst.repo, inst.sims, inst.k);
    } catch (const DataError&) {
      ++exhausted;
      continue;
    }
    const auto sim = select_similarity_balanced(inst.repo, inst.sims, inst.k);
    const double g1 = testing::class_mean_gap(strat, inst.task.classes);
    const double g2 = testing::class_mean_gap(sim, inst.task.classes);
    gap_strat += g1;
    gap_sim += g2;
    worse += g1 > g2 + 1e-12;
    ++done;
  }
  // Graded on the gap averaged over fixtures; single fixtures may exceed.
  const std::string detail = "mean gap " + fmt(gap_strat / 100, 4) + " vs " +
                             fmt(gap_sim / 100, 4) + ", " + std::to_string(worse) +
                             " fixtures individually wider, " + std::to_string(exhausted) +
                             " draws with exhausted bins";
  if (gap_strat > gap_sim) return fail(detail);
  return {true, detail};
}

Outcome keyword_arithmetic() {
  TempDir dir;
  const fs::path eval = dir / "eval.jsonl";
  const fs::path lex = dir / "lexicon.txt";
  testing::write_file(lex, "idiot\nmoron\n");
  std::string body;
  auto line = [&](std::size_t i, bool pos, bool hit) {
    json j = {{"id", "e" + std::to_string(i)},
              {"text", hit ? "you are an idiot" : "have a nice day"},
              {"label", pos ? "Yes" : "No"}};
    body += j.dump() + "\n";
  };
  for (std::size_t i = 0; i < 10000; ++i) line(i, true, i < 8857);
  for (std::size_t i = 0; i < 10000; ++i) line(10000 + i, false, i < 1551);
  testing::write_file(eval, body);
  std::ostringstream out, err;
  const int rc = cli::main({"fsbias", "keyword-corr", "--task", "target", "--eval", eval.string(),
                            "--lexicon", lex.string(), "--json"},
                           out, err);
  if (rc != 0) return fail("exit " + std::to_string(rc) + ": " + err.str());
  const json row = json::parse(out.str()).at(0);
  const double ratio = row.at("ratio").get<double>();
  if (std::abs(ratio - 5.71) > 0.005) return fail("ratio " + fmt(ratio));
  return {true, "pos " + fmt(row.at("pos_pct").get<double>(), 4) + "%, neg " +
                    fmt(row.at("neg_pct").get<double>(), 4) + "%, ratio " + fmt(ratio, 4)};
}

Outcome determinism() {
  TempDir dir;
  const std::string config = (fs::path(FSBIAS_SOURCE_DIR) / "configs" / "e2e_mock.yaml").string();
  std::vector<fs::path> runs;
  for (const char* name : {"a", "b"}) {
    std::ostringstream out, err;
    const int rc = cli::main({"fsbias", "run", "--config", config, "--out", (dir / name).string()}, out, err);
    if (rc != 0) return fail("run exit " + std::to_string(rc) + ": " + err.str());
    const auto fp_dir = fs::directory_iterator(dir / name)->path();
    runs.push_back(fp_dir / "cells");
  }
  std::size_t files = 0;
  for (const auto& cell : fs::directory_iterator(runs[0])) {
    for (const char* f : {"predictions.jsonl", "metrics.json"}) {
      const auto other = runs[1] / cell.path().filename() / f;
      if (!fs::exists(other) ||
          testing::read_file(cell.path() / f) != testing::read_file(other)) {
        return fail(cell.path().filename().string() + "/" + f + " differs");
      }
      ++files;
    }
  }
  if (files == 0) return fail("no cells written");
  return {true, std::to_string(files) + " files byte-identical"};
}

// Fails the first request, then forwards to the real transport.
class FlakyOnce final : public HttpTransport {
 public:
  explicit FlakyOnce(std::shared_ptr<HttpTransport> inner) : inner_(std::move(inner)) {}
  HttpResponse post(const std::string& url, const std::string& body,
                    const HttpHeaders& headers, std::chrono::milliseconds timeout) override {
    if (!failed_.exchange(true)) throw TransportError("injected failure");
    return inner_->post(url, body, headers, timeout);
  }
  bool failed() const { return failed_; }

 private:
  std::shared_ptr<HttpTransport> inner_;
  std::atomic<bool> failed_{false};
};

Outcome live_smoke(const std::string& endpoint) {
  const E2E e;
  PipelineConfig cfg;
  cfg.task = e.task;
  cfg.selection.k = 0;
  cfg.scorer.backend = ScorerBackend::kHttp;
  cfg.scorer.endpoint = endpoint;
  if (const char* model = std::getenv("FSBIAS_LIVE_MODEL")) cfg.scorer.model = model;
  cfg.scorer.retry.max_attempts = 3;
  cfg.scorer.retry.base_delay = std::chrono::milliseconds(100);
  auto transport = std::make_shared<FlakyOnce>(make_http_transport());
  auto scorer = make_scorer(cfg.scorer, transport);
  const std::vector<Post> five(e.queries.begin(), e.queries.begin() + 5);
  const auto result = run_pipeline(cfg, e.repo, five, *scorer);
  if (!transport->failed()) return fail("injected failure never triggered");
  if (result.records.size() != 5) return fail("completed " + std::to_string(result.records.size()));
  for (const auto& r : result.records) {
    double sum = 0.0;
    for (const auto& c : r.scores.per_class) sum += c.score;
    if (!r.scores.normalized || std::abs(sum - 1.0) > 1e-9) {
      return fail("scores for " + r.query_id + " not normalized");
    }
  }
  return {true, "5 queries scored after one injected failure"};
}

}  // namespace

int main() {
  std::vector<Criterion> criteria{
      {"AC1", "selection oracle equivalence", 5, selection_oracle},
      {"AC2", "TF-IDF matches dense reference", 5, tfidf_oracle},
      {"AC3", "AUC and F1 match oracles", 10, metric_oracles},
      {"AC4", "dedup contract", 2, dedup_contract},
      {"AC5", "end-to-end mock pipeline matches golden", 30, e2e_pipeline},
      {"AC6", "flip perturbation complements predictions", 10, flip_property},
      {"AC7", "stratified selection narrows class similarity gap", 5,
       stratification_property},
      {"AC8", "keyword-correlation arithmetic", 2, keyword_arithmetic},
      {"AC9", "run determinism", 30, determinism},
  };
  const char* endpoint = std::getenv("FSBIAS_LIVE_ENDPOINT");
  if (endpoint != nullptr && *endpoint != '\0') {
    criteria.push_back({"AC10", "live endpoint smoke test", 120,
                        [ep = std::string(endpoint)] { return live_smoke(ep); }});
  }
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && secs > c.budget_s) o = fail(o.detail + "; over " + fmt(c.budget_s) + " s budget");
    failed += !o.ok;
    std::printf("[%s] %s %s: %s (%.2f s)\n", o.ok ? "PASS" : "FAIL", c.id.c_str(),
                c.title.c_str(), o.detail.c_str(), secs);
  }
  if (endpoint == nullptr || *endpoint == '\0') {
    std::printf("[SKIP] AC10 live endpoint smoke test: set FSBIAS_LIVE_ENDPOINT to run\n");
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
