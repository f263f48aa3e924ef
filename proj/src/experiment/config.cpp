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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "fsbias/error.hpp"
#include "fsbias/experiment.hpp"
#include "fsbias/random.hpp"

namespace fsbias {
namespace {

using nlohmann::json;

void check_keys(const YAML::Node& node, std::string_view section,
                std::initializer_list<std::string_view> allowed) {
  if (!node) return;
  if (!node.IsMap()) {
    throw UsageError("config section '" + std::string(section) +
                     "' must be a mapping");
  }
  std::set<std::string> seen;
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw UsageError("unknown config key '" + std::string(section) + "." +
                       key + "'");
    }
    if (!seen.insert(key).second) {
      throw UsageError("duplicate config key '" + std::string(section) + "." +
                       key + "'");
    }
  }
}

template <typename T>
T get(const YAML::Node& node, std::string_view key, T fallback) {
  const auto child = node[std::string(key)];
  if (!child || child.IsNull()) return fallback;
  try {
    return child.as<T>();
  } catch (const YAML::Exception& e) {
    throw UsageError("config key '" + std::string(key) + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

DataSource parse_source(const YAML::Node& node, std::string_view section,
                        const std::filesystem::path& base) {
  if (!node) {
    throw UsageError("config needs a '" + std::string(section) + "' section");
  }
  if (node.IsScalar()) {
    auto path = resolve(base, node.as<std::string>());
    return {path, input_format_for(path)};
  }
  check_keys(node, section, {"path", "format"});
  const auto p = get<std::string>(node, "path", "");
  if (p.empty()) {
    throw UsageError("config '" + std::string(section) + ".path' is required");
  }
  DataSource src{resolve(base, p), InputFormat::kJsonl};
  const auto fmt = get<std::string>(node, "format", "");
  src.format = fmt.empty() ? input_format_for(src.path) : parse_input_format(fmt);
  return src;
}

PromptAblation parse_ablation(const YAML::Node& node, std::string_view section) {
  check_keys(node, section,
             {"shot_text", "definition", "query", "shot_labels", "name"});
  PromptAblation a;
  if (!node) return a;
  a.include_shot_text = get<bool>(node, "shot_text", true);
  a.include_definition = get<bool>(node, "definition", true);
  a.include_query = get<bool>(node, "query", true);
  a.include_shot_labels = get<bool>(node, "shot_labels", true);
  a.validate();
  return a;
}

RetryPolicy parse_retry(const YAML::Node& node) {
  RetryPolicy r;
  r.max_attempts = get<int>(node, "max_retries", r.max_attempts);
  r.base_delay = std::chrono::milliseconds(
      get<long long>(node, "backoff_ms", r.base_delay.count()));
  if (r.max_attempts < 1) throw UsageError("max_retries must be >= 1");
  return r;
}

std::vector<std::size_t> parse_k_values(const YAML::Node& node) {
  std::vector<std::size_t> out;
  if (!node) return out;
  if (node.IsMap()) {
    check_keys(node, "sweep.k_values", {"from", "to", "step"});
    const auto from = get<std::size_t>(node, "from", 0);
    const auto to = get<std::size_t>(node, "to", 0);
    const auto step = get<std::size_t>(node, "step", 0);
    if (step == 0 || to < from) {
      throw UsageError("sweep.k_values range needs from <= to and step > 0");
    }
    for (std::size_t k = from; k <= to; k += step) out.push_back(k);
    return out;
  }
  try {
    return node.as<std::vector<std::size_t>>();
  } catch (const YAML::Exception& e) {
    throw UsageError(std::string("sweep.k_values: ") + e.what());
  }
}

json ablation_json(const PromptAblation& a) {
  return {{"shot_text", a.include_shot_text},
          {"definition", a.include_definition},
          {"query", a.include_query},
          {"shot_labels", a.include_shot_labels}};
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& yaml,
                                         const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw UsageError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw UsageError("config must be a YAML mapping");
  check_keys(root, "<root>",
             {"task", "repository", "eval", "dedup", "selection", "ablation",
              "scorer", "embedding", "sweep", "analysis", "run"});

  ExperimentConfig cfg;
  const auto task_name = get<std::string>(root, "task", "");
  if (task_name.empty()) throw UsageError("config needs a 'task'");
  {
    // A relative task file resolves against the config directory.
    const auto candidate = resolve(base_dir, task_name);
    cfg.pipeline.task = std::filesystem::exists(candidate)
                            ? load_task_spec(candidate)
                            : builtin_task(task_name);
  }
  cfg.repository = parse_source(root["repository"], "repository", base_dir);
  cfg.eval = parse_source(root["eval"], "eval", base_dir);

  if (const auto d = root["dedup"]) {
    check_keys(d, "dedup", {"enabled", "threshold", "denominator"});
    cfg.dedup = get<bool>(d, "enabled", true);
    cfg.dedup_options.threshold = get<double>(d, "threshold", 0.1);
    cfg.dedup_options.denominator =
        parse_ratio_denominator(get<std::string>(d, "denominator", "sum"));
    if (!(cfg.dedup_options.threshold > 0 && cfg.dedup_options.threshold <= 1)) {
      throw UsageError("dedup.threshold must lie in (0, 1]");
    }
  }

  auto& sel = cfg.pipeline.selection;
  if (const auto s = root["selection"]) {
    check_keys(s, "selection", {"strategy", "k", "seed", "perturbation", "order"});
    sel.strategy = parse_strategy(get<std::string>(s, "strategy", "similarity_balanced"));
    sel.k = get<std::size_t>(s, "k", 32);
    sel.seed = get<std::uint64_t>(s, "seed", 0);
    sel.perturbation = parse_perturbation(get<std::string>(s, "perturbation", "none"));
    sel.order = parse_shot_order(get<std::string>(s, "order", "interleaved_ascending"));
  }
  cfg.pipeline.ablation = parse_ablation(root["ablation"], "ablation");

  auto& sc = cfg.pipeline.scorer;
  if (const auto s = root["scorer"]) {
    check_keys(s, "scorer",
               {"backend", "endpoint", "model", "timeout_ms", "max_retries",
                "backoff_ms", "max_in_flight", "lexicon", "candidate_prefix",
                "api_key_env"});
    sc.backend = parse_scorer_backend(get<std::string>(s, "backend", "mock_nearest_label"));
    sc.endpoint = get<std::string>(s, "endpoint", "");
    sc.model = get<std::string>(s, "model", "");
    sc.timeout = std::chrono::milliseconds(get<long long>(s, "timeout_ms", 60000));
    sc.retry = parse_retry(s);
    sc.max_in_flight = get<unsigned>(s, "max_in_flight", 4);
    sc.candidate_prefix = get<std::string>(s, "candidate_prefix", " ");
    sc.api_key_env = get<std::string>(s, "api_key_env", "FSBIAS_API_KEY");
    if (const auto lex = get<std::string>(s, "lexicon", ""); !lex.empty()) {
      const Lexicon loaded = Lexicon::load(resolve(base_dir, lex));
      for (const auto& term : loaded.terms()) {
        std::string joined;
        for (const auto& t : term) joined += (joined.empty() ? "" : " ") + t;
        sc.lexicon.push_back(std::move(joined));
      }
    }
  }

  auto& pv = cfg.pipeline.provider;
  if (const auto e = root["embedding"]) {
    check_keys(e, "embedding",
               {"provider", "lowercase", "min_token_length", "endpoint",
                "model", "dimension", "batch_size", "max_in_flight",
                "timeout_ms", "max_retries", "backoff_ms", "api_key_env"});
    const auto kind = get<std::string>(e, "provider", "tfidf");
    if (kind == "tfidf") {
      pv.kind = EmbeddingKind::kTfidf;
    } else if (kind == "remote") {
      pv.kind = EmbeddingKind::kRemote;
    } else {
      throw UsageError("embedding.provider must be tfidf or remote");
    }
    pv.tokenizer.lowercase = get<bool>(e, "lowercase", true);
    pv.tokenizer.min_token_length = get<std::size_t>(e, "min_token_length", 2);
    pv.remote.endpoint = get<std::string>(e, "endpoint", "");
    pv.remote.model = get<std::string>(e, "model", "");
    pv.remote.dimension = get<std::size_t>(e, "dimension", 0);
    pv.remote.batch_size = get<std::size_t>(e, "batch_size", 32);
    pv.remote.max_in_flight = get<unsigned>(e, "max_in_flight", 4);
    pv.remote.timeout = std::chrono::milliseconds(get<long long>(e, "timeout_ms", 30000));
    pv.remote.retry = parse_retry(e);
    const auto env = get<std::string>(e, "api_key_env", "FSBIAS_API_KEY");
    if (const char* key = std::getenv(env.c_str()); key != nullptr) {
      pv.remote.api_key = key;
    }
    if (pv.kind == EmbeddingKind::kRemote &&
        (pv.remote.endpoint.empty() || pv.remote.dimension == 0)) {
      throw UsageError("remote embedding needs endpoint and dimension");
    }
  }

  if (const auto s = root["sweep"]) {
    check_keys(s, "sweep",
               {"k_values", "repo_sizes", "seeds", "perturbations", "ablations"});
    cfg.sweep.k_values = parse_k_values(s["k_values"]);
    cfg.sweep.repo_sizes = get<std::vector<std::size_t>>(s, "repo_sizes", {});
    cfg.sweep.seeds = get<std::vector<std::uint64_t>>(s, "seeds", {});
    for (const auto& p : get<std::vector<std::string>>(s, "perturbations", {})) {
      cfg.sweep.perturbations.push_back(parse_perturbation(p));
    }
    if (const auto abl = s["ablations"]) {
      if (!abl.IsSequence()) throw UsageError("sweep.ablations must be a list");
      for (const auto& a : abl) {
        cfg.sweep.ablations.push_back(parse_ablation(a, "sweep.ablations[]"));
      }
    }
  }

  if (const auto a = root["analysis"]) {
    check_keys(a, "analysis", {"lexicon"});
    if (const auto lex = get<std::string>(a, "lexicon", ""); !lex.empty()) {
      cfg.error_lexicon = resolve(base_dir, lex);
    }
  }

  if (const auto r = root["run"]) {
    check_keys(r, "run", {"workers", "parallel", "save_prompts", "skip_failed"});
    cfg.pipeline.workers = get<unsigned>(r, "workers", 1);
    cfg.parallel = get<bool>(r, "parallel", false);
    cfg.save_prompts = get<bool>(r, "save_prompts", false);
    cfg.pipeline.skip_failed = get<bool>(r, "skip_failed", false);
  }

  resolve_sweep(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path());
}

void resolve_sweep(ExperimentConfig& config) {
  const auto& p = config.pipeline;
  auto& s = config.sweep;
  if (s.k_values.empty()) s.k_values = {p.selection.k};
  if (s.seeds.empty()) s.seeds = {p.selection.seed};
  if (s.perturbations.empty()) s.perturbations = {p.selection.perturbation};
  if (s.ablations.empty()) s.ablations = {p.ablation};
  std::sort(s.repo_sizes.begin(), s.repo_sizes.end(), std::greater<>());
  s.repo_sizes.erase(std::unique(s.repo_sizes.begin(), s.repo_sizes.end()),
                     s.repo_sizes.end());
}

nlohmann::json ExperimentConfig::semantic_json() const {
  const auto& p = pipeline;
  json perts = json::array();
  for (auto x : sweep.perturbations) perts.push_back(to_string(x));
  json abls = json::array();
  for (const auto& a : sweep.ablations) abls.push_back(ablation_json(a));
  json provider;
  if (p.provider.kind == EmbeddingKind::kTfidf) {
    provider = {{"kind", "tfidf"},
                {"lowercase", p.provider.tokenizer.lowercase},
                {"min_token_length", p.provider.tokenizer.min_token_length}};
  } else {
    provider = {{"kind", "remote"},
                {"endpoint", p.provider.remote.endpoint},
                {"model", p.provider.remote.model},
                {"dimension", p.provider.remote.dimension}};
  }
  json j = {
      {"task", task_to_json(p.task)},
      {"repository", repository.path.lexically_normal().string()},
      {"eval", eval.path.lexically_normal().string()},
      {"dedup",
       {{"enabled", dedup},
        {"threshold", dedup_options.threshold},
        {"denominator", dedup_options.denominator == RatioDenominator::kSum
                            ? "sum"
                            : "product"}}},
      {"selection",
       {{"strategy", to_string(p.selection.strategy)},
        {"order", to_string(p.selection.order)}}},
      {"scorer",
       {{"backend", to_string(p.scorer.backend)},
        {"endpoint", p.scorer.endpoint},
        {"model", p.scorer.model},
        {"candidate_prefix", p.scorer.candidate_prefix},
        {"lexicon", p.scorer.lexicon}}},
      {"embedding", provider},
      {"sweep",
       {{"k_values", sweep.k_values},
        {"repo_sizes", sweep.repo_sizes},
        {"seeds", sweep.seeds},
        {"perturbations", perts},
        {"ablations", abls}}},
  };
  if (error_lexicon) {
    j["analysis"] = {{"lexicon", error_lexicon->lexically_normal().string()}};
  }
  return j;
}

std::string ExperimentConfig::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(semantic_json().dump())));
  return buf;
}

std::string Cell::group_id() const {
  std::string out = "n-" + (repo_size ? std::to_string(*repo_size) : "full");
  out += "_k-" + std::to_string(k);
  out += "_pert-" + std::string(to_string(perturbation));
  out += "_abl-" + ablation.name();
  return out;
}

std::string Cell::id() const {
  std::string out = "n-" + (repo_size ? std::to_string(*repo_size) : "full");
  out += "_k-" + std::to_string(k);
  out += "_seed-" + std::to_string(seed);
  out += "_pert-" + std::string(to_string(perturbation));
  out += "_abl-" + ablation.name();
  return out;
}

std::vector<Cell> enumerate_cells(const ExperimentConfig& config) {
  const auto& sweep = config.sweep;
  const Strategy strategy = config.pipeline.selection.strategy;
  const bool random_strategy =
      strategy == Strategy::kRandom || strategy == Strategy::kRandomBalanced;

  std::vector<std::optional<std::size_t>> sizes{std::nullopt};
  for (auto n : sweep.repo_sizes) sizes.emplace_back(n);

  std::vector<Cell> cells;
  for (const auto& size : sizes) {
    for (auto k : sweep.k_values) {
      for (auto pert : sweep.perturbations) {
        for (const auto& abl : sweep.ablations) {
          const bool seeded = size.has_value() ||
                              (k > 0 && (random_strategy ||
                                         pert == Perturbation::kRandomHalf));
          for (auto seed : sweep.seeds) {
            cells.push_back(Cell{size, seed, k, pert, abl});
            if (!seeded) break;
          }
        }
      }
    }
  }
  return cells;
}

}  // namespace fsbias
