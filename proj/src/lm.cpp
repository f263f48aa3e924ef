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

#include "fsbias/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>

#include "fsbias/error.hpp"
#include "fsbias/text.hpp"

namespace fsbias {
namespace {

using nlohmann::json;

ClassScores from_probabilities(const Prompt& prompt,
                               const std::vector<double>& probs) {
  ClassScores out;
  out.normalized = true;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out.per_class.push_back({prompt.class_labels.at(i), probs[i]});
  }
  return out;
}

void check_candidates(const Prompt& prompt) {
  if (prompt.answer_candidates.size() < 2) {
    throw UsageError("prompt needs at least two answer candidates");
  }
  if (prompt.class_labels.size() != prompt.answer_candidates.size()) {
    throw UsageError("prompt class labels and candidates are misaligned");
  }
}

std::string_view strip_tag(std::string_view line, std::string_view tag) {
  line.remove_prefix(tag.size());
  if (!line.empty() && line.front() == ' ') line.remove_prefix(1);
  return line;
}

// Releases a semaphore slot on scope exit.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) {
    sem_.acquire();
  }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

std::ptrdiff_t slots(unsigned n) { return std::max<std::ptrdiff_t>(1, n); }

}  // namespace

double ClassScores::score_of(std::string_view label) const {
  for (const auto& c : per_class) {
    if (c.label == label) return c.score;
  }
  throw DataError("no score for class '" + std::string(label) + "'");
}

nlohmann::json ClassScores::to_json() const {
  json j = json::object();
  for (const auto& c : per_class) j[c.label] = c.score;
  return j;
}

std::string predict(const ClassScores& scores, const TaskSpec& task) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < task.classes.size(); ++i) {
    const double s = scores.score_of(task.classes[i]);
    if (i == 0 || s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return task.classes[best];
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  if (std::isinf(peak) && peak < 0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return out;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string_view to_string(ScorerBackend b) {
  switch (b) {
    case ScorerBackend::kHttp:
      return "http";
    case ScorerBackend::kEchoCompletion:
      return "echo_completion";
    case ScorerBackend::kMockNearestLabel:
      return "mock_nearest_label";
    case ScorerBackend::kMockKeyword:
      return "mock_keyword";
  }
  return "?";
}

ScorerBackend parse_scorer_backend(std::string_view name) {
  const std::string n = text::to_lower(name);
  if (n == "http") return ScorerBackend::kHttp;
  if (n == "echo_completion" || n == "echo") {
    return ScorerBackend::kEchoCompletion;
  }
  if (n == "mock_nearest_label") return ScorerBackend::kMockNearestLabel;
  if (n == "mock_keyword") return ScorerBackend::kMockKeyword;
  throw UsageError("unknown scorer backend '" + std::string(name) + "'");
}

void ScorerConfig::validate() const {
  if ((backend == ScorerBackend::kHttp ||
       backend == ScorerBackend::kEchoCompletion) &&
      endpoint.empty()) {
    throw UsageError("scorer backend '" + std::string(to_string(backend)) +
                     "' requires an endpoint");
  }
  if (backend == ScorerBackend::kMockKeyword && lexicon.empty()) {
    throw UsageError("mock_keyword scorer requires a non-empty lexicon");
  }
}

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config,
                                    std::shared_ptr<HttpTransport> transport) {
  config.validate();
  ScorerConfig resolved = config;
  if (!resolved.api_key_env.empty()) {
    if (const char* key = std::getenv(resolved.api_key_env.c_str());
        key != nullptr && *key != '\0') {
      resolved.api_key = key;
    }
  }
  if (!transport && (config.backend == ScorerBackend::kHttp ||
                     config.backend == ScorerBackend::kEchoCompletion)) {
    transport = make_http_transport();
  }
  switch (config.backend) {
    case ScorerBackend::kHttp:
      return std::make_unique<HttpScorer>(std::move(resolved),
                                          std::move(transport));
    case ScorerBackend::kEchoCompletion:
      return std::make_unique<EchoCompletionScorer>(std::move(resolved),
                                                    std::move(transport));
    case ScorerBackend::kMockNearestLabel:
      return std::make_unique<NearestLabelMock>();
    case ScorerBackend::kMockKeyword:
      return std::make_unique<KeywordMock>(Lexicon(config.lexicon));
  }
  throw UsageError("unsupported scorer backend");
}

HttpScorer::HttpScorer(ScorerConfig config,
                       std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      in_flight_(slots(config_.max_in_flight)) {}

ClassScores HttpScorer::score(const Prompt& prompt) {
  check_candidates(prompt);
  const json request = {{"model", config_.model},
                        {"prompt", prompt.text},
                        {"candidates", prompt.answer_candidates}};
  std::string body;
  {
    SlotGuard slot(in_flight_);
    body = post_json_with_retries(*transport_,
                                  join_url(config_.endpoint, "/score"),
                                  request.dump(), auth_headers(config_.api_key),
                                  config_.timeout, config_.retry);
  }
  std::vector<double> logprobs;
  try {
    logprobs = json::parse(body).at("logprobs").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed scoring response: ") + e.what());
  }
  if (logprobs.size() != prompt.answer_candidates.size()) {
    throw BackendError("scoring endpoint returned " +
                       std::to_string(logprobs.size()) + " logprobs for " +
                       std::to_string(prompt.answer_candidates.size()) +
                       " candidates");
  }
  return from_probabilities(prompt, softmax(logprobs));
}

EchoCompletionScorer::EchoCompletionScorer(
    ScorerConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      in_flight_(slots(config_.max_in_flight)) {}

double EchoCompletionScorer::candidate_logprob(const std::string& prompt,
                                               const std::string& candidate) {
  const json request = {{"model", config_.model},
                        {"prompt", prompt + config_.candidate_prefix + candidate},
                        {"max_tokens", 0},
                        {"echo", true},
                        {"logprobs", 0}};
  std::string body;
  {
    SlotGuard slot(in_flight_);
    body = post_json_with_retries(
        *transport_, join_url(config_.endpoint, "/completions"),
        request.dump(), auth_headers(config_.api_key), config_.timeout,
        config_.retry);
  }
  try {
    const json lp = json::parse(body).at("choices").at(0).at("logprobs");
    const auto& logprobs = lp.at("token_logprobs");
    const auto& offsets = lp.at("text_offset");
    if (logprobs.size() != offsets.size()) {
      throw BackendError("echo response has misaligned logprobs/offsets");
    }
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      if (offsets[i].get<std::size_t>() < prompt.size()) continue;
      if (logprobs[i].is_null()) {
        throw BackendError("echo response has no logprob for a candidate token");
      }
      total += logprobs[i].get<double>();
      ++used;
    }
    if (used == 0) {
      throw BackendError("echo response holds no tokens for candidate '" +
                         candidate + "'");
    }
    return total;
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed completion response: ") +
                       e.what());
  }
}

ClassScores EchoCompletionScorer::score(const Prompt& prompt) {
  check_candidates(prompt);
  std::vector<double> logprobs;
  for (const auto& c : prompt.answer_candidates) {
    logprobs.push_back(candidate_logprob(prompt.text, c));
  }
  return from_probabilities(prompt, softmax(logprobs));
}

ParsedPrompt parse_prompt(std::string_view text) {
  enum class Field { kNone, kPost, kQuestion, kAnswer };
  std::vector<PromptBlock> blocks;
  Field field = Field::kNone;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    if (line.starts_with(kPostTag)) {
      blocks.push_back({std::string(strip_tag(line, kPostTag)), {}});
      field = Field::kPost;
    } else if (line.starts_with(kQuestionTag)) {
      field = Field::kQuestion;
    } else if (line.starts_with(kAnswerTag)) {
      if (!blocks.empty()) {
        blocks.back().answer = std::string(strip_tag(line, kAnswerTag));
      }
      field = Field::kAnswer;
    } else if (field == Field::kPost && !blocks.empty()) {
      blocks.back().post += '\n';
      blocks.back().post += line;
    }
    start = end + 1;
  }
  ParsedPrompt parsed;
  if (blocks.empty()) return parsed;
  parsed.query = std::move(blocks.back().post);
  blocks.pop_back();
  // A multi-line post ends with the blank separator line; drop it.
  for (auto& b : blocks) {
    while (!b.post.empty() && b.post.back() == '\n') b.post.pop_back();
  }
  parsed.exemplars = std::move(blocks);
  return parsed;
}

double token_jaccard(std::string_view a, std::string_view b) {
  const auto ta = text::word_tokens(a, true, 1);
  const auto tb = text::word_tokens(b, true, 1);
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) /
         static_cast<double>(sa.size() + sb.size() - common);
}

ClassScores NearestLabelMock::score(const Prompt& prompt) {
  check_candidates(prompt);
  const std::size_t n = prompt.answer_candidates.size();
  const ParsedPrompt parsed = parse_prompt(prompt.text);
  std::optional<std::size_t> best_class;
  double best = -1.0;
  for (const auto& block : parsed.exemplars) {
    auto it = std::find(prompt.answer_candidates.begin(),
                        prompt.answer_candidates.end(), block.answer);
    if (it == prompt.answer_candidates.end()) continue;
    const double j = token_jaccard(block.post, parsed.query);
    if (j >= best) {
      best = j;
      best_class =
          static_cast<std::size_t>(it - prompt.answer_candidates.begin());
    }
  }
  std::vector<double> probs(n, 1.0 / static_cast<double>(n));
  if (best_class) {
    std::fill(probs.begin(), probs.end(), 0.1 / static_cast<double>(n - 1));
    probs[*best_class] = 0.9;
  }
  return from_probabilities(prompt, probs);
}

ClassScores KeywordMock::score(const Prompt& prompt) {
  check_candidates(prompt);
  if (prompt.answer_candidates.size() != 2) {
    throw UsageError("mock_keyword scorer only handles binary tasks");
  }
  const ParsedPrompt parsed = parse_prompt(prompt.text);
  const double h = static_cast<double>(lexicon_.count_matches(parsed.query)) - 0.5;
  const double p = sigmoid(h);
  return from_probabilities(prompt, {p, 1.0 - p});
}

}  // namespace fsbias
