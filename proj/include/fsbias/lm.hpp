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

#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsbias/http.hpp"
#include "fsbias/lexicon.hpp"
#include "fsbias/prompt.hpp"
#include "fsbias/task.hpp"

namespace fsbias {

struct ClassScore {
  std::string label;
  double score = 0.0;
};

// Per-class probabilities for one prompt, in task class order.
struct ClassScores {
  std::vector<ClassScore> per_class;
  bool normalized = false;

  // Throws DataError for an unknown label.
  double score_of(std::string_view label) const;
  nlohmann::json to_json() const;
};

// Argmax; exact ties go to the class listed first in the task. Throws
// DataError when a task class is missing from `scores`.
std::string predict(const ClassScores& scores, const TaskSpec& task);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);
double sigmoid(double x);

enum class ScorerBackend {
  kHttp,            // POST {endpoint}/score
  kEchoCompletion,  // one echo completion per candidate
  kMockNearestLabel,
  kMockKeyword,
};

std::string_view to_string(ScorerBackend b);
ScorerBackend parse_scorer_backend(std::string_view name);

struct ScorerConfig {
  ScorerBackend backend = ScorerBackend::kMockNearestLabel;
  std::string endpoint;
  std::string model;
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  unsigned max_in_flight = 4;
  std::string api_key;
  // When set and present in the environment, overrides api_key.
  std::string api_key_env = "FSBIAS_API_KEY";
  // Inserted between prompt and candidate by the echo adapter.
  std::string candidate_prefix = " ";
  // Terms for the keyword mock.
  std::vector<std::string> lexicon;

  void validate() const;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  // One probability per answer candidate. Thread-safe.
  virtual ClassScores score(const Prompt& prompt) = 0;
  virtual std::string name() const = 0;
};

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config,
                                    std::shared_ptr<HttpTransport> transport =
                                        nullptr);

// Canonical remote contract:
//   POST {endpoint}/score {"model", "prompt", "candidates"} -> {"logprobs"}
// Log-probabilities are softmaxed over the candidates.
class HttpScorer final : public Scorer {
 public:
  HttpScorer(ScorerConfig config, std::shared_ptr<HttpTransport> transport);
  ClassScores score(const Prompt& prompt) override;
  std::string name() const override { return "http:" + config_.model; }

 private:
  ScorerConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::counting_semaphore<> in_flight_;
};

// Adapter for completion APIs that echo prompt logprobs: for each candidate,
// POST {endpoint}/completions with prompt + prefix + candidate, echo=true,
// max_tokens=0, and sum the logprobs of tokens at or past the prompt's end.
class EchoCompletionScorer final : public Scorer {
 public:
  EchoCompletionScorer(ScorerConfig config,
                       std::shared_ptr<HttpTransport> transport);
  ClassScores score(const Prompt& prompt) override;
  std::string name() const override { return "echo:" + config_.model; }

 private:
  double candidate_logprob(const std::string& prompt,
                           const std::string& candidate);

  ScorerConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::counting_semaphore<> in_flight_;
};

// Copies the presented label of the exemplar whose post text has the highest
// token Jaccard overlap with the query: 0.9 to that label, 0.1 split evenly
// over the rest. Ties go to the exemplar closest to the query. No exemplars
// gives uniform scores.
class NearestLabelMock final : public Scorer {
 public:
  ClassScores score(const Prompt& prompt) override;
  std::string name() const override { return "mock_nearest_label"; }
};

// Binary only: p(positive) = sigmoid(matches - 0.5), where matches counts
// lexicon hits in the query post.
class KeywordMock final : public Scorer {
 public:
  explicit KeywordMock(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}
  ClassScores score(const Prompt& prompt) override;
  std::string name() const override { return "mock_keyword"; }

 private:
  Lexicon lexicon_;
};

// Tag-structured view of an assembled prompt, as the mocks read it.
struct PromptBlock {
  std::string post;
  std::string answer;
};

struct ParsedPrompt {
  std::vector<PromptBlock> exemplars;
  std::string query;
};

ParsedPrompt parse_prompt(std::string_view text);

// |A n B| / |A u B| over lowercased word tokens; 0 when both are empty.
double token_jaccard(std::string_view a, std::string_view b);

}  // namespace fsbias
