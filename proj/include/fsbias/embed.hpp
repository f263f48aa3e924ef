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
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "fsbias/corpus.hpp"
#include "fsbias/http.hpp"

namespace fsbias {

// Sparse vector with strictly increasing term indices.
class SparseVector {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  SparseVector() = default;
  // Throws UsageError unless indices are strictly increasing.
  explicit SparseVector(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  double norm() const { return norm_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  double dot(const SparseVector& other) const;
  // Unit-norm copy; the zero vector stays zero.
  SparseVector normalized() const;

 private:
  std::vector<Entry> entries_;
  double norm_ = 0.0;
};

using DenseVector = std::vector<double>;
using Embedding = std::variant<SparseVector, DenseVector>;

// dot(u, v) / (|u| |v|), clamped to [-1, 1]; 0 when either norm is 0.
double cosine(const SparseVector& u, const SparseVector& v);
double cosine(std::span<const double> u, std::span<const double> v);
// Throws UsageError when the two embeddings are of different kinds.
double cosine(const Embedding& u, const Embedding& v);

// Lowercasing plus the token pattern "runs of >= min_token_length word
// characters". Unigrams only.
struct TokenizerConfig {
  bool lowercase = true;
  std::size_t min_token_length = 2;

  friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

std::vector<std::string> tokenize(std::string_view text,
                                  const TokenizerConfig& config);

class TfidfModel {
 public:
  const std::map<std::string, std::uint32_t>& vocabulary() const {
    return vocabulary_;
  }
  // Indexed by term index; term indices follow sorted term order.
  const std::vector<std::size_t>& document_frequency() const { return df_; }
  const std::vector<double>& idf() const { return idf_; }
  std::size_t n_docs() const { return n_docs_; }
  const TokenizerConfig& config() const { return config_; }

  std::optional<std::uint32_t> index_of(std::string_view term) const;

 private:
  friend TfidfModel fit_tfidf(std::span<const std::string> corpus,
                              const TokenizerConfig& config);

  std::map<std::string, std::uint32_t> vocabulary_;
  std::vector<std::size_t> df_;
  std::vector<double> idf_;
  std::size_t n_docs_ = 0;
  TokenizerConfig config_;
};

// Document frequencies count each term at most once per document; idf uses
// the smoothed form ln((1 + n) / (1 + df)) + 1. Throws DataError on an
// empty corpus.
TfidfModel fit_tfidf(std::span<const std::string> corpus,
                     const TokenizerConfig& config = {});

// Raw term counts times idf, L2-normalized. Out-of-vocabulary tokens are
// dropped, so all-unknown text maps to the zero vector.
SparseVector transform(const TfidfModel& model, std::string_view text);

// Maps texts to vectors. Implementations must return identical vectors for
// identical texts within a run.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
  Embedding embed_one(const std::string& text);
  virtual std::string name() const = 0;
};

class TfidfProvider final : public EmbeddingProvider {
 public:
  explicit TfidfProvider(TfidfModel model) : model_(std::move(model)) {}

  // Fits on the repository texts only; queries are transform-only.
  static std::unique_ptr<TfidfProvider> fit(const LabeledRepository& repo,
                                            const TokenizerConfig& config = {});

  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::string name() const override { return "tfidf"; }
  const TfidfModel& model() const { return model_; }

 private:
  TfidfModel model_;
};

struct RemoteEmbeddingConfig {
  std::string endpoint;  // full URL receiving the POST
  std::string model;
  std::size_t dimension = 0;
  std::size_t batch_size = 32;
  unsigned max_in_flight = 4;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  std::string api_key;
};

// Dense embeddings from an HTTP endpoint:
//   POST {"model": m, "input": [texts]} -> {"data": [{"index", "embedding"}]}
// Vectors are L2-normalized on receipt and cached by text.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config,
                                   std::shared_ptr<HttpTransport> transport =
                                       nullptr);

  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::string name() const override { return "remote:" + config_.model; }
  std::size_t cache_size() const;

 private:
  std::vector<DenseVector> fetch_batch(std::span<const std::string> texts);

  RemoteEmbeddingConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  mutable std::mutex cache_mu_;
  std::unordered_map<std::string, DenseVector> cache_;
};

// One vector per repository post, aligned with repository order.
struct EmbeddingIndex {
  std::vector<std::string> ids;
  std::vector<Embedding> vectors;

  std::size_t size() const { return ids.size(); }
  std::vector<double> similarities(const Embedding& query) const;
};

EmbeddingIndex embed_repository(EmbeddingProvider& provider,
                                const LabeledRepository& repo);

}  // namespace fsbias
