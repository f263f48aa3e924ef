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

#include "fsbias/embed.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fsbias/error.hpp"
#include "fsbias/text.hpp"

namespace fsbias {
namespace {

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

}  // namespace

SparseVector::SparseVector(std::vector<Entry> entries)
    : entries_(std::move(entries)) {
  double sq = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i > 0 && entries_[i].first <= entries_[i - 1].first) {
      throw UsageError("sparse vector indices must be strictly increasing");
    }
    sq += entries_[i].second * entries_[i].second;
  }
  norm_ = std::sqrt(sq);
}

double SparseVector::dot(const SparseVector& other) const {
  double sum = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      sum += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return sum;
}

SparseVector SparseVector::normalized() const {
  if (norm_ == 0.0) return {};
  std::vector<Entry> scaled = entries_;
  for (auto& [idx, w] : scaled) w /= norm_;
  return SparseVector(std::move(scaled));
}

double cosine(const SparseVector& u, const SparseVector& v) {
  if (u.norm() == 0.0 || v.norm() == 0.0) return 0.0;
  return clamp_unit(u.dot(v) / (u.norm() * v.norm()));
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw UsageError("cosine of vectors with different dimensions");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return clamp_unit(dot / (std::sqrt(nu) * std::sqrt(nv)));
}

double cosine(const Embedding& u, const Embedding& v) {
  if (u.index() != v.index()) {
    throw UsageError("cosine between sparse and dense embeddings");
  }
  if (const auto* su = std::get_if<SparseVector>(&u)) {
    return cosine(*su, std::get<SparseVector>(v));
  }
  return cosine(std::span<const double>(std::get<DenseVector>(u)),
                std::span<const double>(std::get<DenseVector>(v)));
}

std::vector<std::string> tokenize(std::string_view text,
                                  const TokenizerConfig& config) {
  return text::word_tokens(text, config.lowercase,
                           std::max<std::size_t>(1, config.min_token_length));
}

std::optional<std::uint32_t> TfidfModel::index_of(std::string_view term) const {
  auto it = vocabulary_.find(std::string(term));
  if (it == vocabulary_.end()) return std::nullopt;
  return it->second;
}

TfidfModel fit_tfidf(std::span<const std::string> corpus,
                     const TokenizerConfig& config) {
  if (corpus.empty()) throw DataError("cannot fit TF-IDF on an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    auto tokens = tokenize(doc, config);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[std::move(t)];
  }
  TfidfModel model;
  model.n_docs_ = corpus.size();
  model.config_ = config;
  const double n = static_cast<double>(model.n_docs_);
  std::uint32_t next = 0;
  for (const auto& [term, count] : df) {
    model.vocabulary_.emplace(term, next++);
    model.df_.push_back(count);
    model.idf_.push_back(
        std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return model;
}

SparseVector transform(const TfidfModel& model, std::string_view text) {
  std::map<std::uint32_t, std::size_t> counts;
  for (const auto& token : tokenize(text, model.config())) {
    if (auto idx = model.index_of(token)) ++counts[*idx];
  }
  std::vector<SparseVector::Entry> entries;
  entries.reserve(counts.size());
  for (const auto& [idx, tf] : counts) {
    entries.emplace_back(idx, static_cast<double>(tf) * model.idf()[idx]);
  }
  return SparseVector(std::move(entries)).normalized();
}

Embedding EmbeddingProvider::embed_one(const std::string& text) {
  auto out = embed(std::span<const std::string>(&text, 1));
  return std::move(out.front());
}

std::unique_ptr<TfidfProvider> TfidfProvider::fit(const LabeledRepository& repo,
                                                  const TokenizerConfig& config) {
  std::vector<std::string> texts;
  texts.reserve(repo.size());
  for (const auto& p : repo.posts()) texts.push_back(p.text);
  return std::make_unique<TfidfProvider>(fit_tfidf(texts, config));
}

std::vector<Embedding> TfidfProvider::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.emplace_back(transform(model_, t));
  return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(
    RemoteEmbeddingConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.endpoint.empty()) {
    throw UsageError("remote embedding provider needs an endpoint");
  }
  if (config_.dimension == 0) {
    throw UsageError("remote embedding provider needs a positive dimension");
  }
  if (config_.batch_size == 0) config_.batch_size = 1;
  if (config_.max_in_flight == 0) config_.max_in_flight = 1;
  if (!transport_) transport_ = make_http_transport();
}

std::size_t RemoteEmbeddingProvider::cache_size() const {
  std::lock_guard lock(cache_mu_);
  return cache_.size();
}

std::vector<DenseVector> RemoteEmbeddingProvider::fetch_batch(
    std::span<const std::string> texts) {
  using nlohmann::json;
  const json request = {{"model", config_.model},
                        {"input", std::vector<std::string>(texts.begin(),
                                                           texts.end())}};
  const std::string body =
      post_json_with_retries(*transport_, config_.endpoint, request.dump(),
                             auth_headers(config_.api_key), config_.timeout,
                             config_.retry);
  std::vector<DenseVector> out(texts.size());
  std::vector<bool> seen(texts.size(), false);
  try {
    const json response = json::parse(body);
    for (const auto& item : response.at("data")) {
      const auto index = item.at("index").get<std::size_t>();
      if (index >= texts.size() || seen[index]) {
        throw BackendError("embedding response has bad or repeated index " +
                           std::to_string(index));
      }
      auto vec = item.at("embedding").get<DenseVector>();
      if (vec.size() != config_.dimension) {
        throw BackendError("embedding dimension mismatch: expected " +
                           std::to_string(config_.dimension) + ", got " +
                           std::to_string(vec.size()));
      }
      double sq = 0.0;
      for (double v : vec) sq += v * v;
      if (sq > 0.0) {
        const double norm = std::sqrt(sq);
        for (double& v : vec) v /= norm;
      }
      out[index] = std::move(vec);
      seen[index] = true;
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed embedding response: ") +
                       e.what());
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw BackendError("embedding response is missing indices");
  }
  return out;
}

std::vector<Embedding> RemoteEmbeddingProvider::embed(
    std::span<const std::string> texts) {
  // Unique uncached texts, in first-seen order.
  std::vector<std::string> pending;
  {
    std::lock_guard lock(cache_mu_);
    std::unordered_set<std::string_view> queued;
    for (const auto& t : texts) {
      if (!cache_.contains(t) && queued.insert(t).second) pending.push_back(t);
    }
  }
  std::vector<std::span<const std::string>> batches;
  for (std::size_t i = 0; i < pending.size(); i += config_.batch_size) {
    const std::size_t n = std::min(config_.batch_size, pending.size() - i);
    batches.emplace_back(pending.data() + i, n);
  }
  // Waves of at most max_in_flight concurrent requests, merged in order.
  for (std::size_t start = 0; start < batches.size();
       start += config_.max_in_flight) {
    const std::size_t end =
        std::min(batches.size(), start + config_.max_in_flight);
    std::vector<std::future<std::vector<DenseVector>>> wave;
    for (std::size_t b = start; b < end; ++b) {
      wave.push_back(std::async(std::launch::async,
                                [this, batch = batches[b]] {
                                  return fetch_batch(batch);
                                }));
    }
    std::vector<std::vector<DenseVector>> results;
    for (auto& f : wave) results.push_back(f.get());
    std::lock_guard lock(cache_mu_);
    for (std::size_t b = start; b < end; ++b) {
      auto& vecs = results[b - start];
      for (std::size_t i = 0; i < batches[b].size(); ++i) {
        cache_.try_emplace(batches[b][i], std::move(vecs[i]));
      }
    }
  }
  std::vector<Embedding> out;
  out.reserve(texts.size());
  std::lock_guard lock(cache_mu_);
  for (const auto& t : texts) out.emplace_back(cache_.at(t));
  return out;
}

std::vector<double> EmbeddingIndex::similarities(const Embedding& query) const {
  std::vector<double> sims;
  sims.reserve(vectors.size());
  for (const auto& v : vectors) sims.push_back(cosine(query, v));
  return sims;
}

EmbeddingIndex embed_repository(EmbeddingProvider& provider,
                                const LabeledRepository& repo) {
  std::vector<std::string> texts;
  EmbeddingIndex index;
  texts.reserve(repo.size());
  for (const auto& p : repo.posts()) {
    texts.push_back(p.text);
    index.ids.push_back(p.id);
  }
  index.vectors = provider.embed(texts);
  if (index.vectors.size() != texts.size()) {
    throw BackendError("embedding provider returned " +
                       std::to_string(index.vectors.size()) + " vectors for " +
                       std::to_string(texts.size()) + " posts");
  }
  return index;
}

}  // namespace fsbias
