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

#include "fsbias/lexicon.hpp"

#include <algorithm>
#include <fstream>

#include "fsbias/error.hpp"
#include "fsbias/text.hpp"

namespace fsbias {

Lexicon::Lexicon(std::vector<std::string> terms, std::string name)
    : name_(std::move(name)) {
  for (const auto& term : terms) {
    auto tokens = text::word_tokens(term, true, 1);
    if (tokens.empty()) continue;
    if (std::find(terms_.begin(), terms_.end(), tokens) != terms_.end()) {
      continue;
    }
    by_first_token_[tokens.front()].push_back(terms_.size());
    terms_.push_back(std::move(tokens));
  }
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    terms.emplace_back(t);
  }
  return Lexicon(std::move(terms), path.stem().string());
}

std::size_t Lexicon::count_matches(std::string_view text) const {
  const auto tokens = text::word_tokens(text, true, 1);
  std::size_t count = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = by_first_token_.find(tokens[i]);
    if (it == by_first_token_.end()) continue;
    for (std::size_t t : it->second) {
      const auto& term = terms_[t];
      if (i + term.size() <= tokens.size() &&
          std::equal(term.begin(), term.end(),
                     tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
        ++count;
      }
    }
  }
  return count;
}

bool Lexicon::matches(std::string_view text) const {
  return count_matches(text) > 0;
}

}  // namespace fsbias
