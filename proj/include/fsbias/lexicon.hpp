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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fsbias {

// A keyword list. Terms are matched as whole lowercased tokens; multi-word
// terms match as contiguous token sequences.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::vector<std::string> terms, std::string name = {});

  // UTF-8, one term per line; blank lines and lines starting with '#' are
  // skipped. Throws DataError when unreadable.
  static Lexicon load(const std::filesystem::path& path);

  const std::string& name() const { return name_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const std::vector<std::vector<std::string>>& terms() const { return terms_; }

  // Number of (position, term) matches in `text`.
  std::size_t count_matches(std::string_view text) const;
  bool matches(std::string_view text) const;

 private:
  std::string name_;
  std::vector<std::vector<std::string>> terms_;
  std::map<std::string, std::vector<std::size_t>> by_first_token_;
};

}  // namespace fsbias
