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
#include <string>
#include <string_view>
#include <vector>

namespace fsbias::text {

// Decodes UTF-8 into Unicode scalar values. Ill-formed sequences decode to
// U+FFFD one byte at a time so that every input has a defined length.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

// Number of Unicode scalar values in `s`.
std::size_t char_count(std::string_view s);

// Word characters are ASCII letters and digits plus letters from the Latin-1
// supplement onward; punctuation, symbols and whitespace blocks are excluded.
bool is_word_char(char32_t c);

// Simple case folding for ASCII, Latin-1, Greek and Cyrillic capitals.
char32_t to_lower(char32_t c);
std::string to_lower(std::string_view s);

// Maximal runs of word characters with at least `min_length` scalar values.
std::vector<std::string> word_tokens(std::string_view s, bool lowercase = true,
                                     std::size_t min_length = 1);

std::string_view trim(std::string_view s);
inline bool is_blank(std::string_view s) { return trim(s).empty(); }

}  // namespace fsbias::text
