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

#include "fsbias/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fsbias/error.hpp"
#include "fsbias/parallel.hpp"
#include "fsbias/random.hpp"
#include "fsbias/text.hpp"

namespace fsbias {
namespace {

using nlohmann::json;

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

// RFC 4180 reader. Yields one record at a time together with the line on
// which it starts; quoted fields may span lines.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string>& fields, std::size_t& start_line) {
    fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    start_line = line_;
    std::string field;
    bool quoted = false;
    bool after_quote = false;
    for (;; c = in_.get()) {
      if (quoted) {
        if (c == EOF) {
          throw DataError("line " + std::to_string(start_line) +
                          ": unterminated quoted field");
        }
        if (c == '"') {
          if (in_.peek() == '"') {
            field.push_back('"');
            in_.get();
          } else {
            quoted = false;
            after_quote = true;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(static_cast<char>(c));
        }
        continue;
      }
      if (c == EOF || c == '\n' || c == '\r') {
        if (c == '\r' && in_.peek() == '\n') in_.get();
        if (c != EOF) ++line_;
        fields.push_back(std::move(field));
        return true;
      }
      if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        after_quote = false;
      } else if (c == '"' && field.empty() && !after_quote) {
        quoted = true;
      } else if (after_quote) {
        throw DataError("line " + std::to_string(line_) +
                        ": characters after closing quote");
      } else {
        field.push_back(static_cast<char>(c));
      }
    }
  }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

void check_post(const Post& post, const TaskSpec& task, bool require_label) {
  if (post.id.empty()) throw DataError("record has an empty id");
  if (text::is_blank(post.text)) {
    throw DataError("record '" + post.id + "' has blank text");
  }
  if (!post.label) {
    if (require_label) {
      throw DataError("record '" + post.id + "' has no label");
    }
    return;
  }
  if (!task.has_class(*post.label)) {
    throw DataError("record '" + post.id + "' has unknown label '" +
                    *post.label + "' for task '" + task.name + "'");
  }
}

std::vector<Post> read_jsonl(const std::filesystem::path& path,
                             const TaskSpec& task, bool require_label) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Post> posts;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    Post post;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw DataError("record is not a JSON object");
      post.id = j.at("id").get<std::string>();
      post.text = j.at("text").get<std::string>();
      if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
        post.label = it->get<std::string>();
      }
      check_post(post, task, require_label);
    } catch (const json::exception& e) {
      throw DataError(where(path, line_no) + "malformed record: " + e.what());
    } catch (const DataError& e) {
      throw DataError(where(path, line_no) + e.what());
    }
    if (!ids.insert(post.id).second) {
      throw DataError(where(path, line_no) + "duplicate id '" + post.id + "'");
    }
    posts.push_back(std::move(post));
  }
  return posts;
}

std::vector<Post> read_csv(const std::filesystem::path& path,
                           const TaskSpec& task, bool require_label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  CsvReader reader(in);
  std::vector<std::string> fields;
  std::size_t line_no = 0;
  std::vector<Post> posts;
  try {
    if (!reader.next(fields, line_no)) return posts;
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (text::trim(fields[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = column("id");
  const auto text_col = column("text");
  const auto label_col = column("label");
  if (!id_col || !text_col || (require_label && !label_col)) {
    throw DataError(where(path, 1) + "header must name columns id,text,label");
  }
  const std::size_t width = fields.size();
  std::set<std::string> ids;
  for (;;) {
    try {
      if (!reader.next(fields, line_no)) break;
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != width) {
      throw DataError(where(path, line_no) + "malformed record: expected " +
                      std::to_string(width) + " fields, got " +
                      std::to_string(fields.size()));
    }
    Post post{fields[*id_col], fields[*text_col], std::nullopt};
    if (label_col && !fields[*label_col].empty()) {
      post.label = fields[*label_col];
    }
    try {
      check_post(post, task, require_label);
    } catch (const DataError& e) {
      throw DataError(where(path, line_no) + e.what());
    }
    if (!ids.insert(post.id).second) {
      throw DataError(where(path, line_no) + "duplicate id '" + post.id + "'");
    }
    posts.push_back(std::move(post));
  }
  return posts;
}

double ratio_from_distance(std::size_t distance, std::size_t len_q,
                           std::size_t len_x, RatioDenominator denominator) {
  const double twice = 2.0 * static_cast<double>(distance);
  if (denominator == RatioDenominator::kSum) {
    return twice / static_cast<double>(len_q + len_x);
  }
  const double product =
      static_cast<double>(len_q) * static_cast<double>(len_x);
  if (product == 0.0) return std::numeric_limits<double>::infinity();
  return twice / product;
}

// Largest distance that could still give a ratio below `limit`.
std::size_t distance_budget(double limit, std::size_t len_q, std::size_t len_x,
                            RatioDenominator denominator) {
  const double denom =
      denominator == RatioDenominator::kSum
          ? static_cast<double>(len_q + len_x)
          : static_cast<double>(len_q) * static_cast<double>(len_x);
  const double bound = std::floor(limit * denom / 2.0);
  const double cap = static_cast<double>(std::max(len_q, len_x));
  return static_cast<std::size_t>(std::min(bound, cap));
}

}  // namespace

LabeledRepository::LabeledRepository(std::string task_name,
                                     std::vector<std::string> classes,
                                     std::vector<Post> posts)
    : task_name_(std::move(task_name)),
      classes_(std::move(classes)),
      posts_(std::move(posts)) {
  for (const auto& c : classes_) class_counts_[c] = 0;
  std::set<std::string_view> ids;
  for (const auto& post : posts_) {
    if (!post.label) {
      throw DataError("repository post '" + post.id + "' has no label");
    }
    auto it = class_counts_.find(*post.label);
    if (it == class_counts_.end()) {
      throw DataError("repository post '" + post.id + "' has unknown label '" +
                      *post.label + "'");
    }
    if (text::is_blank(post.text)) {
      throw DataError("repository post '" + post.id + "' has blank text");
    }
    if (!ids.insert(post.id).second) {
      throw DataError("duplicate repository id '" + post.id + "'");
    }
    ++it->second;
  }
}

std::vector<std::size_t> LabeledRepository::members_of(
    std::string_view label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    if (*posts_[i].label == label) out.push_back(i);
  }
  return out;
}

LabeledRepository LabeledRepository::subset(
    std::vector<std::size_t> positions) const {
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()),
                  positions.end());
  std::vector<Post> kept;
  kept.reserve(positions.size());
  for (std::size_t i : positions) kept.push_back(posts_.at(i));
  return LabeledRepository(task_name_, classes_, std::move(kept));
}

InputFormat parse_input_format(std::string_view name) {
  const std::string lowered = text::to_lower(name);
  if (lowered == "jsonl") return InputFormat::kJsonl;
  if (lowered == "csv") return InputFormat::kCsv;
  throw UsageError("unknown input format '" + std::string(name) +
                   "' (expected jsonl or csv)");
}

InputFormat input_format_for(const std::filesystem::path& path) {
  return text::to_lower(path.extension().string()) == ".csv"
             ? InputFormat::kCsv
             : InputFormat::kJsonl;
}

std::vector<Post> load_posts(const std::filesystem::path& path,
                             InputFormat format, const TaskSpec& task,
                             bool require_label) {
  return format == InputFormat::kCsv ? read_csv(path, task, require_label)
                                     : read_jsonl(path, task, require_label);
}

LabeledRepository load_repository(const std::filesystem::path& path,
                                  InputFormat format, const TaskSpec& task) {
  return LabeledRepository::from_posts(task,
                                       load_posts(path, format, task, true));
}

nlohmann::json post_to_json(const Post& post) {
  json j = {{"id", post.id}, {"text", post.text}};
  if (post.label) j["label"] = *post.label;
  return j;
}

void write_posts_jsonl(const std::filesystem::path& path,
                       std::span<const Post> posts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& post : posts) out << post_to_json(post).dump() << '\n';
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  return edit_distance(text::decode_utf8(a), text::decode_utf8(b));
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1,
                         diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::optional<std::size_t> edit_distance_within(std::u32string_view a,
                                                std::u32string_view b,
                                                std::size_t bound) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if ((n > m ? n - m : m - n) > bound) return std::nullopt;
  const std::size_t inf = bound + 1;
  std::vector<std::size_t> prev(m + 1, inf);
  std::vector<std::size_t> cur(m + 1, inf);
  for (std::size_t j = 0; j <= std::min(m, bound); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > bound ? i - bound : 0;
    const std::size_t hi = std::min(m, i + bound);
    std::fill(cur.begin(), cur.end(), inf);
    if (lo == 0) cur[0] = i <= bound ? i : inf;
    std::size_t row_min = cur[0];
    for (std::size_t j = std::max<std::size_t>(lo, 1); j <= hi; ++j) {
      std::size_t best = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      best = std::min(best, prev[j] + 1);
      best = std::min(best, cur[j - 1] + 1);
      cur[j] = std::min(best, inf);
      row_min = std::min(row_min, cur[j]);
    }
    if (row_min > bound) return std::nullopt;
    std::swap(prev, cur);
  }
  if (prev[m] > bound) return std::nullopt;
  return prev[m];
}

RatioDenominator parse_ratio_denominator(std::string_view name) {
  const std::string lowered = text::to_lower(name);
  if (lowered == "sum") return RatioDenominator::kSum;
  if (lowered == "product") return RatioDenominator::kProduct;
  throw UsageError("unknown ratio denominator '" + std::string(name) +
                   "' (expected sum or product)");
}

double dedup_ratio(std::string_view q, std::string_view x,
                   RatioDenominator denominator) {
  const auto qc = text::decode_utf8(q);
  const auto xc = text::decode_utf8(x);
  if (qc.empty() && xc.empty()) {
    throw DataError("dedup ratio is undefined for two empty strings");
  }
  return ratio_from_distance(edit_distance(qc, xc), qc.size(), xc.size(),
                             denominator);
}

std::vector<std::string> DedupReport::discarded_ids() const {
  std::vector<std::string> ids;
  ids.reserve(discarded.size());
  for (const auto& d : discarded) ids.push_back(d.id);
  return ids;
}

nlohmann::json DedupReport::to_json() const {
  json items = json::array();
  for (const auto& d : discarded) {
    items.push_back({{"id", d.id},
                     {"min_ratio", d.min_ratio},
                     {"matched_eval_id", d.matched_eval_id}});
  }
  return {{"threshold", threshold},
          {"denominator",
           denominator == RatioDenominator::kSum ? "sum" : "product"},
          {"discarded", std::move(items)}};
}

std::pair<LabeledRepository, DedupReport> dedup_repository(
    const LabeledRepository& repo, std::span<const Post> eval_posts,
    const DedupOptions& options) {
  if (!(options.threshold > 0.0 && options.threshold <= 1.0)) {
    throw UsageError("dedup threshold must lie in (0, 1]");
  }
  std::vector<std::u32string> eval_chars;
  eval_chars.reserve(eval_posts.size());
  for (const auto& q : eval_posts) {
    eval_chars.push_back(text::decode_utf8(q.text));
  }

  std::vector<std::optional<DedupMatch>> matches(repo.size());
  parallel_for(repo.size(), options.workers, [&](std::size_t i) {
    const Post& post = repo[i];
    const std::u32string x = text::decode_utf8(post.text);
    double limit = options.threshold;
    std::optional<DedupMatch> best;
    for (std::size_t e = 0; e < eval_chars.size(); ++e) {
      const auto& q = eval_chars[e];
      if (q.empty() && x.empty()) continue;
      const std::size_t budget =
          distance_budget(limit, q.size(), x.size(), options.denominator);
      const auto distance = edit_distance_within(q, x, budget);
      if (!distance) continue;
      const double r =
          ratio_from_distance(*distance, q.size(), x.size(),
                              options.denominator);
      if (r < limit) {
        limit = r;
        best = DedupMatch{post.id, r, eval_posts[e].id};
        if (r == 0.0) break;
      }
    }
    matches[i] = std::move(best);
  });

  DedupReport report{options.threshold, options.denominator, {}};
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < repo.size(); ++i) {
    if (matches[i]) {
      report.discarded.push_back(std::move(*matches[i]));
    } else {
      kept.push_back(i);
    }
  }
  std::sort(report.discarded.begin(), report.discarded.end(),
            [](const DedupMatch& a, const DedupMatch& b) { return a.id < b.id; });
  return {repo.subset(std::move(kept)), std::move(report)};
}

LabeledRepository downsample(const LabeledRepository& repo,
                             std::size_t target_size, std::uint64_t seed) {
  const std::size_t n_classes = repo.classes().size();
  if (target_size == 0) throw UsageError("downsample target must be positive");
  if (n_classes == 0 || target_size % n_classes != 0) {
    throw UsageError("downsample target " + std::to_string(target_size) +
                     " is not divisible by the number of classes (" +
                     std::to_string(n_classes) + ")");
  }
  if (target_size > repo.size()) {
    throw DataError("downsample target " + std::to_string(target_size) +
                    " exceeds repository size " + std::to_string(repo.size()));
  }
  const std::size_t per_class = target_size / n_classes;
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(target_size);
  for (const auto& label : repo.classes()) {
    const auto members = repo.members_of(label);
    if (members.size() < per_class) {
      throw DataError("class '" + label + "' has " +
                      std::to_string(members.size()) + " posts, " +
                      std::to_string(per_class) + " needed");
    }
    if (members.size() == per_class) {
      chosen.insert(chosen.end(), members.begin(), members.end());
      continue;
    }
    for (std::size_t pick : rng.sample_indices(members.size(), per_class)) {
      chosen.push_back(members[pick]);
    }
  }
  return repo.subset(std::move(chosen));
}

}  // namespace fsbias
