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

#include <atomic>
#include <functional>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "fsbias/corpus.hpp"
#include "fsbias/http.hpp"
#include "fsbias/task.hpp"

namespace fsbias::testing {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(FSBIAS_SOURCE_DIR) / rel;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fsbias_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Zero-padded ids so lexicographic order matches numeric order.
inline std::string pid(std::size_t i) {
  std::string s = std::to_string(i);
  return "p" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

inline Post post(std::string id, std::string text, std::string label) {
  return Post{std::move(id), std::move(text), std::move(label)};
}

inline TaskSpec yes_no_task() { return builtin_task("offensive"); }

inline TaskSpec classes_task(std::size_t n) {
  TaskSpec t;
  t.name = "synthetic" + std::to_string(n);
  t.definition = "Which class is this?";
  for (std::size_t c = 0; c < n; ++c) {
    const std::string label = "c" + std::to_string(c);
    t.classes.push_back(label);
    t.answer_tokens[label] = label;
  }
  t.kind = n == 2 ? TaskKind::kBinary : TaskKind::kMulticlass;
  return t;
}

// Transport answering from a callback; records every request.
class FakeTransport final : public HttpTransport {
 public:
  struct Call {
    std::string url;
    std::string body;
    HttpHeaders headers;
  };
  using Handler = std::function<HttpResponse(const Call&, int call_index)>;

  explicit FakeTransport(Handler handler) : handler_(std::move(handler)) {}

  HttpResponse post(const std::string& url, const std::string& body,
                    const HttpHeaders& headers,
                    std::chrono::milliseconds) override {
    Call call{url, body, headers};
    int index = 0;
    {
      std::lock_guard lock(mu_);
      index = static_cast<int>(calls_.size());
      calls_.push_back(call);
    }
    return handler_(call, index);
  }

  std::vector<Call> calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

 private:
  Handler handler_;
  mutable std::mutex mu_;
  std::vector<Call> calls_;
};

}  // namespace fsbias::testing
