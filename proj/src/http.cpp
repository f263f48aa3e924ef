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

#include "fsbias/http.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <httplib.h>

#include "fsbias/error.hpp"

namespace fsbias {
namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const std::string& url, const std::string& body,
                    const HttpHeaders& headers,
                    std::chrono::milliseconds timeout) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw UsageError("endpoint URL '" + url + "' has no scheme");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path =
        path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto res = client.Post(path, hdrs, body, "application/json");
    if (!res) {
      throw TransportError("POST " + url + " failed: " +
                           httplib::to_string(res.error()));
    }
    return {res->status, res->body};
  }
};

}  // namespace

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  double ms = static_cast<double>(base_delay.count()) *
              std::pow(multiplier, std::max(0, attempt - 1));
  if (jitter && ms > 0) {
    thread_local std::mt19937 gen(std::random_device{}());
    ms *= std::uniform_real_distribution<double>(0.5, 1.0)(gen);
  }
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

std::shared_ptr<HttpTransport> make_http_transport() {
  return std::make_shared<HttplibTransport>();
}

std::string post_json_with_retries(HttpTransport& transport,
                                   const std::string& url,
                                   const std::string& body,
                                   const HttpHeaders& headers,
                                   std::chrono::milliseconds timeout,
                                   const RetryPolicy& policy) {
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      HttpResponse res = transport.post(url, body, headers, timeout);
      if (res.status >= 200 && res.status < 300) return std::move(res.body);
      if (res.status == 429 || res.status >= 500) {
        throw TransportError("POST " + url + " returned HTTP " +
                             std::to_string(res.status));
      }
      throw BackendError("POST " + url + " returned HTTP " +
                         std::to_string(res.status) + ": " + res.body);
    } catch (const TransportError& e) {
      if (attempt >= attempts) {
        throw TransportError(std::string(e.what()) + " (after " +
                             std::to_string(attempt) + " attempts)");
      }
    }
    std::this_thread::sleep_for(policy.delay_after(attempt));
  }
}

HttpHeaders auth_headers(const std::string& api_key) {
  if (api_key.empty()) return {};
  return {{"Authorization", "Bearer " + api_key}};
}

std::string join_url(const std::string& base, const std::string& path) {
  std::string out = base;
  while (!out.empty() && out.back() == '/') out.pop_back();
  if (path.empty()) return out;
  if (path.front() != '/') out.push_back('/');
  return out + path;
}

}  // namespace fsbias
