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
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace fsbias {

// Exponential backoff: attempt n (1-based) waits base * multiplier^(n-1)
// before attempt n+1, scaled by a factor in [0.5, 1) when jitter is on.
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{250};
  double multiplier = 2.0;
  bool jitter = true;

  std::chrono::milliseconds delay_after(int attempt) const;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// Minimal POST-only transport so endpoints can be faked in tests.
// Implementations throw TransportError when no response was received.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const HttpHeaders& headers,
                            std::chrono::milliseconds timeout) = 0;
};

// cpp-httplib backed transport for http:// (and https:// when built with
// OpenSSL) URLs.
std::shared_ptr<HttpTransport> make_http_transport();

// POSTs JSON and returns the body of a 2xx response. Connection failures,
// 429 and 5xx responses are retried under `policy`; the last failure is
// rethrown as TransportError. Other statuses throw BackendError at once.
std::string post_json_with_retries(HttpTransport& transport,
                                   const std::string& url,
                                   const std::string& body,
                                   const HttpHeaders& headers,
                                   std::chrono::milliseconds timeout,
                                   const RetryPolicy& policy);

// "Authorization: Bearer <key>" when `api_key` is non-empty.
HttpHeaders auth_headers(const std::string& api_key);

// Joins a base endpoint and a path with exactly one slash between them.
std::string join_url(const std::string& base, const std::string& path);

}  // namespace fsbias
