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

#include <atomic>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fsbias/error.hpp"
#include "fsbias/http.hpp"
#include "fsbias/lm.hpp"
#include "helpers.hpp"

namespace fsbias {
namespace {

using nlohmann::json;
using testing::FakeTransport;

TEST(RetryPolicy, ExponentialWithoutJitter) {
  RetryPolicy p;
  p.jitter = false;
  EXPECT_EQ(p.delay_after(1).count(), 250);
  EXPECT_EQ(p.delay_after(2).count(), 500);
  EXPECT_EQ(p.delay_after(3).count(), 1000);
}

TEST(RetryPolicy, JitterStaysInRange) {
  RetryPolicy p;
  for (int i = 0; i < 100; ++i) {
    const auto d = p.delay_after(2).count();
    EXPECT_GE(d, 250);
    EXPECT_LT(d, 500);
  }
}

TEST(Http, JoinUrlAndAuth) {
  EXPECT_EQ(join_url("http://h/v1/", "/score"), "http://h/v1/score");
  EXPECT_EQ(join_url("http://h/v1", "score"), "http://h/v1/score");
  EXPECT_TRUE(auth_headers("").empty());
  ASSERT_EQ(auth_headers("k").size(), 1u);
}

TEST(Http, RetriesOn429ThenSucceeds) {
  FakeTransport t([](const FakeTransport::Call&, int i) {
    return i < 2 ? HttpResponse{429, ""} : HttpResponse{200, "ok"};
  });
  RetryPolicy p;
  p.base_delay = std::chrono::milliseconds(1);
  EXPECT_EQ(post_json_with_retries(t, "u", "{}", {}, std::chrono::milliseconds(10), p),
            "ok");
  EXPECT_EQ(t.calls().size(), 3u);
}

TEST(Http, LastRetryableFailureIsTransportError) {
  FakeTransport t([](const FakeTransport::Call&, int) { return HttpResponse{500, "x"}; });
  RetryPolicy p;
  p.base_delay = std::chrono::milliseconds(1);
  p.max_attempts = 2;
  EXPECT_THROW(post_json_with_retries(t, "u", "{}", {}, std::chrono::milliseconds(10), p),
               TransportError);
  EXPECT_EQ(t.calls().size(), 2u);
}

// A real server on loopback: checks the scorer's wire format end to end.
class LocalServer {
 public:
  LocalServer() {
    server_.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++hits_;
      if (n == 1) {  // one injected failure
        res.status = 503;
        return;
      }
      const json body = json::parse(req.body);
      last_auth_ = req.get_header_value("Authorization");
      json lp = json::array();
      for (std::size_t i = 0; i < body.at("candidates").size(); ++i) lp.push_back(-1.0 * (i + 1));
      res.set_content(json{{"logprobs", lp}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  int port() const { return port_; }
  int hits() const { return hits_; }
  std::string last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::string last_auth_;
};

TEST(HttpWire, ScorerAgainstLoopbackServer) {
  LocalServer server;
  ScorerConfig cfg;
  cfg.backend = ScorerBackend::kHttp;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(server.port()) + "/v1";
  cfg.api_key = "abc";
  cfg.api_key_env = "";
  cfg.timeout = std::chrono::milliseconds(5000);
  cfg.retry.base_delay = std::chrono::milliseconds(1);
  auto scorer = make_scorer(cfg);
  const auto p = build_zero_shot(testing::yes_no_task(), Post{"q", "hi", std::nullopt});
  const auto s = scorer->score(p);
  EXPECT_EQ(server.hits(), 2);
  EXPECT_EQ(server.last_auth(), "Bearer abc");
  EXPECT_NEAR(s.score_of("Yes") + s.score_of("No"), 1.0, 1e-12);
  EXPECT_GT(s.score_of("Yes"), s.score_of("No"));
}

TEST(HttpWire, UnreachableEndpointIsTransportError) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  auto transport = make_http_transport();
  RetryPolicy p;
  p.base_delay = std::chrono::milliseconds(1);
  p.max_attempts = 2;
  EXPECT_THROW(post_json_with_retries(*transport,
                                      "http://127.0.0.1:" + std::to_string(port) + "/x",
                                      "{}", {}, std::chrono::milliseconds(500), p),
               TransportError);
}

}  // namespace
}  // namespace fsbias
