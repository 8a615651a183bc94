// Copyright 2026 The srouter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

#include <httplib.h>

#include "srouter/signals/request.hpp"

namespace srouter::gateway {

struct UpstreamCall {
  std::string host;
  int port = 80;
  std::string path = "/v1/chat/completions";
  Headers headers;
  std::string body;
  std::chrono::milliseconds timeout{60000};
  std::size_t buffer_cap = std::size_t{1} << 20;  // bytes kept in `body` of the outcome
};

struct UpstreamOutcome {
  int status = 0;  // 0: no HTTP response (connect error, timeout)
  std::string error;
  std::string content_type;
  std::string body;
  bool truncated = false;  // body exceeded buffer_cap
  double ttft_ms = 0.0;    // to the first body byte
  double total_ms = 0.0;
};

/// Receives body chunks of a 2xx reply as they arrive; return false to abort.
using ChunkRelay = std::function<bool(std::string_view)>;

class UpstreamClient {
 public:
  virtual ~UpstreamClient() = default;
  /// `relay` (may be null) sees the body of 2xx replies chunk by chunk.
  virtual UpstreamOutcome send(const UpstreamCall& call, const ChunkRelay* relay) = 0;
};

/// Plain HTTP/1.1 client, one connection per call.
class HttpUpstreamClient final : public UpstreamClient {
 public:
  UpstreamOutcome send(const UpstreamCall& call, const ChunkRelay* relay) override {
    using Clock = std::chrono::steady_clock;
    UpstreamOutcome out;
    httplib::Client cli(call.host, call.port);
    const auto secs = static_cast<time_t>(call.timeout.count() / 1000);
    const auto usecs = static_cast<time_t>((call.timeout.count() % 1000) * 1000);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);

    httplib::Request req;
    req.method = "POST";
    req.path = call.path;
    for (const auto& [k, v] : call.headers.all()) req.headers.emplace(k, v);
    req.set_header("Content-Type", "application/json");
    req.body = call.body;

    const auto start = Clock::now();
    bool first = true;
    bool ok_status = false;
    req.response_handler = [&](const httplib::Response& r) {
      out.status = r.status;
      out.content_type = r.get_header_value("Content-Type");
      ok_status = r.status >= 200 && r.status < 300;
      return true;
    };
    req.content_receiver = [&](const char* data, std::size_t n, std::uint64_t, std::uint64_t) {
      if (first) {
        out.ttft_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        first = false;
      }
      if (out.body.size() + n <= call.buffer_cap) {
        out.body.append(data, n);
      } else {
        out.truncated = true;
      }
      if (ok_status && relay && *relay) return (*relay)(std::string_view(data, n));
      return true;
    };

    httplib::Response res;
    httplib::Error err = httplib::Error::Success;
    const bool sent = cli.send(req, res, err);
    out.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    if (first) out.ttft_ms = out.total_ms;
    if (!sent) {
      // A broken 2xx stream keeps its status so the caller can tell it from
      // a failed attempt; anything else counts as no response.
      if (!ok_status) out.status = 0;
      out.error = httplib::to_string(err);
    }
    return out;
  }
};

}  // namespace srouter::gateway
