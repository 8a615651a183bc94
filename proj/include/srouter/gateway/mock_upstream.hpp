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

#include <atomic>
#include <chrono>
#include <mutex>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "srouter/core/text.hpp"
#include "srouter/plugins/completion.hpp"

namespace srouter::gateway {

/// Scriptable OpenAI-compatible upstream for tests and local runs.
class MockUpstream {
 public:
  struct Options {
    int status = 200;
    std::string reply;  // empty: "echo: <latest user message>"
    int prompt_tokens = 10;
    int completion_tokens = 20;
    bool usage = true;
    int stream_chunks = 0;  // 0: one chunk per word of the reply; otherwise "tok" chunks
    std::chrono::milliseconds chunk_delay{0};
    std::chrono::milliseconds latency{0};  // before the status line
    std::string name = "mock";
  };

  struct Recorded {
    std::map<std::string, std::string> headers;  // lower-cased names
    std::string body;
  };

  MockUpstream() : MockUpstream(Options()) {}
  explicit MockUpstream(Options opt, const std::string& host = "127.0.0.1", int port = 0)
      : opt_(std::move(opt)), host_(host) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) { chat(req, res); });
    server_.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"calls\":" + std::to_string(calls()) + "}", "application/json");
    });
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ <= 0) throw std::runtime_error("mock upstream: cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  MockUpstream(const MockUpstream&) = delete;
  MockUpstream& operator=(const MockUpstream&) = delete;

  ~MockUpstream() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  const std::string& host() const { return host_; }
  int port() const { return port_; }
  std::size_t calls() const { return calls_.load(); }

  void set_options(Options opt) {
    std::lock_guard lock(mu_);
    opt_ = std::move(opt);
  }
  Options options() const {
    std::lock_guard lock(mu_);
    return opt_;
  }
  void set_status(int status) {
    std::lock_guard lock(mu_);
    opt_.status = status;
  }

  std::vector<Recorded> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

  void reset() {
    std::lock_guard lock(mu_);
    requests_.clear();
    calls_ = 0;
  }

  /// Blocks until the server stops (for the standalone binary).
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

 private:
  void chat(const httplib::Request& req, httplib::Response& res) {
    ++calls_;
    Options opt;
    {
      std::lock_guard lock(mu_);
      Recorded r;
      for (const auto& [k, v] : req.headers) r.headers[text::to_lower(k)] = v;
      r.body = req.body;
      requests_.push_back(std::move(r));
      opt = opt_;
    }
    if (opt.latency.count() > 0) std::this_thread::sleep_for(opt.latency);
    if (opt.status < 200 || opt.status >= 300) {
      res.status = opt.status;
      res.set_content("{\"error\":{\"message\":\"" + opt.name + " is failing\",\"code\":" +
                          std::to_string(opt.status) + "}}",
                      "application/json");
      return;
    }
    OrderedJson body;
    try {
      body = OrderedJson::parse(req.body);
    } catch (...) {
      res.status = 400;
      res.set_content("{\"error\":{\"message\":\"bad json\"}}", "application/json");
      return;
    }
    std::string last_user;
    for (const auto& m : body.value("messages", OrderedJson::array())) {
      if (m.value("role", "") == "user" && m.contains("content") && m["content"].is_string()) {
        last_user = m["content"].get<std::string>();
      }
    }
    const std::string reply = opt.reply.empty() ? "echo: " + last_user : opt.reply;
    CompletionMeta meta;
    meta.id = "chatcmpl-" + opt.name + "-" + std::to_string(calls_.load());
    meta.model = body.value("model", std::string("mock"));
    res.set_header("x-mock-name", opt.name);

    if (!body.value("stream", false)) {
      OrderedJson c = chat_completion(meta, reply);
      if (opt.usage) {
        c["usage"] = {{"prompt_tokens", opt.prompt_tokens},
                      {"completion_tokens", opt.completion_tokens},
                      {"total_tokens", opt.prompt_tokens + opt.completion_tokens}};
      } else {
        c.erase("usage");
      }
      res.set_content(c.dump(), "application/json");
      return;
    }

    std::vector<std::string> pieces;
    if (opt.stream_chunks > 0) {
      for (int i = 0; i < opt.stream_chunks; ++i) pieces.push_back(i ? " tok" : "tok");
    } else {
      const auto words = text::split_whitespace(reply);
      for (std::size_t i = 0; i < words.size(); ++i) pieces.push_back((i ? " " : "") + words[i]);
    }
    res.set_chunked_content_provider(
        "text/event-stream", [meta, pieces, opt](std::size_t, httplib::DataSink& sink) {
          const auto send = [&](const OrderedJson& j) {
            const std::string ev = "data: " + j.dump() + "\n\n";
            return sink.write(ev.data(), ev.size());
          };
          if (!send(completion_chunk(meta, {{"role", "assistant"}, {"content", ""}}, nullptr))) return false;
          for (std::size_t i = 0; i < pieces.size(); ++i) {
            if (opt.chunk_delay.count() > 0) std::this_thread::sleep_for(opt.chunk_delay);
            if (!send(completion_chunk(meta, {{"content", pieces[i]}}, nullptr))) return false;
          }
          OrderedJson last = completion_chunk(meta, OrderedJson::object(), "stop");
          if (opt.usage) {
            const int n = static_cast<int>(pieces.size());
            last["usage"] = {{"prompt_tokens", opt.prompt_tokens}, {"completion_tokens", n},
                             {"total_tokens", opt.prompt_tokens + n}};
          }
          if (!send(last)) return false;
          const std::string done = "data: [DONE]\n\n";
          sink.write(done.data(), done.size());
          sink.done();
          return true;
        });
  }

  Options opt_;
  std::string host_;
  int port_ = 0;
  httplib::Server server_;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<Recorded> requests_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace srouter::gateway
