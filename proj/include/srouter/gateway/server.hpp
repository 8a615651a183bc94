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

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>

#include "srouter/gateway/gateway.hpp"

namespace srouter::gateway {

namespace detail {

inline HttpRequest to_request(const httplib::Request& req) {
  HttpRequest r;
  r.method = req.method;
  r.path = req.path;
  r.body = req.body;
  for (const auto& [k, v] : req.headers) r.headers.set(k, v);
  return r;
}

inline void write_head(const HttpResponse& src, httplib::Response& res) {
  res.status = src.status;
  for (const auto& [k, v] : src.headers.all()) {
    if (k != "content-type" && k != "content-length") res.set_header(k, v);
  }
}

inline void write_response(const HttpResponse& src, httplib::Response& res) {
  write_head(src, res);
  res.set_content(src.body, src.content_type);
}

/// Hand-off between the thread running the pipeline and the httplib
/// content provider.
struct StreamChannel {
  std::mutex mu;
  std::condition_variable cv;
  std::optional<HttpResponse> head;
  std::deque<std::string> chunks;
  std::optional<Exchange> done;
  bool cancelled = false;
  std::thread worker;
};

inline bool wants_stream(const std::string& body) {
  const auto j = OrderedJson::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return false;
  auto it = j.find("stream");
  return it != j.end() && it->is_boolean() && it->get<bool>();
}

}  // namespace detail

/// OpenAI-compatible HTTP front end for a Gateway.
class GatewayServer {
 public:
  explicit GatewayServer(Gateway& gw, std::size_t threads = 32) : gw_(gw) {
    server_.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    server_.set_payload_max_length(std::size_t{64} << 20);
    server_.set_read_timeout(300, 0);
    server_.set_write_timeout(300, 0);
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) { chat(req, res); });
    server_.Post("/v1/responses", [this](const httplib::Request& req, httplib::Response& res) {
      detail::write_response(gw_.responses(detail::to_request(req)).response, res);
    });
    server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      detail::write_response(gw_.health(), res);
    });
    server_.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
      detail::write_response(gw_.metrics_response(), res);
    });
  }

  ~GatewayServer() { stop(); }

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  int start(const std::string& host, int port) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  /// Serves on the calling thread until stop().
  void run(const std::string& host, int port) {
    if (!server_.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  void chat(const httplib::Request& req, httplib::Response& res) {
    HttpRequest r = detail::to_request(req);
    if (!detail::wants_stream(r.body)) {
      detail::write_response(gw_.chat(r).response, res);
      return;
    }
    auto ch = std::make_shared<detail::StreamChannel>();
    ch->worker = std::thread([this, ch, r = std::move(r)] {
      StreamRelay relay;
      relay.begin = [ch](const HttpResponse& head) {
        std::lock_guard lock(ch->mu);
        ch->head = head;
        ch->cv.notify_all();
      };
      relay.chunk = [ch](std::string_view piece) {
        std::lock_guard lock(ch->mu);
        if (ch->cancelled) return false;
        ch->chunks.emplace_back(piece);
        ch->cv.notify_all();
        return true;
      };
      Exchange ex = gw_.chat(r, &relay);
      std::lock_guard lock(ch->mu);
      ch->done = std::move(ex);
      ch->cv.notify_all();
    });

    std::unique_lock lock(ch->mu);
    ch->cv.wait(lock, [&] { return ch->head || ch->done; });
    if (!ch->head) {
      // Nothing was relayed: short circuit, error, or a reply built here.
      Exchange ex = std::move(*ch->done);
      lock.unlock();
      ch->worker.join();
      detail::write_response(ex.response, res);
      return;
    }
    const HttpResponse head = *ch->head;
    lock.unlock();
    detail::write_head(head, res);
    res.set_chunked_content_provider(
        head.content_type,
        [ch](std::size_t, httplib::DataSink& sink) {
          std::unique_lock l(ch->mu);
          ch->cv.wait(l, [&] { return !ch->chunks.empty() || ch->done; });
          while (!ch->chunks.empty()) {
            std::string piece = std::move(ch->chunks.front());
            ch->chunks.pop_front();
            l.unlock();
            if (!sink.write(piece.data(), piece.size())) return false;
            l.lock();
          }
          if (ch->done) sink.done();
          return true;
        },
        [ch](bool) {
          {
            std::lock_guard l(ch->mu);
            ch->cancelled = true;
          }
          if (ch->worker.joinable()) ch->worker.join();
        });
  }

  Gateway& gw_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace srouter::gateway
