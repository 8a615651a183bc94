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
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "srouter/gateway/http.hpp"

namespace srouter::gateway {

struct ConversationRecord {
  std::string id;
  std::optional<std::string> previous_id;
  std::vector<Message> input;  // this turn's new messages
  std::string output;          // assistant reply
  std::string decision;
  std::string model;
  std::string signal_summary;
};

/// In-memory Responses-API state with TTL and a record cap (oldest evicted).
class ConversationStore {
 public:
  using Clock = std::chrono::steady_clock;

  struct Options {
    std::chrono::seconds ttl{3600};
    std::size_t max_records = 10000;
  };

  ConversationStore() : ConversationStore(Options{}) {}
  explicit ConversationStore(Options opt, std::function<Clock::time_point()> now = Clock::now)
      : opt_(opt), now_(std::move(now)), salt_(std::random_device{}()) {}

  std::string next_id(std::string_view prefix = "resp_") {
    const std::uint64_t n = counter_.fetch_add(1) + 1;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%016llx%08llx", static_cast<unsigned long long>(salt_),
                  static_cast<unsigned long long>(n));
    return std::string(prefix) + buf;
  }

  void put(ConversationRecord r) {
    std::lock_guard lock(mu_);
    purge_locked();
    if (records_.count(r.id)) throw Error("duplicate response id '" + r.id + "'");
    order_.push_back(r.id);
    const std::string id = r.id;
    records_.emplace(id, Entry{std::move(r), now_()});
    while (records_.size() > opt_.max_records && !order_.empty()) {
      records_.erase(order_.front());
      order_.pop_front();
    }
  }

  std::optional<ConversationRecord> get(const std::string& id) {
    std::lock_guard lock(mu_);
    purge_locked();
    auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    return it->second.record;
  }

  /// Messages of every turn up to and including `id`, oldest first.
  /// Unknown or expired ids are a 404.
  std::vector<Message> history(const std::string& id) {
    std::lock_guard lock(mu_);
    purge_locked();
    std::vector<const ConversationRecord*> chain;
    std::optional<std::string> cur = id;
    while (cur) {
      auto it = records_.find(*cur);
      if (it == records_.end()) {
        if (chain.empty()) throw RequestError(404, "unknown previous_response_id '" + id + "'");
        break;  // an evicted ancestor truncates the history
      }
      chain.push_back(&it->second.record);
      cur = it->second.record.previous_id;
    }
    std::vector<Message> out;
    for (auto r = chain.rbegin(); r != chain.rend(); ++r) {
      out.insert(out.end(), (*r)->input.begin(), (*r)->input.end());
      out.push_back({"assistant", (*r)->output});
    }
    return out;
  }

  std::size_t size() {
    std::lock_guard lock(mu_);
    purge_locked();
    return records_.size();
  }

 private:
  struct Entry {
    ConversationRecord record;
    Clock::time_point at;
  };

  void purge_locked() {
    const auto now = now_();
    while (!order_.empty()) {
      auto it = records_.find(order_.front());
      if (it != records_.end() && now - it->second.at < opt_.ttl) break;
      if (it != records_.end()) records_.erase(it);
      order_.pop_front();
    }
  }

  Options opt_;
  std::function<Clock::time_point()> now_;
  std::uint64_t salt_;
  std::atomic<std::uint64_t> counter_{0};
  std::mutex mu_;
  std::map<std::string, Entry> records_;
  std::deque<std::string> order_;
};

/// Inbound `POST /v1/responses` body.
struct ResponsesRequest {
  OrderedJson doc;
  std::optional<std::string> model;
  std::optional<std::string> previous_id;
  std::optional<std::string> instructions;
  std::vector<Message> input;
  bool stream = false;
};

inline ResponsesRequest parse_responses_request(std::string_view body) {
  ResponsesRequest r;
  try {
    r.doc = OrderedJson::parse(body);
  } catch (const std::exception& e) {
    throw RequestError(400, std::string("request body is not valid JSON: ") + e.what());
  }
  if (!r.doc.is_object()) throw RequestError(400, "request body must be a JSON object");
  const auto str = [&](const char* key) -> std::optional<std::string> {
    auto it = r.doc.find(key);
    if (it == r.doc.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw RequestError(400, std::string("'") + key + "' must be a string");
    return it->get<std::string>();
  };
  r.model = str("model");
  r.previous_id = str("previous_response_id");
  r.instructions = str("instructions");
  r.stream = r.doc.value("stream", false);
  auto in = r.doc.find("input");
  if (in == r.doc.end()) throw RequestError(400, "missing 'input'");
  if (in->is_string()) {
    r.input.push_back({"user", in->get<std::string>()});
  } else if (in->is_array()) {
    for (const auto& item : *in) {
      if (!item.is_object()) throw RequestError(400, "input items must be objects");
      if (item.contains("type") && item["type"] != "message") continue;
      r.input.push_back({item.value("role", std::string("user")), content_text(item.value("content", OrderedJson()))});
    }
  } else {
    throw RequestError(400, "'input' must be a string or an array");
  }
  if (r.input.empty()) throw RequestError(400, "'input' has no messages");
  return r;
}

/// Chat form: instructions as a leading system message, then the stored
/// history, then this turn's input.
inline std::vector<Message> chat_messages(const ResponsesRequest& r, const std::vector<Message>& history) {
  std::vector<Message> out;
  if (r.instructions) out.push_back({"system", *r.instructions});
  out.insert(out.end(), history.begin(), history.end());
  out.insert(out.end(), r.input.begin(), r.input.end());
  return out;
}

/// Chat-completions body for the pipeline.
inline std::string chat_body(const ResponsesRequest& r, const std::vector<Message>& messages) {
  OrderedJson out;
  out["model"] = r.model.value_or("auto");
  OrderedJson msgs = OrderedJson::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  out["messages"] = std::move(msgs);
  for (const char* k : {"temperature", "top_p", "user", "metadata"}) {
    if (r.doc.contains(k)) out[k] = r.doc[k];
  }
  if (r.doc.contains("max_output_tokens")) out["max_tokens"] = r.doc["max_output_tokens"];
  return out.dump();
}

/// Responses-API items for a message list (the inverse of the input parse).
inline OrderedJson input_items(const std::vector<Message>& messages) {
  OrderedJson items = OrderedJson::array();
  for (const auto& m : messages) {
    items.push_back({{"type", "message"}, {"role", m.role}, {"content", m.content}});
  }
  return items;
}

/// Wraps a chat.completion body as a Responses-API object.
inline OrderedJson responses_object(const std::string& id, const std::optional<std::string>& previous_id,
                                    std::string_view chat_completion_body, std::int64_t created) {
  const OrderedJson c = OrderedJson::parse(chat_completion_body);
  const std::string text = completion_content(chat_completion_body).value_or("");
  OrderedJson out;
  out["id"] = id;
  out["object"] = "response";
  out["created_at"] = created;
  out["status"] = "completed";
  out["model"] = c.value("model", std::string());
  out["previous_response_id"] = previous_id ? OrderedJson(*previous_id) : OrderedJson();
  OrderedJson part = {{"type", "output_text"}, {"text", text}, {"annotations", OrderedJson::array()}};
  out["output"] = OrderedJson::array({{{"type", "message"},
                                       {"id", "msg_" + id.substr(id.find('_') + 1)},
                                       {"status", "completed"},
                                       {"role", "assistant"},
                                       {"content", OrderedJson::array({part})}}});
  out["output_text"] = text;
  OrderedJson usage = {{"input_tokens", 0}, {"output_tokens", 0}, {"total_tokens", 0}};
  if (auto u = c.find("usage"); u != c.end() && u->is_object()) {
    const auto in = u->value("prompt_tokens", std::int64_t{0});
    const auto outt = u->value("completion_tokens", std::int64_t{0});
    usage = {{"input_tokens", in}, {"output_tokens", outt}, {"total_tokens", u->value("total_tokens", in + outt)}};
  }
  out["usage"] = usage;
  return out;
}

}  // namespace srouter::gateway
