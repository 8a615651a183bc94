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

#include <optional>
#include <string>
#include <vector>

#include "srouter/core/error.hpp"
#include "srouter/plugins/completion.hpp"
#include "srouter/signals/request.hpp"

namespace srouter::gateway {

struct HttpRequest {
  std::string method = "POST";
  std::string path;
  Headers headers;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  Headers headers;
  std::string content_type = "application/json";
  std::string body;
};

/// Thrown for malformed client input; mapped to a 4xx status.
class RequestError : public Error {
 public:
  RequestError(int status, const std::string& message) : Error(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

inline std::string error_body(std::string_view type, std::string_view message, int code) {
  OrderedJson j;
  j["error"] = {{"type", type}, {"message", message}, {"code", code}};
  return j.dump();
}

inline HttpResponse error_response(int status, std::string_view type, std::string_view message) {
  HttpResponse r;
  r.status = status;
  r.body = error_body(type, message, status);
  return r;
}

/// Text of a message `content`: a string, or the concatenated text parts of
/// an array.
inline std::string content_text(const OrderedJson& content) {
  if (content.is_string()) return content.get<std::string>();
  if (content.is_null()) return {};
  if (!content.is_array()) throw RequestError(400, "message content must be a string or an array of parts");
  std::string out;
  for (const auto& part : content) {
    if (!part.is_object()) continue;
    auto t = part.find("text");
    if (t != part.end() && t->is_string()) {
      if (!out.empty()) out += "\n";
      out += t->get<std::string>();
    }
  }
  return out;
}

/// A parsed chat-completions body. `doc` keeps every field so the forwarded
/// request differs only in `model` and `messages`.
struct ChatRequest {
  OrderedJson doc;
  RequestView view;
};

inline std::vector<Message> parse_messages(const OrderedJson& arr) {
  if (!arr.is_array()) throw RequestError(400, "'messages' must be an array");
  std::vector<Message> out;
  for (const auto& m : arr) {
    if (!m.is_object() || !m.contains("role") || !m["role"].is_string()) {
      throw RequestError(400, "each message needs a string 'role'");
    }
    out.push_back({m["role"].get<std::string>(), content_text(m.value("content", OrderedJson()))});
  }
  return out;
}

inline ChatRequest parse_chat_request(std::string_view body, const Headers& headers) {
  ChatRequest r;
  try {
    r.doc = OrderedJson::parse(body);
  } catch (const std::exception& e) {
    throw RequestError(400, std::string("request body is not valid JSON: ") + e.what());
  }
  if (!r.doc.is_object()) throw RequestError(400, "request body must be a JSON object");
  if (!r.doc.contains("messages")) throw RequestError(400, "missing 'messages'");
  r.view.messages = parse_messages(r.doc["messages"]);
  if (r.view.messages.empty()) throw RequestError(400, "'messages' is empty");
  r.view.headers = headers;
  if (auto m = r.doc.find("model"); m != r.doc.end() && m->is_string()) r.view.model_hint = m->get<std::string>();
  if (auto s = r.doc.find("stream"); s != r.doc.end()) {
    if (!s->is_boolean()) throw RequestError(400, "'stream' must be a boolean");
    r.view.stream = s->get<bool>();
  }
  if (auto t = r.doc.find("tools"); t != r.doc.end() && t->is_array()) r.view.has_tools = !t->empty();
  return r;
}

/// Outbound body: the inbound document with the routed model and the
/// plugin-mutated messages. A message the plugins left alone keeps its
/// original object, so multi-part content (images) and extra fields survive.
inline std::string upstream_body(const OrderedJson& inbound, const std::string& model,
                                 const std::vector<Message>& messages) {
  OrderedJson out = inbound;
  out["model"] = model;
  const OrderedJson original = inbound.value("messages", OrderedJson::array());
  std::vector<bool> used(original.size(), false);
  const auto unchanged = [&](const Message& m) -> const OrderedJson* {
    for (std::size_t i = 0; i < original.size(); ++i) {
      const auto& o = original[i];
      if (used[i] || !o.is_object() || o.value("role", std::string()) != m.role) continue;
      if (content_text(o.value("content", OrderedJson())) != m.content) continue;
      used[i] = true;
      return &o;
    }
    return nullptr;
  };
  OrderedJson msgs = OrderedJson::array();
  for (const auto& m : messages) {
    if (const OrderedJson* o = unchanged(m)) {
      msgs.push_back(*o);
    } else {
      msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
  }
  out["messages"] = std::move(msgs);
  return out.dump();
}

}  // namespace srouter::gateway
