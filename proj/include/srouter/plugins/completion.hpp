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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "srouter/core/text.hpp"

namespace srouter {

using OrderedJson = nlohmann::ordered_json;

struct CompletionMeta {
  std::string id = "chatcmpl-srouter";
  std::int64_t created = 0;
  std::string model = "srouter";
};

/// Non-streaming chat.completion document with one assistant message.
inline OrderedJson chat_completion(const CompletionMeta& meta, std::string_view content,
                                   std::string_view finish_reason = "stop") {
  OrderedJson msg;
  msg["role"] = "assistant";
  msg["content"] = std::string(content);
  OrderedJson choice;
  choice["index"] = 0;
  choice["message"] = msg;
  choice["finish_reason"] = std::string(finish_reason);
  OrderedJson doc;
  doc["id"] = meta.id;
  doc["object"] = "chat.completion";
  doc["created"] = meta.created;
  doc["model"] = meta.model;
  doc["choices"] = OrderedJson::array({choice});
  doc["usage"] = {{"prompt_tokens", 0}, {"completion_tokens", 0}, {"total_tokens", 0}};
  return doc;
}

inline OrderedJson completion_chunk(const CompletionMeta& meta, OrderedJson delta, const char* finish_reason) {
  OrderedJson choice;
  choice["index"] = 0;
  choice["delta"] = std::move(delta);
  choice["finish_reason"] = finish_reason ? OrderedJson(finish_reason) : OrderedJson(nullptr);
  OrderedJson doc;
  doc["id"] = meta.id;
  doc["object"] = "chat.completion.chunk";
  doc["created"] = meta.created;
  doc["model"] = meta.model;
  doc["choices"] = OrderedJson::array({choice});
  return doc;
}

/// SSE event payloads: role chunk, one chunk per whitespace-delimited word
/// (later words carry a leading space), stop chunk, then [DONE].
inline std::vector<std::string> completion_sse_events(const CompletionMeta& meta, std::string_view content) {
  std::vector<std::string> events;
  events.push_back(completion_chunk(meta, {{"role", "assistant"}}, nullptr).dump());
  const auto words = text::split_whitespace(content);
  for (std::size_t i = 0; i < words.size(); ++i) {
    events.push_back(completion_chunk(meta, {{"content", (i ? " " : "") + words[i]}}, nullptr).dump());
  }
  events.push_back(completion_chunk(meta, OrderedJson::object(), "stop").dump());
  events.push_back("[DONE]");
  return events;
}

inline std::string sse_body(const std::vector<std::string>& events) {
  std::string out;
  for (const auto& e : events) out += "data: " + e + "\n\n";
  return out;
}

/// Assistant content of a chat.completion document, or nullopt.
inline std::optional<std::string> completion_content(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& c = (*choices)[0];
  if (!c.contains("message") || !c["message"].contains("content") || !c["message"]["content"].is_string()) {
    return std::nullopt;
  }
  return c["message"]["content"].get<std::string>();
}

}  // namespace srouter
