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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srouter/core/text.hpp"

namespace srouter {

struct Message {
  std::string role;  // system, user, assistant, tool
  std::string content;
  bool operator==(const Message&) const = default;
};

/// Header map with lower-cased names.
class Headers {
 public:
  Headers() = default;
  Headers(std::initializer_list<std::pair<std::string, std::string>> init) {
    for (const auto& [k, v] : init) set(k, v);
  }

  void set(std::string_view name, std::string value) { map_[text::to_lower(name)] = std::move(value); }
  bool has(std::string_view name) const { return map_.count(text::to_lower(name)) > 0; }
  void erase(std::string_view name) { map_.erase(text::to_lower(name)); }
  std::optional<std::string> get(std::string_view name) const {
    auto it = map_.find(text::to_lower(name));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  const std::map<std::string, std::string>& all() const { return map_; }
  bool operator==(const Headers&) const = default;

 private:
  std::map<std::string, std::string> map_;
};

/// The parts of an inbound request that signals and plugins look at.
struct RequestView {
  std::vector<Message> messages;
  Headers headers;
  std::optional<std::string> model_hint;
  bool stream = false;
  bool has_tools = false;

  /// ceil(total content characters / 4), counting code points.
  std::size_t estimated_tokens() const {
    std::size_t chars = 0;
    for (const auto& m : messages) chars += text::code_point_count(m.content);
    return text::estimate_tokens(chars);
  }

  /// Content of the most recent user message, or "" when there is none.
  std::string latest_user_text() const {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
      if (it->role == "user") return it->content;
    }
    return {};
  }

  std::vector<std::string> user_texts() const {
    std::vector<std::string> out;
    for (const auto& m : messages) {
      if (m.role == "user") out.push_back(m.content);
    }
    return out;
  }

  static RequestView from_text(std::string user_text) {
    RequestView r;
    r.messages.push_back({"user", std::move(user_text)});
    return r;
  }
};

}  // namespace srouter
