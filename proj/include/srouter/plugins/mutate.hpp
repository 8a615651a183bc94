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

#include <string>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/signals/request.hpp"

namespace srouter {

/// Replace overwrites the first system message; insert prepends `text\n`.
/// Either mode creates a system message at index 0 when none exists.
inline std::vector<Message> system_prompt_apply(std::vector<Message> messages, const std::string& text,
                                                PromptMode mode) {
  for (auto& m : messages) {
    if (m.role != "system") continue;
    m.content = mode == PromptMode::kReplace ? text : text + "\n" + m.content;
    return messages;
  }
  messages.insert(messages.begin(), Message{"system", text});
  return messages;
}

inline void header_mutate(Headers& headers, const std::vector<HeaderMutation>& mutations) {
  for (const auto& m : mutations) {
    switch (m.action) {
      case HeaderAction::kAdd:
        if (!headers.has(m.name)) headers.set(m.name, m.value);
        break;
      case HeaderAction::kUpdate:
        headers.set(m.name, m.value);
        break;
      case HeaderAction::kDelete:
        headers.erase(m.name);
        break;
    }
  }
}

}  // namespace srouter
