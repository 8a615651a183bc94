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

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "srouter/config/document.hpp"
#include "srouter/config/schema.hpp"
#include "srouter/config/validate.hpp"

namespace srouter {

/// Parses, converts and validates a flat YAML (or JSON) config document.
inline RouterConfig load_config(std::string_view text) {
  RouterConfig config = schema::config_from_json(doc::parse_yaml(text));
  finalize(config);
  return config;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RouterConfig load_config_file(const std::string& path) { return load_config(read_file(path)); }

/// Deterministic flat document; load_config(emit_config(c)) == c.
inline std::string emit_config(const RouterConfig& config) { return doc::emit_yaml(schema::to_json(config)); }

}  // namespace srouter
