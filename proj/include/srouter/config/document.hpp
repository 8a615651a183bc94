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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "srouter/core/error.hpp"

/// Structured-text documents: YAML in, deterministic YAML out, with
/// nlohmann::json as the in-memory tree.
namespace srouter::doc {

using Json = nlohmann::json;

/// Shortest round-trip decimal form; always carries a '.' or an exponent so
/// the value reads back as a float.
inline std::string format_double(double v) {
  if (!std::isfinite(v)) throw Error("non-finite number cannot be serialized");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, end);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

inline std::string format_number(const Json& j) {
  if (j.is_number_float()) return format_double(j.get<double>());
  return j.dump();
}

/// Double-quoted string with JSON-compatible escapes (valid YAML and DSL).
inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char esc[8];
          std::snprintf(esc, sizeof(esc), "\\u%04x", c);
          out += esc;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
  return out;
}

namespace detail {

inline Json scalar_to_json(const YAML::Node& node) {
  const std::string& v = node.Scalar();
  if (node.Tag() == "!") return v;  // quoted: always a string
  static const std::regex kInt(R"([-+]?[0-9]+)");
  static const std::regex kFloat(R"([-+]?([0-9]+\.[0-9]*|\.[0-9]+|[0-9]+)([eE][-+]?[0-9]+)?)");
  if (v.empty() || v == "~" || v == "null" || v == "Null" || v == "NULL") return nullptr;
  if (v == "true" || v == "True" || v == "TRUE") return true;
  if (v == "false" || v == "False" || v == "FALSE") return false;
  if (std::regex_match(v, kInt)) {
    std::int64_t out = 0;
    const char* b = v.data() + (v[0] == '+' ? 1 : 0);
    auto [p, ec] = std::from_chars(b, v.data() + v.size(), out);
    if (ec == std::errc() && p == v.data() + v.size()) return out;
  }
  if (std::regex_match(v, kFloat)) return std::stod(v);
  return v;
}

inline Json node_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      Json arr = Json::array();
      for (const auto& item : node) arr.push_back(node_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      Json obj = Json::object();
      for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (obj.contains(key)) {
          throw ConfigError(ConfigError::Kind::kParse,
                            "duplicate key '" + key + "' at line " +
                                std::to_string(kv.first.Mark().line + 1));
        }
        obj[key] = node_to_json(kv.second);
      }
      return obj;
    }
  }
  return nullptr;
}

inline bool is_inline(const Json& j) {
  return !j.is_structured() || j.empty();
}

inline std::string inline_value(const Json& j) {
  if (j.is_string()) return quote(j.get<std::string>());
  if (j.is_number()) return format_number(j);
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  if (j.is_array()) return "[]";
  if (j.is_object()) return "{}";
  return "null";
}

inline void emit(std::ostringstream& out, const Json& j, int indent);

inline void emit_entry_value(std::ostringstream& out, const Json& v, int indent) {
  if (is_inline(v)) {
    out << ' ' << inline_value(v) << '\n';
  } else {
    out << '\n';
    emit(out, v, indent + 2);
  }
}

inline void emit(std::ostringstream& out, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      out << pad << k << ':';
      emit_entry_value(out, v, indent);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (v.is_object() && !v.empty()) {
        // First key shares the dash line.
        bool first = true;
        for (const auto& [k, vv] : v.items()) {
          out << (first ? pad + "- " : pad + "  ") << k << ':';
          emit_entry_value(out, vv, indent + 2);
          first = false;
        }
      } else if (is_inline(v)) {
        out << pad << "- " << inline_value(v) << '\n';
      } else {
        out << pad << "-\n";
        emit(out, v, indent + 2);
      }
    }
  } else {
    out << pad << inline_value(j) << '\n';
  }
}

}  // namespace detail

inline Json parse_yaml(std::string_view text) {
  try {
    const YAML::Node root = YAML::Load(std::string(text));
    return detail::node_to_json(root);
  } catch (const YAML::Exception& e) {
    throw ConfigError(ConfigError::Kind::kParse, std::string("malformed document: ") + e.what());
  }
}

/// Block-style YAML. Object keys come out sorted (nlohmann ordering), list
/// items in order, strings always double-quoted.
inline std::string emit_yaml(const Json& j) {
  std::ostringstream out;
  if (detail::is_inline(j)) {
    out << detail::inline_value(j) << '\n';
  } else {
    detail::emit(out, j, 0);
  }
  return out.str();
}

}  // namespace srouter::doc
