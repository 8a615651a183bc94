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
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "srouter/dsl/lexer.hpp"

namespace srouter::dsl {

/// Literal value: scalar, list, or `{ key: value }` mapping.
struct Value {
  enum class Kind { kString, kInteger, kFloat, kBoolean, kList, kObject };

  Kind kind = Kind::kObject;
  std::string str;
  std::int64_t integer = 0;
  double number = 0.0;
  bool boolean = false;
  std::vector<Value> items;
  std::vector<std::pair<std::string, Value>> fields;  // source order
  Pos pos;

  const Value* find(std::string_view key) const {
    for (const auto& [k, v] : fields) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  nlohmann::json to_json() const {
    switch (kind) {
      case Kind::kString: return str;
      case Kind::kInteger: return integer;
      case Kind::kFloat: return number;
      case Kind::kBoolean: return boolean;
      case Kind::kList: {
        auto j = nlohmann::json::array();
        for (const auto& v : items) j.push_back(v.to_json());
        return j;
      }
      case Kind::kObject: {
        auto j = nlohmann::json::object();
        for (const auto& [k, v] : fields) j[k] = v.to_json();
        return j;
      }
    }
    return nullptr;
  }
};

/// WHEN expression tree. A parenthesized group stays one node, so
/// `(a AND b) AND c` keeps its nesting while `a AND b AND c` is one And.
struct BoolExpr {
  enum class Kind { kRef, kAnd, kOr, kNot };

  Kind kind = Kind::kRef;
  std::string type;  // kRef
  std::string name;  // kRef
  std::vector<BoolExpr> children;
  Pos pos;
  Pos name_pos;  // kRef: position of the quoted name

  static BoolExpr Ref(std::string type, std::string name, Pos pos = {}) {
    BoolExpr e;
    e.type = std::move(type);
    e.name = std::move(name);
    e.pos = pos;
    e.name_pos = pos;
    return e;
  }
  static BoolExpr Nary(Kind k, std::vector<BoolExpr> children, Pos pos = {}) {
    BoolExpr e;
    e.kind = k;
    e.children = std::move(children);
    e.pos = pos;
    return e;
  }
  static BoolExpr Not(BoolExpr child, Pos pos = {}) { return Nary(Kind::kNot, {std::move(child)}, pos); }

  /// Structural equality ignoring positions.
  bool same(const BoolExpr& o) const {
    if (kind != o.kind || type != o.type || name != o.name || children.size() != o.children.size()) return false;
    for (std::size_t i = 0; i < children.size(); ++i) {
      if (!children[i].same(o.children[i])) return false;
    }
    return true;
  }
};

struct SignalDecl {
  std::string type;
  std::string name;
  Value fields;
  Pos pos;
};

/// Top-level `PLUGIN name type { ... }` template.
struct PluginDecl {
  std::string name;
  std::string type;
  Value fields;
  Pos pos;
};

/// `PLUGIN ref` or `PLUGIN ref { overrides }` inside a route; `ref` names a
/// template or, failing that, a plugin type used inline.
struct PluginUse {
  std::string ref;
  std::optional<Value> fields;
  Pos pos;
};

struct ModelDecl {
  std::string model;
  Value params;  // from `( key = value, ... )`
  Pos pos;
};

struct AlgorithmDecl {
  std::string type;
  Value params;
  Pos pos;
};

struct RouteDecl {
  std::string name;
  Value params;  // header `( key = value )`: description, pin_model
  std::optional<std::int64_t> priority;
  Pos priority_pos;
  std::optional<BoolExpr> when;
  std::vector<ModelDecl> models;
  std::optional<AlgorithmDecl> algorithm;
  std::vector<PluginUse> plugins;
  Pos pos;
};

struct BackendDecl {
  std::string name;
  std::string type;
  Value fields;
  Pos pos;
};

struct GlobalDecl {
  Value fields;
  Pos pos;
};

struct Program {
  std::vector<SignalDecl> signals;
  std::vector<PluginDecl> plugins;
  std::vector<RouteDecl> routes;
  std::vector<BackendDecl> backends;
  std::optional<GlobalDecl> global;
};

enum class Level { kError, kWarning, kConstraint };

inline std::string_view to_string(Level l) {
  switch (l) {
    case Level::kError: return "error";
    case Level::kWarning: return "warning";
    case Level::kConstraint: return "constraint";
  }
  return "?";
}

struct Diagnostic {
  Level level = Level::kError;
  std::string message;
  Pos pos;
  std::optional<std::string> quick_fix;

  std::string format() const {
    std::string s = to_string(pos) + ": " + std::string(to_string(level)) + ": " + message;
    if (quick_fix) s += " (did you mean \"" + *quick_fix + "\"?)";
    return s;
  }
};

struct ParseResult {
  Program program;
  std::vector<Diagnostic> diagnostics;  // level-1 errors only
};

}  // namespace srouter::dsl
