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

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "srouter/config/schema.hpp"
#include "srouter/config/validate.hpp"
#include "srouter/dsl/ast.hpp"

namespace srouter::dsl {

/// Plugin type keywords; each is also the plugin's key in the flat document.
inline constexpr std::array<std::string_view, 9> kPluginTypes{
    "fast_response", "semantic_cache", "pii",    "rag",          "modality",
    "memory",        "system_prompt",  "header_mutation", "hallucination"};

inline bool is_plugin_type(std::string_view s) {
  for (auto t : kPluginTypes) {
    if (t == s) return true;
  }
  return false;
}

/// Compile failure carrying the diagnostics that blocked it.
class DslError : public Error {
 public:
  explicit DslError(std::vector<Diagnostic> diagnostics)
      : Error(summary(diagnostics)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  static std::string summary(const std::vector<Diagnostic>& ds) {
    std::string s;
    for (const auto& d : ds) s += (s.empty() ? "" : "\n") + d.format();
    return s.empty() ? "compile failed" : s;
  }
  std::vector<Diagnostic> diagnostics_;
};

namespace lower {

using srouter::Json;

inline Json signal(const SignalDecl& s) {
  Json j = s.fields.to_json();
  j["type"] = s.type;
  j["name"] = s.name;
  return j;
}

inline Json backend(const BackendDecl& b) {
  Json j = b.fields.to_json();
  j["name"] = b.name;
  j["type"] = b.type;
  return j;
}

inline Json rule(const BoolExpr& e) {
  Json j = Json::object();
  switch (e.kind) {
    case BoolExpr::Kind::kRef:
      j["type"] = e.type;
      j["name"] = e.name;
      return j;
    case BoolExpr::Kind::kAnd: j["operator"] = "AND"; break;
    case BoolExpr::Kind::kOr: j["operator"] = "OR"; break;
    case BoolExpr::Kind::kNot: j["operator"] = "NOT"; break;
  }
  Json conds = Json::array();
  for (const auto& c : e.children) conds.push_back(rule(c));
  j["conditions"] = std::move(conds);
  return j;
}

inline const PluginDecl* find_template(const Program& p, std::string_view name) {
  for (const auto& t : p.plugins) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

struct ResolvedPlugin {
  std::string type;
  Json fields;
};

/// Template fields overlaid with route-local fields; a non-template ref
/// that names a plugin type is an inline block. Throws ConfigError.
inline ResolvedPlugin resolve(const Program& p, const PluginUse& use) {
  Json fields = Json::object();
  std::string type;
  if (const PluginDecl* t = find_template(p, use.ref)) {
    type = t->type;
    fields = t->fields.to_json();
  } else if (is_plugin_type(use.ref)) {
    type = use.ref;
  } else {
    throw ConfigError(ConfigError::Kind::kReference, "undefined plugin template '" + use.ref + "'");
  }
  if (!is_plugin_type(type)) throw ConfigError(ConfigError::Kind::kConstraint, "unknown plugin type '" + type + "'");
  if (use.fields) {
    for (const auto& [k, v] : use.fields->fields) fields[k] = v.to_json();
  }
  return {type, std::move(fields)};
}

inline Json route(const Program& p, const RouteDecl& r) {
  Json j = Json::object();
  j["name"] = r.name;
  for (const auto& [k, v] : r.params.fields) {
    if (k != "description" && k != "pin_model") {
      throw ConfigError(ConfigError::Kind::kParse, "route '" + r.name + "': unknown parameter '" + k + "'");
    }
    j[k] = v.to_json();
  }
  if (r.priority) j["priority"] = *r.priority;
  if (r.when) j["rules"] = rule(*r.when);
  Json refs = Json::array();
  for (const auto& m : r.models) {
    Json mj = m.params.to_json();
    mj["model"] = m.model;
    refs.push_back(std::move(mj));
  }
  j["model_refs"] = std::move(refs);
  if (r.algorithm) {
    Json a = r.algorithm->params.to_json();
    a["type"] = r.algorithm->type;
    j["algorithm"] = std::move(a);
  }
  if (!r.plugins.empty()) {
    Json plugins = Json::object();
    for (const auto& use : r.plugins) {
      auto rp = resolve(p, use);
      if (plugins.contains(rp.type)) {
        throw ConfigError(ConfigError::Kind::kConstraint,
                          "route '" + r.name + "': plugin type '" + rp.type + "' attached twice");
      }
      plugins[rp.type] = std::move(rp.fields);
    }
    j["plugins"] = std::move(plugins);
  }
  return j;
}

inline Json program(const Program& p) {
  Json doc = Json::object();
  Json signals = Json::array();
  for (const auto& s : p.signals) signals.push_back(signal(s));
  Json decisions = Json::array();
  for (const auto& r : p.routes) decisions.push_back(route(p, r));
  Json backends = Json::array();
  for (const auto& b : p.backends) backends.push_back(backend(b));
  doc["signals"] = std::move(signals);
  doc["decisions"] = std::move(decisions);
  doc["backends"] = std::move(backends);
  if (p.global) doc["global"] = p.global->fields.to_json();
  return doc;
}

}  // namespace lower

/// Lowers to the flat document and loads it with full invariant checks.
/// Throws ConfigError on anything the runtime config would reject.
inline RouterConfig compile(const Program& program) {
  RouterConfig config = schema::config_from_json(lower::program(program));
  finalize(config);
  return config;
}

}  // namespace srouter::dsl
