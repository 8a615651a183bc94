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
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "srouter/config/document.hpp"
#include "srouter/config/schema.hpp"
#include "srouter/dsl/ast.hpp"
#include "srouter/dsl/parser.hpp"

namespace srouter::dsl {

namespace detail {

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !ident_start(s.front())) return false;
  for (char c : s) {
    if (!ident_char(c)) return false;
  }
  return !is_reserved(s) && s != "true" && s != "false";
}

/// Only `"` and `\` are escaped; everything else is literal.
inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string name_text(std::string_view s) { return is_identifier(s) ? std::string(s) : quote(s); }

inline std::string value_text(const Json& j) {
  if (j.is_string()) return quote(j.get<std::string>());
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  if (j.is_number()) return doc::format_number(j);
  if (j.is_array()) {
    std::string s = "[";
    for (std::size_t i = 0; i < j.size(); ++i) s += (i ? ", " : "") + value_text(j[i]);
    return s + "]";
  }
  if (j.is_object()) {
    if (j.empty()) return "{}";
    std::string s = "{ ";
    bool first = true;
    for (const auto& [k, v] : j.items()) {
      s += (first ? "" : ", ") + name_text(k) + ": " + value_text(v);
      first = false;
    }
    return s + " }";
  }
  throw Error("value has no DSL form: " + j.dump());
}

inline std::string params_text(const Json& j) {
  std::string s = "(";
  bool first = true;
  for (const auto& [k, v] : j.items()) {
    s += (first ? "" : ", ") + name_text(k) + " = " + value_text(v);
    first = false;
  }
  return s + ")";
}

inline int precedence(BoolExpr::Kind k) {
  switch (k) {
    case BoolExpr::Kind::kOr: return 1;
    case BoolExpr::Kind::kAnd: return 2;
    case BoolExpr::Kind::kNot: return 3;
    case BoolExpr::Kind::kRef: return 4;
  }
  return 4;
}

}  // namespace detail

/// Minimal parentheses that still reproduce the tree: a child is wrapped
/// when it binds looser than its parent, or when it is an And/Or nested in
/// the same operator (so the nesting survives a reparse).
inline std::string print_bool(const BoolExpr& e) {
  using K = BoolExpr::Kind;
  if (e.kind == K::kRef) return e.type + "(" + detail::quote(e.name) + ")";
  const auto child = [&](const BoolExpr& c) {
    const bool wrap = detail::precedence(c.kind) < detail::precedence(e.kind) ||
                      (c.kind == e.kind && c.kind != K::kNot) ||
                      (e.kind == K::kNot && (c.kind == K::kAnd || c.kind == K::kOr));
    const std::string s = print_bool(c);
    return wrap ? "(" + s + ")" : s;
  };
  if (e.kind == K::kNot) return "NOT " + child(e.children.front());
  const std::string op = e.kind == K::kAnd ? " AND " : " OR ";
  std::string s;
  for (std::size_t i = 0; i < e.children.size(); ++i) s += (i ? op : "") + child(e.children[i]);
  return s;
}

inline BoolExpr to_bool_expr(const RuleNode& n) {
  switch (n.op) {
    case RuleNode::Op::kLeaf: return BoolExpr::Ref(std::string(to_string(n.leaf.type)), n.leaf.name);
    case RuleNode::Op::kNot: return BoolExpr::Not(to_bool_expr(n.children.front()));
    case RuleNode::Op::kAnd:
    case RuleNode::Op::kOr: {
      std::vector<BoolExpr> cs;
      for (const auto& c : n.children) cs.push_back(to_bool_expr(c));
      return BoolExpr::Nary(n.op == RuleNode::Op::kAnd ? BoolExpr::Kind::kAnd : BoolExpr::Kind::kOr, std::move(cs));
    }
  }
  return {};
}

inline std::string print_rule(const RuleNode& n) { return print_bool(to_bool_expr(n)); }

/// DSL source for a config. Plugin blocks that two or more routes share
/// become top-level templates named `<type>_shared_<n>`.
inline std::string decompile(const RouterConfig& config) {
  using detail::name_text;
  using detail::value_text;
  std::ostringstream out;

  for (const auto& s : config.signals) {
    Json fields = schema::to_json(s);
    fields.erase("type");
    fields.erase("name");
    out << "SIGNAL " << to_string(s.type) << ' ' << name_text(s.name) << ' ' << value_text(fields) << '\n';
  }

  // (type, canonical fields) -> use count, then template names in first-use order.
  std::vector<Json> route_plugins;
  std::map<std::pair<std::string, std::string>, int> uses;
  for (const auto& d : config.decisions) {
    route_plugins.push_back(schema::to_json(d.plugins));
    for (const auto& [type, fields] : route_plugins.back().items()) ++uses[{type, fields.dump()}];
  }
  std::map<std::pair<std::string, std::string>, std::string> templates;
  std::map<std::string, int> per_type;
  std::vector<std::pair<std::string, std::pair<std::string, Json>>> template_order;
  for (const auto& rp : route_plugins) {
    for (const auto& [type, fields] : rp.items()) {
      const auto key = std::make_pair(type, fields.dump());
      if (uses[key] < 2 || templates.count(key)) continue;
      const std::string name = type + "_shared_" + std::to_string(++per_type[type]);
      templates[key] = name;
      template_order.push_back({name, {type, fields}});
    }
  }
  if (!config.signals.empty() && !template_order.empty()) out << '\n';
  for (const auto& [name, tf] : template_order) {
    out << "PLUGIN " << name << ' ' << tf.first << ' ' << value_text(tf.second) << '\n';
  }

  for (std::size_t i = 0; i < config.decisions.size(); ++i) {
    const Decision& d = config.decisions[i];
    out << "\nROUTE " << name_text(d.name);
    Json header = Json::object();
    if (d.description) header["description"] = *d.description;
    if (d.pin_model) header["pin_model"] = true;
    if (!header.empty()) out << ' ' << detail::params_text(header);
    out << " {\n";
    out << "  PRIORITY " << d.priority << '\n';
    out << "  WHEN " << print_rule(d.rule) << '\n';
    for (std::size_t m = 0; m < d.model_refs.size(); ++m) {
      Json params = schema::to_json(d.model_refs[m]);
      params.erase("model");
      out << (m == 0 ? "  MODEL " : ",\n        ") << detail::quote(d.model_refs[m].model);
      if (!params.empty()) out << ' ' << detail::params_text(params);
    }
    out << '\n';
    if (d.algorithm.type != "static" || !d.algorithm.params.empty()) {
      out << "  ALGORITHM " << name_text(d.algorithm.type);
      if (!d.algorithm.params.empty()) out << ' ' << value_text(d.algorithm.params);
      out << '\n';
    }
    for (const auto& [type, fields] : route_plugins[i].items()) {
      auto t = templates.find({type, fields.dump()});
      if (t != templates.end()) {
        out << "  PLUGIN " << t->second << '\n';
      } else {
        out << "  PLUGIN " << type;
        if (!fields.empty()) out << ' ' << value_text(fields);
        out << '\n';
      }
    }
    out << "}\n";
  }

  if (!config.endpoints.entries.empty()) out << '\n';
  for (const auto& e : config.endpoints.entries) {
    Json fields = schema::to_json(e);
    fields.erase("name");
    fields.erase("type");
    out << "BACKEND " << name_text(e.name) << ' ' << e.type << ' ' << value_text(fields) << '\n';
  }
  const Json g = schema::to_json(config.globals);
  if (!g.empty()) out << "GLOBAL " << value_text(g) << '\n';
  return out.str();
}

}  // namespace srouter::dsl
