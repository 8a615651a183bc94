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

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "srouter/dsl/compile.hpp"
#include "srouter/dsl/parser.hpp"

namespace srouter::dsl {

/// Levenshtein distance bound for quick-fix suggestions.
inline constexpr std::size_t kQuickFixDistance = 2;

inline std::optional<std::string> nearest(const std::string& name, const std::vector<std::string>& pool) {
  std::optional<std::string> best;
  std::size_t best_d = kQuickFixDistance + 1;
  for (const auto& p : pool) {
    const std::size_t d = text::levenshtein(name, p);
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

namespace detail {

class Validator {
 public:
  explicit Validator(const Program& p) : p_(p) {}

  std::vector<Diagnostic> run() {
    signals();
    templates();
    routes();
    backends();
    global();
    return std::move(out_);
  }

 private:
  void warn(std::string msg, Pos pos, std::optional<std::string> fix = std::nullopt) {
    out_.push_back({Level::kWarning, std::move(msg), pos, std::move(fix)});
  }
  void constraint(std::string msg, Pos pos) { out_.push_back({Level::kConstraint, std::move(msg), pos, std::nullopt}); }

  // Points at the field a message names, else at the block.
  static Pos locate(const Value& fields, const std::string& msg, Pos fallback) {
    std::size_t best_len = 0;
    Pos best = fallback;
    for (const auto& [k, v] : fields.fields) {
      if (k.size() > best_len && msg.find(k) != std::string::npos) {
        best_len = k.size();
        best = v.pos;
      }
    }
    return best;
  }

  template <typename F>
  void check(const Value& fields, Pos pos, F&& body) {
    try {
      body();
    } catch (const ConfigError& e) {
      constraint(e.what(), locate(fields, e.what(), pos));
    }
  }

  void signals() {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& s : p_.signals) {
      const auto type = parse_signal_type(s.type);
      if (!type) {
        constraint("unknown signal type '" + s.type + "'", s.pos);
        continue;
      }
      if (!seen.insert({s.type, s.name}).second) constraint("duplicate signal " + s.type + "(\"" + s.name + "\")", s.pos);
      names_[*type].push_back(s.name);
      check(s.fields, s.pos, [&] {
        const SignalRuleDef def = schema::signal_from_json(lower::signal(s), 0);
        srouter::detail::check_signal(def);
        lowered_.signals.push_back(def);
      });
    }
  }

  void plugin_fields(const std::string& type, const Json& fields, const Value& where, Pos pos,
                     const std::string& owner) {
    check(where, pos, [&] {
      Json wrapped = Json::object();
      wrapped[type] = fields;
      const PluginChainConfig pc = schema::plugins_from_json(wrapped, owner);
      srouter::detail::check_plugins(pc, lowered_, owner);
    });
  }

  void templates() {
    std::set<std::string> seen;
    for (const auto& t : p_.plugins) {
      if (!seen.insert(t.name).second) constraint("duplicate plugin template '" + t.name + "'", t.pos);
      if (!is_plugin_type(t.type)) {
        constraint("unknown plugin type '" + t.type + "'", t.pos);
        continue;
      }
      plugin_fields(t.type, t.fields.to_json(), t.fields, t.pos, "plugin '" + t.name + "'");
    }
  }

  void refs(const BoolExpr& e) {
    if (e.kind != BoolExpr::Kind::kRef) {
      for (const auto& c : e.children) refs(c);
      return;
    }
    const auto type = parse_signal_type(e.type);
    if (!type) {
      constraint("unknown signal type '" + e.type + "'", e.pos);
      return;
    }
    const auto& pool = names_[*type];
    if (std::find(pool.begin(), pool.end(), e.name) != pool.end()) return;
    warn("undefined signal " + e.type + "(\"" + e.name + "\")", e.name_pos, nearest(e.name, pool));
  }

  bool served(const std::string& model) const {
    for (const auto& b : p_.backends) {
      const Value* models = b.fields.find("models");
      if (!models || models->kind != Value::Kind::kList || models->items.empty()) return true;
      for (const auto& m : models->items) {
        if (m.kind == Value::Kind::kString && m.str == model) return true;
      }
    }
    return false;
  }

  void routes() {
    std::set<std::string> seen;
    std::vector<std::string> template_names;
    for (const auto& t : p_.plugins) template_names.push_back(t.name);
    std::vector<std::string> plugin_pool = template_names;
    plugin_pool.insert(plugin_pool.end(), kPluginTypes.begin(), kPluginTypes.end());

    for (const auto& r : p_.routes) {
      const std::string owner = "route '" + r.name + "'";
      if (!seen.insert(r.name).second) constraint("duplicate route '" + r.name + "'", r.pos);
      if (r.priority && *r.priority < 0) {
        constraint(owner + ": negative priority " + std::to_string(*r.priority), r.priority_pos);
      }
      if (r.when) {
        refs(*r.when);
      } else {
        constraint(owner + " has no WHEN clause", r.pos);
      }
      if (r.models.empty()) constraint(owner + " has no MODEL", r.pos);
      for (const auto& [k, v] : r.params.fields) {
        if (k != "description" && k != "pin_model") constraint(owner + ": unknown parameter '" + k + "'", v.pos);
      }
      for (const auto& m : r.models) {
        check(m.params, m.pos, [&] {
          Json j = m.params.to_json();
          j["model"] = m.model;
          const ModelRef ref = schema::model_ref_from_json(j, owner + " model '" + m.model + "'");
          if (ref.weight && !(*ref.weight >= 0.0)) srouter::detail::constraint(owner + ": model weight must be >= 0");
          if (ref.cost && !(*ref.cost >= 0.0)) srouter::detail::constraint(owner + ": model cost must be >= 0");
          if (ref.score) srouter::detail::check_unit(*ref.score, owner + " score");
        });
        if (!served(m.model)) warn(owner + ": model '" + m.model + "' is not served by any BACKEND", m.pos);
      }
      if (r.algorithm) {
        check(r.algorithm->params, r.algorithm->pos, [&] {
          Json a = r.algorithm->params.to_json();
          a["type"] = r.algorithm->type;
          srouter::detail::check_algorithm(schema::algorithm_from_json(a, owner), owner);
        });
      }
      std::set<std::string> types;
      for (const auto& use : r.plugins) {
        if (!lower::find_template(p_, use.ref) && !is_plugin_type(use.ref)) {
          warn(owner + ": undefined plugin '" + use.ref + "'", use.pos, nearest(use.ref, plugin_pool));
          continue;
        }
        lower::ResolvedPlugin rp;
        try {
          rp = lower::resolve(p_, use);
        } catch (const ConfigError&) {
          continue;  // bad template type, already reported
        }
        if (!types.insert(rp.type).second) constraint(owner + ": plugin type '" + rp.type + "' attached twice", use.pos);
        plugin_fields(rp.type, rp.fields, use.fields ? *use.fields : Value{}, use.pos, owner);
        if (rp.type == "modality" && rp.fields.contains("model") && rp.fields["model"].is_string() &&
            !served(rp.fields["model"].get<std::string>())) {
          warn(owner + ": modality model is not served by any BACKEND", use.pos);
        }
      }
    }
  }

  void backends() {
    std::set<std::string> seen;
    for (const auto& b : p_.backends) {
      if (!seen.insert(b.name).second) constraint("duplicate backend '" + b.name + "'", b.pos);
      check(b.fields, b.pos, [&] {
        const Endpoint e = schema::endpoint_from_json(lower::backend(b), 0);
        const std::string where = "backend '" + e.name + "'";
        if (e.address.empty()) srouter::detail::constraint(where + ": empty address");
        if (!(e.weight > 0.0)) srouter::detail::constraint(where + ": weight must be > 0");
        if (e.auth.kind == AuthKind::kApiKey && e.auth.secret_ref.empty()) {
          srouter::detail::constraint(where + ": api_key auth needs a secret_ref");
        }
      });
    }
  }

  void global() {
    if (!p_.global) return;
    const auto& g = *p_.global;
    check(g.fields, g.pos, [&] {
      const Globals globals = schema::globals_from_json(g.fields.to_json());
      srouter::detail::check_unit(globals.fuzzy_match_threshold, "global fuzzy_match_threshold");
      if (globals.default_model && !served(*globals.default_model)) {
        warn("default_model '" + *globals.default_model + "' is not served by any BACKEND",
             locate(g.fields, "default_model", g.pos));
      }
    });
  }

  const Program& p_;
  std::vector<Diagnostic> out_;
  std::map<SignalType, std::vector<std::string>> names_;
  RouterConfig lowered_;  // signals accepted so far, for plugin reference checks
};

}  // namespace detail

/// Level 1 carries the parse errors; levels 2 and 3 come from the AST.
/// Everything accumulates; nothing is fatal.
inline std::vector<Diagnostic> validate(const ParseResult& parsed) {
  std::vector<Diagnostic> out = parsed.diagnostics;
  auto more = detail::Validator(parsed.program).run();
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

inline bool has_level(const std::vector<Diagnostic>& ds, Level l) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.level == l; });
}

/// 0 clean, 1 warnings only, 2 any error or constraint.
inline int exit_code(const std::vector<Diagnostic>& ds) {
  if (has_level(ds, Level::kError) || has_level(ds, Level::kConstraint)) return 2;
  return has_level(ds, Level::kWarning) ? 1 : 0;
}

struct CompileOptions {
  bool force = false;  // compile despite warnings
};

/// parse + validate + compile. Errors and constraints always block;
/// warnings block unless forced. Throws DslError or ConfigError.
inline RouterConfig compile_source(std::string_view source, CompileOptions opt = {}) {
  const ParseResult parsed = parse(source);
  auto diags = validate(parsed);
  const int code = exit_code(diags);
  if (code == 2 || (code == 1 && !opt.force)) throw DslError(std::move(diags));
  return compile(parsed.program);
}

}  // namespace srouter::dsl
