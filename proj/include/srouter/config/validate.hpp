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
#include <cmath>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/core/error.hpp"
#include "srouter/core/text.hpp"

/// Load-time invariant checks and normalization.
namespace srouter {

namespace detail {

[[noreturn]] inline void constraint(const std::string& msg) {
  throw ConfigError(ConfigError::Kind::kConstraint, msg);
}

[[noreturn]] inline void reference(const std::string& msg) {
  throw ConfigError(ConfigError::Kind::kReference, msg);
}

inline void check_unit(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) constraint(what + " = " + std::to_string(v) + " is outside [0,1]");
}

inline std::regex compile_keyword_regex(const std::string& pattern, bool case_sensitive) {
  auto flags = std::regex::ECMAScript;
  if (!case_sensitive) flags |= std::regex::icase;
  return std::regex(pattern, flags);
}

inline void check_signal(const SignalRuleDef& def) {
  const std::string where = "signal " + to_string(def.key());
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KeywordParams>) {
          if (p.keywords.empty()) constraint(where + ": keywords must not be empty");
          if (p.threshold) check_unit(*p.threshold, where + " threshold");
          if (p.method == KeywordMethod::kRegex) {
            for (const auto& k : p.keywords) {
              if (k.empty()) constraint(where + ": empty keyword");
              if (!text::has_regex_meta(k)) continue;
              try {
                compile_keyword_regex(k, p.case_sensitive);
              } catch (const std::regex_error& e) {
                constraint(where + ": invalid pattern '" + k + "': " + e.what());
              }
            }
          }
        } else if constexpr (std::is_same_v<T, ContextParams>) {
          if (p.min_tokens < 0) constraint(where + ": min_tokens must be >= 0");
          if (p.max_tokens && *p.max_tokens < p.min_tokens) constraint(where + ": max_tokens < min_tokens");
        } else if constexpr (std::is_same_v<T, LanguageParams>) {
          if (p.languages.empty()) constraint(where + ": languages must not be empty");
        } else if constexpr (std::is_same_v<T, AuthzParams>) {
          if (p.roles.empty()) constraint(where + ": roles must not be empty");
          if (p.header.empty()) constraint(where + ": header must not be empty");
        } else if constexpr (std::is_same_v<T, EmbeddingParams>) {
          if (p.candidates.empty()) constraint(where + ": candidates must not be empty");
          check_unit(p.threshold, where + " threshold");
        } else if constexpr (std::is_same_v<T, ComplexityParams>) {
          if (p.hard.empty() || p.easy.empty()) constraint(where + ": hard and easy exemplar sets must not be empty");
          check_unit(p.threshold, where + " threshold");
        } else if constexpr (std::is_same_v<T, JailbreakParams>) {
          if (p.threshold) check_unit(*p.threshold, where + " threshold");
          if (p.method == JailbreakMethod::kContrastive &&
              (p.jailbreak_patterns.empty() || p.benign_patterns.empty())) {
            constraint(where + ": contrastive method needs jailbreak_patterns and benign_patterns");
          }
        } else if constexpr (std::is_same_v<T, PiiParams>) {
          check_unit(p.threshold, where + " threshold");
        } else {
          if (p.labels.empty()) constraint(where + ": label list must not be empty");
          check_unit(p.threshold, where + " threshold");
        }
      },
      def.params);
}

/// Collapses single-child And/Or, splices same-operator children into their
/// parent (And(And(a,b),c) becomes And(a,b,c)) and checks arity.
inline void normalize_rule(RuleNode& node, const std::string& where) {
  for (auto& c : node.children) normalize_rule(c, where);
  switch (node.op) {
    case RuleNode::Op::kLeaf:
      return;
    case RuleNode::Op::kNot:
      if (node.children.size() != 1) constraint(where + ": NOT takes exactly one child");
      return;
    case RuleNode::Op::kAnd:
    case RuleNode::Op::kOr:
      if (node.children.empty()) constraint(where + ": AND/OR need at least one child");
      if (std::any_of(node.children.begin(), node.children.end(), [&](const RuleNode& c) { return c.op == node.op; })) {
        std::vector<RuleNode> flat;
        for (auto& c : node.children) {
          if (c.op == node.op) {
            for (auto& g : c.children) flat.push_back(std::move(g));
          } else {
            flat.push_back(std::move(c));
          }
        }
        node.children = std::move(flat);
      }
      if (node.children.size() == 1) {
        RuleNode only = std::move(node.children.front());
        node = std::move(only);
      }
      return;
  }
}

inline std::string nearest_name(const std::string& name, const std::vector<std::string>& pool) {
  std::string best;
  std::size_t best_d = 3;
  for (const auto& p : pool) {
    const std::size_t d = text::levenshtein(name, p);
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

enum class ParamKind { kNumber, kInteger, kString, kBool, kStrings, kIntegers, kNumbers };

struct ParamSpec {
  std::string_view key;
  ParamKind kind;
};

inline const std::map<std::string_view, std::vector<ParamSpec>>& algorithm_param_specs() {
  using K = ParamKind;
  static const std::map<std::string_view, std::vector<ParamSpec>> specs{
      {"static", {}},
      {"confidence", {{"threshold", K::kNumber}}},
      {"elo", {{"k_factor", K::kNumber}, {"initial_rating", K::kNumber}, {"mode", K::kString}, {"seed", K::kInteger}}},
      {"routerdc", {{"model_file", K::kString}}},
      {"hybrid",
       {{"alpha", K::kNumber}, {"beta", K::kNumber}, {"gamma", K::kNumber}, {"model_file", K::kString}}},
      {"automix", {{"thresholds", K::kIntegers}}},
      {"knn", {{"k", K::kInteger}, {"model_file", K::kString}}},
      {"kmeans", {{"alpha", K::kNumber}, {"model_file", K::kString}}},
      {"mlp", {{"model_file", K::kString}}},
      {"thompson", {{"seed", K::kInteger}}},
      {"latency_aware", {{"metrics", K::kStrings}, {"percentile", K::kNumber}}},
      {"remom",
       {{"breadth", K::kIntegers},
        {"distribution", K::kString},
        {"compaction", K::kString},
        {"compaction_tokens", K::kInteger},
        {"temperature", K::kNumber},
        {"concurrency", K::kInteger},
        {"template", K::kString},
        {"seed", K::kInteger}}},
  };
  return specs;
}

inline bool kind_matches(const Json& v, ParamKind kind) {
  const auto all = [&](auto pred) {
    if (!v.is_array()) return false;
    for (const auto& x : v) {
      if (!pred(x)) return false;
    }
    return true;
  };
  switch (kind) {
    case ParamKind::kNumber: return v.is_number();
    case ParamKind::kInteger: return v.is_number_integer();
    case ParamKind::kString: return v.is_string();
    case ParamKind::kBool: return v.is_boolean();
    case ParamKind::kStrings: return all([](const Json& x) { return x.is_string(); });
    case ParamKind::kIntegers: return all([](const Json& x) { return x.is_number_integer(); });
    case ParamKind::kNumbers: return all([](const Json& x) { return x.is_number(); });
  }
  return false;
}

inline void check_one_of(const Json& params, std::string_view key, std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
  auto it = params.find(key);
  if (it == params.end()) return;
  const auto s = it->get<std::string>();
  for (auto a : allowed) {
    if (a == s) return;
  }
  constraint(where + ": " + std::string(key) + " '" + s + "' is not allowed");
}

inline void check_algorithm(const AlgorithmConfig& a, const std::string& where) {
  const auto& specs = algorithm_param_specs();
  auto it = specs.find(a.type);
  if (it == specs.end()) constraint(where + ": unknown selection algorithm '" + a.type + "'");
  for (const auto& [k, v] : a.params.items()) {
    const ParamSpec* spec = nullptr;
    for (const auto& s : it->second) {
      if (s.key == k) spec = &s;
    }
    if (!spec) {
      throw ConfigError(ConfigError::Kind::kParse,
                        where + ": unknown parameter '" + k + "' for algorithm '" + a.type + "'");
    }
    if (!kind_matches(v, spec->kind)) {
      throw ConfigError(ConfigError::Kind::kParse, where + ": parameter '" + k + "' has the wrong type");
    }
  }
  const auto num = [&](std::string_view k, double def) { return a.params.value(std::string(k), def); };
  const auto integer = [&](std::string_view k, std::int64_t def) {
    return a.params.value(std::string(k), def);
  };
  if (a.type == "confidence") check_unit(num("threshold", 0.5), where + " threshold");
  if (a.type == "elo") {
    if (!(num("k_factor", 32.0) > 0.0)) constraint(where + ": k_factor must be > 0");
    check_one_of(a.params, "mode", {"sample", "argmax"}, where);
  }
  if (a.type == "hybrid") {
    const double al = num("alpha", 1.0 / 3), be = num("beta", 1.0 / 3), ga = num("gamma", 1.0 / 3);
    if (al < 0 || be < 0 || ga < 0) constraint(where + ": hybrid weights must be >= 0");
    if (std::abs(al + be + ga - 1.0) > 1e-9) constraint(where + ": hybrid weights must sum to 1");
  }
  if (a.type == "knn" && integer("k", 5) < 1) constraint(where + ": k must be >= 1");
  if (a.type == "kmeans") check_unit(num("alpha", 0.5), where + " alpha");
  if (a.type == "latency_aware") {
    const double p = num("percentile", 50.0);
    if (!(p > 0.0 && p <= 100.0)) constraint(where + ": percentile must be in (0,100]");
    if (auto m = a.params.find("metrics"); m != a.params.end()) {
      if (m->empty()) constraint(where + ": metrics must not be empty");
      for (const auto& x : *m) {
        const auto s = x.get<std::string>();
        if (s != "tpot" && s != "ttft") constraint(where + ": unknown latency metric '" + s + "'");
      }
    }
  }
  if (a.type == "remom") {
    if (auto b = a.params.find("breadth"); b != a.params.end()) {
      for (const auto& x : *b) {
        if (x.get<std::int64_t>() < 1) constraint(where + ": breadth entries must be >= 1");
      }
    }
    check_one_of(a.params, "distribution", {"equal", "weighted", "first_only"}, where);
    check_one_of(a.params, "compaction", {"full", "last_n_tokens"}, where);
    if (integer("concurrency", 8) < 1) constraint(where + ": concurrency must be >= 1");
    if (integer("compaction_tokens", 512) < 1) constraint(where + ": compaction_tokens must be >= 1");
  }
}

inline void check_plugins(const PluginChainConfig& p, const RouterConfig& config, const std::string& where) {
  if (p.cache) check_unit(p.cache->similarity_threshold, where + " semantic_cache.similarity_threshold");
  if (p.pii) check_unit(p.pii->threshold, where + " pii.threshold");
  if (p.rag) {
    if (p.rag->top_k < 1) constraint(where + ": rag.top_k must be >= 1");
    if (p.rag->threshold) check_unit(*p.rag->threshold, where + " rag.threshold");
  }
  if (p.memory && p.memory->top_k < 1) constraint(where + ": memory.top_k must be >= 1");
  if (p.header_mutation) {
    for (const auto& m : p.header_mutation->mutations) {
      if (m.name.empty()) constraint(where + ": header mutation with empty header name");
    }
  }
  if (p.modality && p.modality->enabled) {
    if (p.modality->model.empty()) constraint(where + ": modality.model must not be empty");
    if (!config.find_signal({SignalType::kModality, p.modality->signal})) {
      reference(where + ": modality plugin references undefined signal modality(\"" + p.modality->signal + "\")");
    }
  }
}

}  // namespace detail

/// Enforces every RouterConfig invariant in place: names, ranges, references,
/// rule arity, endpoint coverage. Assigns insertion indices in list order.
inline void finalize(RouterConfig& config) {
  using detail::constraint;
  using detail::reference;

  std::set<SignalKey> declared;
  std::map<SignalType, std::vector<std::string>> names_by_type;
  for (const auto& s : config.signals) {
    if (s.name.empty()) constraint("signal of type " + std::string(to_string(s.type)) + " has an empty name");
    if (!declared.insert(s.key()).second) constraint("duplicate signal " + to_string(s.key()));
    names_by_type[s.type].push_back(s.name);
    detail::check_signal(s);
  }

  std::set<std::string> decision_names;
  for (std::size_t i = 0; i < config.decisions.size(); ++i) {
    auto& d = config.decisions[i];
    d.insertion_index = i;
    const std::string where = "decision '" + d.name + "'";
    if (d.name.empty()) constraint("decision with an empty name");
    if (!decision_names.insert(d.name).second) constraint("duplicate decision name '" + d.name + "'");
    detail::normalize_rule(d.rule, where);
    std::set<SignalKey> leaves;
    collect_leaves(d.rule, leaves);
    for (const auto& leaf : leaves) {
      if (declared.count(leaf)) continue;
      std::string msg = where + " references undefined signal " + to_string(leaf);
      const auto hint = detail::nearest_name(leaf.name, names_by_type[leaf.type]);
      if (!hint.empty()) msg += "; did you mean \"" + hint + "\"?";
      reference(msg);
    }
    if (d.model_refs.empty()) constraint(where + ": model candidates must not be empty");
    for (const auto& m : d.model_refs) {
      if (m.model.empty()) constraint(where + ": empty model name");
      if (m.weight && !(*m.weight >= 0.0)) constraint(where + ": model weight must be >= 0");
      if (m.cost && !(*m.cost >= 0.0)) constraint(where + ": model cost must be >= 0");
      if (m.score) detail::check_unit(*m.score, where + " score");
    }
    detail::check_algorithm(d.algorithm, where);
    detail::check_plugins(d.plugins, config, where);
  }

  std::set<std::string> endpoint_names;
  for (const auto& e : config.endpoints.entries) {
    const std::string where = "backend '" + e.name + "'";
    if (e.name.empty()) constraint("backend with an empty name");
    if (!endpoint_names.insert(e.name).second) constraint("duplicate backend name '" + e.name + "'");
    if (e.address.empty()) constraint(where + ": empty address");
    if (e.port < 1 || e.port > 65535) constraint(where + ": port out of range");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) constraint(where + ": weight must be > 0");
    if (e.auth.kind == AuthKind::kApiKey && e.auth.secret_ref.empty()) {
      constraint(where + ": api_key auth needs a secret_ref");
    }
  }

  const auto check_served = [&](const std::string& model, const std::string& who) {
    for (const auto& e : config.endpoints.entries) {
      if (e.serves(model)) return;
    }
    reference(who + ": model '" + model + "' is not served by any backend");
  };
  for (const auto& d : config.decisions) {
    for (const auto& m : d.model_refs) check_served(m.model, "decision '" + d.name + "'");
    if (d.plugins.modality && d.plugins.modality->enabled) {
      check_served(d.plugins.modality->model, "decision '" + d.name + "' modality plugin");
    }
  }
  if (config.globals.default_model) check_served(*config.globals.default_model, "global default_model");
  detail::check_unit(config.globals.fuzzy_match_threshold, "global fuzzy_match_threshold");
}

}  // namespace srouter
