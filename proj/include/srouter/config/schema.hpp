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
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/core/error.hpp"

/// Strict conversion between the document tree and RouterConfig.
///
/// Unknown keys are rejected. Defaults are omitted on output, so
/// to_json(from_json(x)) is the canonical form of x.
namespace srouter::schema {

[[noreturn]] inline void parse_fail(const std::string& msg) {
  throw ConfigError(ConfigError::Kind::kParse, msg);
}

/// Reads typed fields out of one mapping and remembers which keys were used.
class FieldReader {
 public:
  FieldReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) parse_fail(where_ + ": expected a mapping");
  }

  const std::string& where() const { return where_; }

  const Json* raw(std::string_view key) {
    used_.insert(std::string(key));
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::optional<std::string> opt_str(std::string_view key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) type_fail(key, "a string");
    return v->get<std::string>();
  }
  std::string str(std::string_view key, std::string def = {}) {
    return opt_str(key).value_or(std::move(def));
  }
  std::string required_str(std::string_view key) {
    auto v = opt_str(key);
    if (!v) parse_fail(where_ + ": missing required key '" + std::string(key) + "'");
    return *v;
  }

  std::optional<double> opt_num(std::string_view key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) type_fail(key, "a number");
    return v->get<double>();
  }
  double num(std::string_view key, double def) { return opt_num(key).value_or(def); }

  std::optional<std::int64_t> opt_int(std::string_view key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) type_fail(key, "an integer");
    return v->get<std::int64_t>();
  }
  std::int64_t integer(std::string_view key, std::int64_t def) { return opt_int(key).value_or(def); }

  std::optional<bool> opt_bool(std::string_view key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) type_fail(key, "a boolean");
    return v->get<bool>();
  }
  bool boolean(std::string_view key, bool def) { return opt_bool(key).value_or(def); }

  std::optional<std::vector<std::string>> opt_strings(std::string_view key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) type_fail(key, "a list of strings");
    std::vector<std::string> out;
    for (const auto& item : *v) {
      if (!item.is_string()) type_fail(key, "a list of strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }
  std::vector<std::string> strings(std::string_view key) { return opt_strings(key).value_or(std::vector<std::string>{}); }

  const Json* list(std::string_view key) {
    const Json* v = raw(key);
    if (v && !v->is_array()) type_fail(key, "a list");
    return v;
  }

  /// Throws on any key that no accessor asked for.
  void done() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) parse_fail(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  [[noreturn]] void type_fail(std::string_view key, const char* what) const {
    parse_fail(where_ + ": key '" + std::string(key) + "' must be " + what);
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> used_;
};

template <typename E, std::size_t N>
E parse_enum(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s,
             const std::string& where) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  std::string allowed;
  for (const auto& [e, name] : table) {
    if (!allowed.empty()) allowed += ", ";
    allowed += name;
  }
  parse_fail(where + ": '" + std::string(s) + "' is not one of {" + allowed + "}");
}

template <typename E, std::size_t N>
std::string enum_name(const std::array<std::pair<E, std::string_view>, N>& table, E e) {
  for (const auto& [v, name] : table) {
    if (v == e) return std::string(name);
  }
  return "unknown";
}

inline constexpr std::array<std::pair<Combinator, std::string_view>, 6> kCombinators{{
    {Combinator::kOr, "or"}, {Combinator::kAnd, "and"}, {Combinator::kNor, "nor"},
    {Combinator::kOr, "any"}, {Combinator::kAnd, "all"}, {Combinator::kNor, "none"}}};
inline constexpr std::array<std::pair<KeywordMethod, std::string_view>, 3> kKeywordMethods{{
    {KeywordMethod::kRegex, "regex"}, {KeywordMethod::kBm25, "bm25"}, {KeywordMethod::kNgram, "ngram"}}};
inline constexpr std::array<std::pair<ComplexityLevel, std::string_view>, 3> kLevels{{
    {ComplexityLevel::kHard, "hard"}, {ComplexityLevel::kEasy, "easy"}, {ComplexityLevel::kMedium, "medium"}}};
inline constexpr std::array<std::pair<JailbreakMethod, std::string_view>, 2> kJailbreakMethods{{
    {JailbreakMethod::kClassifier, "classifier"}, {JailbreakMethod::kContrastive, "contrastive"}}};
inline constexpr std::array<std::pair<PromptMode, std::string_view>, 2> kPromptModes{{
    {PromptMode::kInsert, "insert"}, {PromptMode::kReplace, "replace"}}};
inline constexpr std::array<std::pair<HeaderAction, std::string_view>, 3> kHeaderActions{{
    {HeaderAction::kAdd, "add"}, {HeaderAction::kUpdate, "update"}, {HeaderAction::kDelete, "delete"}}};
inline constexpr std::array<std::pair<HaluAction, std::string_view>, 4> kHaluActions{{
    {HaluAction::kHeader, "header"}, {HaluAction::kBlock, "block"}, {HaluAction::kBody, "body"},
    {HaluAction::kNone, "none"}}};
inline constexpr std::array<std::pair<FusionMode, std::string_view>, 2> kFusionModes{{
    {FusionMode::kWeighted, "weighted"}, {FusionMode::kRrf, "rrf"}}};
inline constexpr std::array<std::pair<AuthKind, std::string_view>, 3> kAuthKinds{{
    {AuthKind::kNone, "none"}, {AuthKind::kApiKey, "api_key"}, {AuthKind::kPassthrough, "passthrough"}}};
inline constexpr std::array<std::pair<Strategy, std::string_view>, 2> kStrategies{{
    {Strategy::kPriority, "priority"}, {Strategy::kConfidence, "confidence"}}};

/// Key used for the label list of each classifier-backed type.
inline std::string_view label_key(SignalType t) {
  return t == SignalType::kDomain ? "mmlu_categories" : "labels";
}

inline std::vector<std::string> default_labels(SignalType t, const std::string& name) {
  if (t == SignalType::kFactCheck) return {"needs_fact_check"};
  return {name};
}

// ---------------------------------------------------------------------------
// Signals

inline SignalRuleDef signal_from_json(const Json& j, std::size_t index) {
  FieldReader r(j, "signals[" + std::to_string(index) + "]");
  SignalRuleDef def;
  const std::string type = r.required_str("type");
  const auto parsed = parse_signal_type(type);
  if (!parsed) parse_fail(r.where() + ": unknown signal type '" + type + "'");
  def.type = *parsed;
  def.name = r.required_str("name");
  const std::string where = r.where() + " (" + def.name + ")";

  switch (def.type) {
    case SignalType::kKeyword: {
      KeywordParams p;
      if (auto op = r.opt_str("operator")) p.op = parse_enum(kCombinators, text::to_lower(*op), where);
      if (auto m = r.opt_str("method")) p.method = parse_enum(kKeywordMethods, *m, where);
      p.keywords = r.strings("keywords");
      p.threshold = r.opt_num("threshold");
      p.case_sensitive = r.boolean("case_sensitive", false);
      def.params = p;
      break;
    }
    case SignalType::kContext: {
      ContextParams p;
      p.min_tokens = r.integer("min_tokens", 0);
      p.max_tokens = r.opt_int("max_tokens");
      def.params = p;
      break;
    }
    case SignalType::kLanguage: {
      LanguageParams p;
      p.languages = r.opt_strings("languages").value_or(std::vector<std::string>{def.name});
      def.params = p;
      break;
    }
    case SignalType::kAuthz: {
      AuthzParams p;
      p.roles = r.strings("roles");
      p.header = r.str("header", "x-user-roles");
      def.params = p;
      break;
    }
    case SignalType::kEmbedding: {
      EmbeddingParams p;
      p.candidates = r.strings("candidates");
      const auto th = r.opt_num("threshold");
      if (!th) parse_fail(where + ": embedding rules need a threshold");
      p.threshold = *th;
      def.params = p;
      break;
    }
    case SignalType::kComplexity: {
      ComplexityParams p;
      p.hard = r.strings("hard");
      p.easy = r.strings("easy");
      p.threshold = r.num("threshold", 0.1);
      if (auto l = r.opt_str("level")) p.level = parse_enum(kLevels, *l, where);
      def.params = p;
      break;
    }
    case SignalType::kJailbreak: {
      JailbreakParams p;
      if (auto m = r.opt_str("method")) p.method = parse_enum(kJailbreakMethods, *m, where);
      p.threshold = r.opt_num("threshold");
      p.include_history = r.boolean("include_history", false);
      p.jailbreak_patterns = r.strings("jailbreak_patterns");
      p.benign_patterns = r.strings("benign_patterns");
      p.phrases = r.strings("phrases");
      def.params = p;
      break;
    }
    case SignalType::kPii: {
      PiiParams p;
      p.threshold = r.num("threshold", 0.5);
      p.allowed = r.strings("pii_types_allowed");
      def.params = p;
      break;
    }
    case SignalType::kDomain:
    case SignalType::kFactCheck:
    case SignalType::kFeedback:
    case SignalType::kModality:
    case SignalType::kPreference: {
      ClassifierParams p;
      p.labels = r.opt_strings(label_key(def.type)).value_or(default_labels(def.type, def.name));
      p.phrases = r.strings("phrases");
      p.threshold = r.num("threshold", 0.5);
      def.params = p;
      break;
    }
  }
  r.done();
  return def;
}

inline void put_strings(Json& j, const char* key, const std::vector<std::string>& v) {
  if (!v.empty()) j[key] = v;
}

inline Json to_json(const SignalRuleDef& def) {
  Json j = Json::object();
  j["type"] = std::string(to_string(def.type));
  j["name"] = def.name;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KeywordParams>) {
          if (p.op != Combinator::kOr) j["operator"] = enum_name(kCombinators, p.op);
          if (p.method != KeywordMethod::kRegex) j["method"] = enum_name(kKeywordMethods, p.method);
          j["keywords"] = p.keywords;
          if (p.threshold) j["threshold"] = *p.threshold;
          if (p.case_sensitive) j["case_sensitive"] = true;
        } else if constexpr (std::is_same_v<T, ContextParams>) {
          if (p.min_tokens != 0) j["min_tokens"] = p.min_tokens;
          if (p.max_tokens) j["max_tokens"] = *p.max_tokens;
        } else if constexpr (std::is_same_v<T, LanguageParams>) {
          j["languages"] = p.languages;
        } else if constexpr (std::is_same_v<T, AuthzParams>) {
          j["roles"] = p.roles;
          if (p.header != "x-user-roles") j["header"] = p.header;
        } else if constexpr (std::is_same_v<T, EmbeddingParams>) {
          j["candidates"] = p.candidates;
          j["threshold"] = p.threshold;
        } else if constexpr (std::is_same_v<T, ComplexityParams>) {
          j["hard"] = p.hard;
          j["easy"] = p.easy;
          if (p.threshold != 0.1) j["threshold"] = p.threshold;
          if (p.level != ComplexityLevel::kHard) j["level"] = enum_name(kLevels, p.level);
        } else if constexpr (std::is_same_v<T, JailbreakParams>) {
          if (p.method != JailbreakMethod::kClassifier) j["method"] = enum_name(kJailbreakMethods, p.method);
          if (p.threshold) j["threshold"] = *p.threshold;
          if (p.include_history) j["include_history"] = true;
          put_strings(j, "jailbreak_patterns", p.jailbreak_patterns);
          put_strings(j, "benign_patterns", p.benign_patterns);
          put_strings(j, "phrases", p.phrases);
        } else if constexpr (std::is_same_v<T, PiiParams>) {
          if (p.threshold != 0.5) j["threshold"] = p.threshold;
          put_strings(j, "pii_types_allowed", p.allowed);
        } else {
          j[std::string(label_key(def.type))] = p.labels;
          put_strings(j, "phrases", p.phrases);
          if (p.threshold != 0.5) j["threshold"] = p.threshold;
        }
      },
      def.params);
  return j;
}

// ---------------------------------------------------------------------------
// Rules

inline RuleNode rule_from_json(const Json& j, const std::string& where) {
  FieldReader r(j, where);
  if (auto op = r.opt_str("operator")) {
    const std::string upper = [&] {
      std::string s = *op;
      for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return s;
    }();
    const Json* conds = r.list("conditions");
    r.done();
    std::vector<RuleNode> children;
    if (conds) {
      for (std::size_t i = 0; i < conds->size(); ++i) {
        children.push_back(rule_from_json((*conds)[i], where + ".conditions[" + std::to_string(i) + "]"));
      }
    }
    if (upper == "AND") return RuleNode::And(std::move(children));
    if (upper == "OR") return RuleNode::Or(std::move(children));
    if (upper == "NOT") {
      if (children.size() != 1) {
        throw ConfigError(ConfigError::Kind::kConstraint,
                          where + ": NOT takes exactly one condition, got " + std::to_string(children.size()));
      }
      return RuleNode::Not(std::move(children.front()));
    }
    parse_fail(where + ": unknown operator '" + *op + "'");
  }
  const std::string type = r.required_str("type");
  const std::string name = r.required_str("name");
  r.done();
  const auto t = parse_signal_type(type);
  if (!t) parse_fail(where + ": unknown signal type '" + type + "'");
  return RuleNode::Leaf(*t, name);
}

inline Json to_json(const RuleNode& n) {
  Json j = Json::object();
  switch (n.op) {
    case RuleNode::Op::kLeaf:
      j["type"] = std::string(to_string(n.leaf.type));
      j["name"] = n.leaf.name;
      return j;
    case RuleNode::Op::kAnd: j["operator"] = "AND"; break;
    case RuleNode::Op::kOr: j["operator"] = "OR"; break;
    case RuleNode::Op::kNot: j["operator"] = "NOT"; break;
  }
  Json conds = Json::array();
  for (const auto& c : n.children) conds.push_back(to_json(c));
  j["conditions"] = std::move(conds);
  return j;
}

// ---------------------------------------------------------------------------
// Plugins

inline PluginChainConfig plugins_from_json(const Json& j, const std::string& where) {
  FieldReader r(j, where);
  PluginChainConfig p;
  if (const Json* v = r.raw("fast_response")) {
    FieldReader f(*v, where + ".fast_response");
    p.fast_response = FastResponseConfig{f.boolean("enabled", true), f.str("message")};
    f.done();
  }
  if (const Json* v = r.raw("semantic_cache")) {
    FieldReader f(*v, where + ".semantic_cache");
    p.cache = CacheConfig{f.boolean("enabled", true), f.num("similarity_threshold", 0.92)};
    f.done();
  }
  if (const Json* v = r.raw("pii")) {
    FieldReader f(*v, where + ".pii");
    p.pii = PiiRedactionConfig{f.boolean("enabled", true), f.num("threshold", 0.5),
                               f.strings("pii_types_allowed")};
    f.done();
  }
  if (const Json* v = r.raw("rag")) {
    FieldReader f(*v, where + ".rag");
    RagConfig c;
    c.enabled = f.boolean("enabled", true);
    c.store = f.str("store");
    c.top_k = static_cast<int>(f.integer("top_k", 5));
    if (auto m = f.opt_str("fusion")) c.fusion = parse_enum(kFusionModes, *m, f.where());
    c.threshold = f.opt_num("threshold");
    f.done();
    p.rag = c;
  }
  if (const Json* v = r.raw("modality")) {
    FieldReader f(*v, where + ".modality");
    p.modality = ModalityConfig{f.boolean("enabled", true), f.str("signal"), f.str("model")};
    f.done();
  }
  if (const Json* v = r.raw("memory")) {
    FieldReader f(*v, where + ".memory");
    MemoryConfig c;
    c.enabled = f.boolean("enabled", true);
    c.top_k = static_cast<int>(f.integer("top_k", 5));
    if (auto m = f.opt_str("fusion")) c.fusion = parse_enum(kFusionModes, *m, f.where());
    f.done();
    p.memory = c;
  }
  if (const Json* v = r.raw("system_prompt")) {
    FieldReader f(*v, where + ".system_prompt");
    SystemPromptConfig c;
    c.enabled = f.boolean("enabled", true);
    c.text = f.str("system_prompt");
    if (auto m = f.opt_str("mode")) c.mode = parse_enum(kPromptModes, *m, f.where());
    f.done();
    p.system_prompt = c;
  }
  if (const Json* v = r.raw("header_mutation")) {
    FieldReader f(*v, where + ".header_mutation");
    HeaderMutationConfig c;
    c.enabled = f.boolean("enabled", true);
    if (const Json* ms = f.list("mutations")) {
      for (std::size_t i = 0; i < ms->size(); ++i) {
        FieldReader m((*ms)[i], f.where() + ".mutations[" + std::to_string(i) + "]");
        HeaderMutation hm;
        hm.action = parse_enum(kHeaderActions, m.required_str("action"), m.where());
        hm.name = m.str("name");
        hm.value = m.str("value");
        m.done();
        c.mutations.push_back(std::move(hm));
      }
    }
    f.done();
    p.header_mutation = c;
  }
  if (const Json* v = r.raw("hallucination")) {
    FieldReader f(*v, where + ".hallucination");
    HallucinationConfig c;
    c.enabled = f.boolean("enabled", true);
    if (auto a = f.opt_str("action")) c.action = parse_enum(kHaluActions, *a, f.where());
    f.done();
    p.hallucination = c;
  }
  r.done();
  return p;
}

inline void put_enabled(Json& j, bool enabled) {
  if (!enabled) j["enabled"] = false;
}

inline Json to_json(const PluginChainConfig& p) {
  Json j = Json::object();
  if (p.fast_response) {
    Json f = Json::object();
    put_enabled(f, p.fast_response->enabled);
    if (!p.fast_response->message.empty()) f["message"] = p.fast_response->message;
    j["fast_response"] = f;
  }
  if (p.cache) {
    Json f = Json::object();
    put_enabled(f, p.cache->enabled);
    if (p.cache->similarity_threshold != 0.92) f["similarity_threshold"] = p.cache->similarity_threshold;
    j["semantic_cache"] = f;
  }
  if (p.pii) {
    Json f = Json::object();
    put_enabled(f, p.pii->enabled);
    if (p.pii->threshold != 0.5) f["threshold"] = p.pii->threshold;
    put_strings(f, "pii_types_allowed", p.pii->allowed);
    j["pii"] = f;
  }
  if (p.rag) {
    Json f = Json::object();
    put_enabled(f, p.rag->enabled);
    if (!p.rag->store.empty()) f["store"] = p.rag->store;
    if (p.rag->top_k != 5) f["top_k"] = p.rag->top_k;
    if (p.rag->fusion != FusionMode::kWeighted) f["fusion"] = enum_name(kFusionModes, p.rag->fusion);
    if (p.rag->threshold) f["threshold"] = *p.rag->threshold;
    j["rag"] = f;
  }
  if (p.modality) {
    Json f = Json::object();
    put_enabled(f, p.modality->enabled);
    if (!p.modality->signal.empty()) f["signal"] = p.modality->signal;
    if (!p.modality->model.empty()) f["model"] = p.modality->model;
    j["modality"] = f;
  }
  if (p.memory) {
    Json f = Json::object();
    put_enabled(f, p.memory->enabled);
    if (p.memory->top_k != 5) f["top_k"] = p.memory->top_k;
    if (p.memory->fusion != FusionMode::kWeighted) f["fusion"] = enum_name(kFusionModes, p.memory->fusion);
    j["memory"] = f;
  }
  if (p.system_prompt) {
    Json f = Json::object();
    put_enabled(f, p.system_prompt->enabled);
    if (!p.system_prompt->text.empty()) f["system_prompt"] = p.system_prompt->text;
    if (p.system_prompt->mode != PromptMode::kInsert) f["mode"] = enum_name(kPromptModes, p.system_prompt->mode);
    j["system_prompt"] = f;
  }
  if (p.header_mutation) {
    Json f = Json::object();
    put_enabled(f, p.header_mutation->enabled);
    if (!p.header_mutation->mutations.empty()) {
      Json ms = Json::array();
      for (const auto& m : p.header_mutation->mutations) {
        Json e = Json::object();
        e["action"] = enum_name(kHeaderActions, m.action);
        e["name"] = m.name;
        if (!m.value.empty()) e["value"] = m.value;
        ms.push_back(e);
      }
      f["mutations"] = ms;
    }
    j["header_mutation"] = f;
  }
  if (p.hallucination) {
    Json f = Json::object();
    put_enabled(f, p.hallucination->enabled);
    if (p.hallucination->action != HaluAction::kHeader) f["action"] = enum_name(kHaluActions, p.hallucination->action);
    j["hallucination"] = f;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Decisions

inline ModelRef model_ref_from_json(const Json& j, const std::string& where) {
  FieldReader r(j, where);
  ModelRef m;
  m.model = r.required_str("model");
  m.reasoning = r.opt_bool("reasoning");
  m.effort = r.opt_str("effort");
  m.lora = r.opt_str("lora");
  m.weight = r.opt_num("weight");
  m.score = r.opt_num("score");
  m.cost = r.opt_num("cost");
  r.done();
  return m;
}

inline Json to_json(const ModelRef& m) {
  Json j = Json::object();
  j["model"] = m.model;
  if (m.reasoning) j["reasoning"] = *m.reasoning;
  if (m.effort) j["effort"] = *m.effort;
  if (m.lora) j["lora"] = *m.lora;
  if (m.weight) j["weight"] = *m.weight;
  if (m.score) j["score"] = *m.score;
  if (m.cost) j["cost"] = *m.cost;
  return j;
}

inline AlgorithmConfig algorithm_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) parse_fail(where + ": expected a mapping");
  AlgorithmConfig a;
  auto it = j.find("type");
  if (it == j.end() || !it->is_string()) parse_fail(where + ": missing required key 'type'");
  a.type = it->get<std::string>();
  for (const auto& [k, v] : j.items()) {
    if (k != "type" && !v.is_null()) a.params[k] = v;
  }
  return a;
}

inline Json to_json(const AlgorithmConfig& a) {
  Json j = a.params;
  j["type"] = a.type;
  return j;
}

inline Decision decision_from_json(const Json& j, std::size_t index) {
  FieldReader r(j, "decisions[" + std::to_string(index) + "]");
  Decision d;
  d.name = r.required_str("name");
  const std::string where = "decision '" + d.name + "'";
  d.description = r.opt_str("description");
  d.priority = r.integer("priority", 0);
  const Json* rules = r.raw("rules");
  if (!rules) parse_fail(where + ": missing required key 'rules'");
  d.rule = rule_from_json(*rules, where + ".rules");
  if (const Json* refs = r.list("model_refs")) {
    for (std::size_t i = 0; i < refs->size(); ++i) {
      d.model_refs.push_back(model_ref_from_json((*refs)[i], where + ".model_refs[" + std::to_string(i) + "]"));
    }
  }
  if (const Json* a = r.raw("algorithm")) d.algorithm = algorithm_from_json(*a, where + ".algorithm");
  if (const Json* p = r.raw("plugins")) d.plugins = plugins_from_json(*p, where + ".plugins");
  d.pin_model = r.boolean("pin_model", false);
  d.insertion_index = index;
  r.done();
  return d;
}

inline Json to_json(const Decision& d) {
  Json j = Json::object();
  j["name"] = d.name;
  if (d.description) j["description"] = *d.description;
  if (d.priority != 0) j["priority"] = d.priority;
  j["rules"] = to_json(d.rule);
  Json refs = Json::array();
  for (const auto& m : d.model_refs) refs.push_back(to_json(m));
  j["model_refs"] = refs;
  if (d.algorithm.type != "static" || !d.algorithm.params.empty()) j["algorithm"] = to_json(d.algorithm);
  Json plugins = to_json(d.plugins);
  if (!plugins.empty()) j["plugins"] = plugins;
  if (d.pin_model) j["pin_model"] = true;
  return j;
}

// ---------------------------------------------------------------------------
// Backends and globals

inline Endpoint endpoint_from_json(const Json& j, std::size_t index) {
  FieldReader r(j, "backends[" + std::to_string(index) + "]");
  Endpoint e;
  e.name = r.required_str("name");
  const std::string where = "backend '" + e.name + "'";
  e.type = r.str("type", "vllm");
  if (std::find(kBackendTypes.begin(), kBackendTypes.end(), e.type) == kBackendTypes.end()) {
    parse_fail(where + ": unknown backend type '" + e.type + "'");
  }
  e.address = r.required_str("address");
  const auto port = r.opt_int("port");
  if (!port) parse_fail(where + ": missing required key 'port'");
  if (*port < 1 || *port > 65535) {
    throw ConfigError(ConfigError::Kind::kConstraint, where + ": port " + std::to_string(*port) + " out of range");
  }
  e.port = static_cast<int>(*port);
  e.weight = r.num("weight", 1.0);
  e.models = r.strings("models");
  if (const Json* a = r.raw("auth")) {
    FieldReader f(*a, where + ".auth");
    e.auth.kind = parse_enum(kAuthKinds, f.str("kind", "none"), f.where());
    e.auth.header = f.str("header");
    e.auth.secret_ref = f.str("secret_ref");
    f.done();
  }
  r.done();
  return e;
}

inline Json to_json(const Endpoint& e) {
  Json j = Json::object();
  j["name"] = e.name;
  j["type"] = e.type;
  j["address"] = e.address;
  j["port"] = e.port;
  if (e.weight != 1.0) j["weight"] = e.weight;
  put_strings(j, "models", e.models);
  if (e.auth != AuthProfile{}) {
    Json a = Json::object();
    a["kind"] = enum_name(kAuthKinds, e.auth.kind);
    if (!e.auth.header.empty()) a["header"] = e.auth.header;
    if (!e.auth.secret_ref.empty()) a["secret_ref"] = e.auth.secret_ref;
    j["auth"] = a;
  }
  return j;
}

inline Globals globals_from_json(const Json& j) {
  FieldReader r(j, "global");
  Globals g;
  g.default_model = r.opt_str("default_model");
  if (auto s = r.opt_str("strategy")) g.strategy = parse_enum(kStrategies, *s, "global");
  g.fuzzy_mode = r.boolean("fuzzy_mode", false);
  g.fuzzy_match_threshold = r.num("fuzzy_match_threshold", 0.5);
  r.done();
  return g;
}

inline Json to_json(const Globals& g) {
  Json j = Json::object();
  if (g.default_model) j["default_model"] = *g.default_model;
  if (g.strategy != Strategy::kPriority) j["strategy"] = enum_name(kStrategies, g.strategy);
  if (g.fuzzy_mode) j["fuzzy_mode"] = true;
  if (g.fuzzy_match_threshold != 0.5) j["fuzzy_match_threshold"] = g.fuzzy_match_threshold;
  return j;
}

// ---------------------------------------------------------------------------
// Whole document

/// Structural conversion only; call finalize() to enforce invariants.
inline RouterConfig config_from_json(const Json& j) {
  if (j.is_null()) parse_fail("empty document");
  FieldReader r(j, "document");
  RouterConfig c;
  if (const Json* s = r.list("signals")) {
    for (std::size_t i = 0; i < s->size(); ++i) c.signals.push_back(signal_from_json((*s)[i], i));
  }
  if (const Json* d = r.list("decisions")) {
    for (std::size_t i = 0; i < d->size(); ++i) c.decisions.push_back(decision_from_json((*d)[i], i));
  }
  if (const Json* b = r.list("backends")) {
    for (std::size_t i = 0; i < b->size(); ++i) c.endpoints.entries.push_back(endpoint_from_json((*b)[i], i));
  }
  if (const Json* g = r.raw("global")) c.globals = globals_from_json(*g);
  r.done();
  return c;
}

inline Json to_json(const RouterConfig& c) {
  Json j = Json::object();
  Json signals = Json::array();
  for (const auto& s : c.signals) signals.push_back(to_json(s));
  Json decisions = Json::array();
  for (const auto& d : c.decisions) decisions.push_back(to_json(d));
  Json backends = Json::array();
  for (const auto& e : c.endpoints.entries) backends.push_back(to_json(e));
  j["signals"] = signals;
  j["decisions"] = decisions;
  j["backends"] = backends;
  Json g = to_json(c.globals);
  if (!g.empty()) j["global"] = g;
  return j;
}

}  // namespace srouter::schema
