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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "srouter/core/text.hpp"

/// Deployment configuration and the domain types every layer shares.
namespace srouter {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Signals

enum class SignalType {
  kKeyword,
  kContext,
  kLanguage,
  kAuthz,
  kEmbedding,
  kDomain,
  kFactCheck,
  kFeedback,
  kModality,
  kComplexity,
  kJailbreak,
  kPii,
  kPreference,
};

inline constexpr std::array<std::pair<SignalType, std::string_view>, 13> kSignalTypeNames{{
    {SignalType::kKeyword, "keyword"},
    {SignalType::kEmbedding, "embedding"},
    {SignalType::kDomain, "domain"},
    {SignalType::kFactCheck, "fact_check"},
    {SignalType::kFeedback, "user_feedback"},
    {SignalType::kPreference, "preference"},
    {SignalType::kLanguage, "language"},
    {SignalType::kContext, "context"},
    {SignalType::kComplexity, "complexity"},
    {SignalType::kModality, "modality"},
    {SignalType::kAuthz, "authz"},
    {SignalType::kJailbreak, "jailbreak"},
    {SignalType::kPii, "pii"},
}};

inline std::string_view to_string(SignalType t) {
  for (const auto& [type, name] : kSignalTypeNames) {
    if (type == t) return name;
  }
  return "unknown";
}

inline std::optional<SignalType> parse_signal_type(std::string_view s) {
  for (const auto& [type, name] : kSignalTypeNames) {
    if (name == s) return type;
  }
  return std::nullopt;
}

/// Types evaluated without an embedder or classifier.
inline bool is_heuristic(SignalType t) {
  return t == SignalType::kKeyword || t == SignalType::kContext || t == SignalType::kLanguage ||
         t == SignalType::kAuthz;
}

/// Types backed by the pluggable label classifier (table stub by default).
inline bool is_label_classifier(SignalType t) {
  return t == SignalType::kDomain || t == SignalType::kFactCheck || t == SignalType::kFeedback ||
         t == SignalType::kModality || t == SignalType::kPreference;
}

struct SignalKey {
  SignalType type = SignalType::kKeyword;
  std::string name;

  auto operator<=>(const SignalKey&) const = default;
};

inline std::string to_string(const SignalKey& k) {
  return std::string(to_string(k.type)) + "(\"" + k.name + "\")";
}

enum class Combinator { kAnd, kOr, kNor };
enum class KeywordMethod { kRegex, kBm25, kNgram };

struct KeywordParams {
  Combinator op = Combinator::kOr;
  KeywordMethod method = KeywordMethod::kRegex;
  std::vector<std::string> keywords;
  std::optional<double> threshold;
  bool case_sensitive = false;

  double effective_threshold() const {
    if (threshold) return *threshold;
    return method == KeywordMethod::kNgram ? 0.4 : 0.1;
  }
  bool operator==(const KeywordParams&) const = default;
};

/// Token-count interval [min_tokens, max_tokens]; no upper bound when unset.
struct ContextParams {
  std::int64_t min_tokens = 0;
  std::optional<std::int64_t> max_tokens;
  bool operator==(const ContextParams&) const = default;
};

struct LanguageParams {
  std::vector<std::string> languages;
  bool operator==(const LanguageParams&) const = default;
};

struct AuthzParams {
  std::vector<std::string> roles;
  std::string header = "x-user-roles";
  bool operator==(const AuthzParams&) const = default;
};

struct EmbeddingParams {
  std::vector<std::string> candidates;
  double threshold = 0.0;
  bool operator==(const EmbeddingParams&) const = default;
};

enum class ComplexityLevel { kEasy, kMedium, kHard };

struct ComplexityParams {
  std::vector<std::string> hard;
  std::vector<std::string> easy;
  double threshold = 0.1;
  ComplexityLevel level = ComplexityLevel::kHard;  // the level this rule fires on
  bool operator==(const ComplexityParams&) const = default;
};

enum class JailbreakMethod { kClassifier, kContrastive };

struct JailbreakParams {
  JailbreakMethod method = JailbreakMethod::kClassifier;
  std::optional<double> threshold;
  bool include_history = false;
  std::vector<std::string> jailbreak_patterns;
  std::vector<std::string> benign_patterns;
  std::vector<std::string> phrases;  // table for the default classifier stub

  double effective_threshold() const {
    if (threshold) return *threshold;
    return method == JailbreakMethod::kContrastive ? 0.10 : 0.65;
  }
  bool operator==(const JailbreakParams&) const = default;
};

struct PiiParams {
  double threshold = 0.5;
  std::vector<std::string> allowed;  // upper-case entity names, e.g. EMAIL
  bool operator==(const PiiParams&) const = default;
};

/// Shared by domain, fact_check, user_feedback, modality and preference.
struct ClassifierParams {
  std::vector<std::string> labels;
  std::vector<std::string> phrases;
  double threshold = 0.5;
  bool operator==(const ClassifierParams&) const = default;
};

using SignalParams = std::variant<KeywordParams, ContextParams, LanguageParams, AuthzParams,
                                  EmbeddingParams, ComplexityParams, JailbreakParams, PiiParams,
                                  ClassifierParams>;

struct SignalRuleDef {
  SignalType type = SignalType::kKeyword;
  std::string name;
  SignalParams params;

  SignalKey key() const { return {type, name}; }
  bool operator==(const SignalRuleDef&) const = default;
};

// ---------------------------------------------------------------------------
// Rule trees

struct RuleNode {
  enum class Op { kLeaf, kAnd, kOr, kNot };

  Op op = Op::kLeaf;
  SignalKey leaf;                  // meaningful for kLeaf only
  std::vector<RuleNode> children;  // exactly one for kNot

  static RuleNode Leaf(SignalType type, std::string name) {
    RuleNode n;
    n.leaf = {type, std::move(name)};
    return n;
  }
  static RuleNode And(std::vector<RuleNode> children) { return composite(Op::kAnd, std::move(children)); }
  static RuleNode Or(std::vector<RuleNode> children) { return composite(Op::kOr, std::move(children)); }
  static RuleNode Not(RuleNode child) { return composite(Op::kNot, {std::move(child)}); }

  bool is_leaf() const { return op == Op::kLeaf; }
  bool operator==(const RuleNode&) const = default;

 private:
  static RuleNode composite(Op op, std::vector<RuleNode> children) {
    RuleNode n;
    n.op = op;
    n.children = std::move(children);
    return n;
  }
};

inline void collect_leaves(const RuleNode& node, std::set<SignalKey>& out) {
  if (node.is_leaf()) {
    out.insert(node.leaf);
    return;
  }
  for (const auto& c : node.children) collect_leaves(c, out);
}

// ---------------------------------------------------------------------------
// Plugins

struct FastResponseConfig {
  bool enabled = true;
  std::string message;
  bool operator==(const FastResponseConfig&) const = default;
};

struct CacheConfig {
  bool enabled = true;
  double similarity_threshold = 0.92;
  bool operator==(const CacheConfig&) const = default;
};

enum class PromptMode { kReplace, kInsert };

struct SystemPromptConfig {
  bool enabled = true;
  std::string text;
  PromptMode mode = PromptMode::kInsert;
  bool operator==(const SystemPromptConfig&) const = default;
};

enum class HeaderAction { kAdd, kUpdate, kDelete };

struct HeaderMutation {
  HeaderAction action = HeaderAction::kAdd;
  std::string name;
  std::string value;
  bool operator==(const HeaderMutation&) const = default;
};

struct HeaderMutationConfig {
  bool enabled = true;
  std::vector<HeaderMutation> mutations;
  bool operator==(const HeaderMutationConfig&) const = default;
};

enum class HaluAction { kBlock, kHeader, kBody, kNone };

struct HallucinationConfig {
  bool enabled = true;
  HaluAction action = HaluAction::kHeader;
  bool operator==(const HallucinationConfig&) const = default;
};

enum class FusionMode { kWeighted, kRrf };

struct RagConfig {
  bool enabled = true;
  std::string store;
  int top_k = 5;
  FusionMode fusion = FusionMode::kWeighted;
  std::optional<double> threshold;  // cosine cut-off; bypassed whenever fusion is active
  bool operator==(const RagConfig&) const = default;
};

struct MemoryConfig {
  bool enabled = true;
  int top_k = 5;
  FusionMode fusion = FusionMode::kWeighted;
  bool operator==(const MemoryConfig&) const = default;
};

/// Overrides the candidate pool with `model` when modality rule `signal` matched.
struct ModalityConfig {
  bool enabled = true;
  std::string signal;
  std::string model;
  bool operator==(const ModalityConfig&) const = default;
};

/// Request-path PII redaction.
struct PiiRedactionConfig {
  bool enabled = true;
  double threshold = 0.5;
  std::vector<std::string> allowed;
  bool operator==(const PiiRedactionConfig&) const = default;
};

struct PluginChainConfig {
  std::optional<FastResponseConfig> fast_response;
  std::optional<CacheConfig> cache;
  std::optional<PiiRedactionConfig> pii;
  std::optional<RagConfig> rag;
  std::optional<ModalityConfig> modality;
  std::optional<MemoryConfig> memory;
  std::optional<SystemPromptConfig> system_prompt;
  std::optional<HeaderMutationConfig> header_mutation;
  std::optional<HallucinationConfig> hallucination;
  bool operator==(const PluginChainConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Decisions

struct ModelRef {
  std::string model;
  std::optional<bool> reasoning;
  std::optional<std::string> effort;
  std::optional<std::string> lora;
  std::optional<double> weight;
  std::optional<double> score;  // static quality score
  std::optional<double> cost;   // cost per unit
  bool operator==(const ModelRef&) const = default;
};

inline constexpr std::array<std::string_view, 12> kAlgorithmIds{
    "static", "confidence", "elo",      "routerdc",      "hybrid", "automix",
    "knn",    "kmeans",     "mlp",      "thompson",      "latency_aware", "remom"};

inline bool is_known_algorithm(std::string_view id) {
  for (auto a : kAlgorithmIds) {
    if (a == id) return true;
  }
  return false;
}

struct AlgorithmConfig {
  std::string type = "static";
  Json params = Json::object();
  bool operator==(const AlgorithmConfig&) const = default;
};

struct Decision {
  std::string name;
  std::optional<std::string> description;
  RuleNode rule;
  std::int64_t priority = 0;
  std::vector<ModelRef> model_refs;
  AlgorithmConfig algorithm;
  PluginChainConfig plugins;
  bool pin_model = false;
  std::size_t insertion_index = 0;  // document order, assigned at load

  bool operator==(const Decision&) const = default;
};

// ---------------------------------------------------------------------------
// Endpoints

enum class ProviderKind { kOpenAICompatible, kPassthrough };
enum class AuthKind { kNone, kApiKey, kPassthrough };

struct AuthProfile {
  AuthKind kind = AuthKind::kNone;
  std::string header;      // defaults to "authorization" for api_key
  std::string secret_ref;  // literal, or ${ENV_VAR}
  bool operator==(const AuthProfile&) const = default;
};

inline constexpr std::array<std::string_view, 5> kBackendTypes{"vllm", "ollama", "openai",
                                                               "openai_compatible", "passthrough"};

struct Endpoint {
  std::string name;
  std::string type = "vllm";
  std::string address;
  int port = 80;
  double weight = 1.0;              // raw; normalized per model on use
  std::vector<std::string> models;  // empty: serves every model
  AuthProfile auth;

  ProviderKind provider() const {
    return type == "passthrough" ? ProviderKind::kPassthrough : ProviderKind::kOpenAICompatible;
  }
  bool serves(std::string_view model) const {
    if (models.empty()) return true;
    for (const auto& m : models) {
      if (m == model) return true;
    }
    return false;
  }
  bool operator==(const Endpoint&) const = default;
};

struct WeightedEndpoint {
  std::size_t index = 0;  // into EndpointTopology::entries
  double weight = 0.0;    // normalized over the endpoints serving one model
};

struct EndpointTopology {
  std::vector<Endpoint> entries;

  /// Endpoints serving `model` with weights normalized to sum to 1.
  std::vector<WeightedEndpoint> for_model(std::string_view model) const {
    std::vector<WeightedEndpoint> out;
    double total = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].serves(model)) {
        out.push_back({i, entries[i].weight});
        total += entries[i].weight;
      }
    }
    if (total > 0.0) {
      for (auto& w : out) w.weight /= total;
    }
    return out;
  }
  bool operator==(const EndpointTopology&) const = default;
};

// ---------------------------------------------------------------------------
// Whole configuration

enum class Strategy { kPriority, kConfidence };

struct Globals {
  std::optional<std::string> default_model;
  Strategy strategy = Strategy::kPriority;
  bool fuzzy_mode = false;
  double fuzzy_match_threshold = 0.5;
  bool operator==(const Globals&) const = default;
};

struct RouterConfig {
  std::vector<SignalRuleDef> signals;
  std::vector<Decision> decisions;
  EndpointTopology endpoints;
  Globals globals;

  const SignalRuleDef* find_signal(const SignalKey& key) const {
    for (const auto& s : signals) {
      if (s.type == key.type && s.name == key.name) return &s;
    }
    return nullptr;
  }
  const Decision* find_decision(std::string_view name) const {
    for (const auto& d : decisions) {
      if (d.name == name) return &d;
    }
    return nullptr;
  }
  bool operator==(const RouterConfig&) const = default;
};

/// The leaves reachable from any decision's rule tree: exactly the rules the
/// signal engine evaluates for a request.
inline std::set<SignalKey> used_signal_types(const RouterConfig& config) {
  std::set<SignalKey> out;
  for (const auto& d : config.decisions) collect_leaves(d.rule, out);
  return out;
}

}  // namespace srouter

template <>
struct std::hash<srouter::SignalKey> {
  std::size_t operator()(const srouter::SignalKey& k) const noexcept {
    return static_cast<std::size_t>(
        srouter::text::fnv1a(k.name, 0xcbf29ce484222325ULL ^ static_cast<unsigned>(k.type)));
  }
};
