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
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/signals/engine.hpp"

namespace srouter {

/// Absent leaves count as unmatched.
inline const SignalResult* lookup(const SignalVector& sv, const SignalKey& key) {
  auto it = sv.find(key);
  return it == sv.end() ? nullptr : &it->second;
}

inline bool eval_crisp(const RuleNode& node, const SignalVector& sv) {
  switch (node.op) {
    case RuleNode::Op::kLeaf: {
      const SignalResult* r = lookup(sv, node.leaf);
      return r && r->matched;
    }
    case RuleNode::Op::kAnd:
      return std::all_of(node.children.begin(), node.children.end(),
                         [&](const RuleNode& c) { return eval_crisp(c, sv); });
    case RuleNode::Op::kOr:
      return std::any_of(node.children.begin(), node.children.end(),
                         [&](const RuleNode& c) { return eval_crisp(c, sv); });
    case RuleNode::Op::kNot:
      return !eval_crisp(node.children.front(), sv);
  }
  return false;
}

/// min / max / 1 - x over leaf scores (confidence if matched, else 0).
inline double eval_fuzzy(const RuleNode& node, const SignalVector& sv) {
  switch (node.op) {
    case RuleNode::Op::kLeaf: {
      const SignalResult* r = lookup(sv, node.leaf);
      return r && r->matched ? r->confidence : 0.0;
    }
    case RuleNode::Op::kAnd: {
      double v = 1.0;
      for (const auto& c : node.children) v = std::min(v, eval_fuzzy(c, sv));
      return v;
    }
    case RuleNode::Op::kOr: {
      double v = 0.0;
      for (const auto& c : node.children) v = std::max(v, eval_fuzzy(c, sv));
      return v;
    }
    case RuleNode::Op::kNot:
      return 1.0 - eval_fuzzy(node.children.front(), sv);
  }
  return 0.0;
}

struct SatisfiedLeaf {
  SignalKey key;
  double confidence = 0.0;
  bool operator==(const SatisfiedLeaf&) const = default;
};

/// Distinct leaves whose signal matched, at any negation depth.
inline std::vector<SatisfiedLeaf> satisfied_leaves(const RuleNode& node, const SignalVector& sv) {
  std::set<SignalKey> leaves;
  collect_leaves(node, leaves);
  std::vector<SatisfiedLeaf> out;
  for (const auto& k : leaves) {
    const SignalResult* r = lookup(sv, k);
    if (r && r->matched) out.push_back({k, r->confidence});
  }
  return out;
}

/// Mean confidence over satisfied leaves; 0 when none is satisfied.
inline double decision_confidence(const Decision& d, const SignalVector& sv) {
  const auto sat = satisfied_leaves(d.rule, sv);
  if (sat.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : sat) sum += s.confidence;
  return sum / static_cast<double>(sat.size());
}

struct DecisionOutcome {
  std::string name;
  bool matched = false;
  double confidence = 0.0;
  std::int64_t priority = 0;
  std::size_t insertion_index = 0;
  std::vector<SatisfiedLeaf> satisfied;
  bool operator==(const DecisionOutcome&) const = default;
};

struct MatchOptions {
  bool fuzzy = false;
  double fuzzy_threshold = 0.5;
  std::optional<std::string> default_model;
};

struct MatchResult {
  std::optional<DecisionOutcome> selected;
  std::vector<DecisionOutcome> all_matched;
  Strategy strategy = Strategy::kPriority;
  bool fallback_applied = false;
  std::optional<std::string> fallback_model;
  bool operator==(const MatchResult&) const = default;
};

inline DecisionOutcome evaluate_decision(const Decision& d, const SignalVector& sv, const MatchOptions& opt) {
  DecisionOutcome o;
  o.name = d.name;
  o.priority = d.priority;
  o.insertion_index = d.insertion_index;
  o.satisfied = satisfied_leaves(d.rule, sv);
  if (opt.fuzzy) {
    o.confidence = eval_fuzzy(d.rule, sv);
    o.matched = o.confidence >= opt.fuzzy_threshold;
  } else {
    o.matched = eval_crisp(d.rule, sv);
    if (o.matched && !o.satisfied.empty()) {
      double sum = 0.0;
      for (const auto& s : o.satisfied) sum += s.confidence;
      o.confidence = sum / static_cast<double>(o.satisfied.size());
    }
  }
  return o;
}

/// Priority: highest p, then earliest insertion. Confidence: highest
/// confidence, then highest p, then earliest insertion.
inline MatchResult select_decision(std::span<const Decision> decisions, const SignalVector& sv, Strategy strategy,
                                   const MatchOptions& opt = {}) {
  MatchResult result;
  result.strategy = strategy;
  for (const auto& d : decisions) {
    DecisionOutcome o = evaluate_decision(d, sv, opt);
    if (o.matched) result.all_matched.push_back(std::move(o));
  }
  const auto better = [&](const DecisionOutcome& a, const DecisionOutcome& b) {
    if (strategy == Strategy::kConfidence && a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.insertion_index < b.insertion_index;
  };
  for (const auto& o : result.all_matched) {
    if (!result.selected || better(o, *result.selected)) result.selected = o;
  }
  if (!result.selected && opt.default_model) {
    result.fallback_applied = true;
    result.fallback_model = opt.default_model;
  }
  return result;
}

inline MatchResult select_decision(const RouterConfig& config, const SignalVector& sv) {
  MatchOptions opt;
  opt.fuzzy = config.globals.fuzzy_mode;
  opt.fuzzy_threshold = config.globals.fuzzy_match_threshold;
  opt.default_model = config.globals.default_model;
  return select_decision(config.decisions, sv, config.globals.strategy, opt);
}

}  // namespace srouter
