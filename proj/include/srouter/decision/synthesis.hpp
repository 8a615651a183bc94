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
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/core/error.hpp"
#include "srouter/decision/eval.hpp"

namespace srouter {

/// A boolean function over named leaves. Bit i of a minterm is the value of
/// leaves[i].
struct TruthTable {
  std::vector<SignalKey> leaves;
  std::set<std::uint32_t> minterms;
};

inline constexpr std::size_t kMaxSynthesisLeaves = 16;

/// Sum-of-products over the minterms. The empty function becomes
/// And(L, Not(L)) over the smallest leaf.
inline RuleNode synthesize_from_truth_table(const TruthTable& table) {
  const std::size_t n = table.leaves.size();
  if (n == 0 || n > kMaxSynthesisLeaves) {
    throw Error("truth table needs 1.." + std::to_string(kMaxSynthesisLeaves) + " leaves, got " + std::to_string(n));
  }
  const auto leaf = [&](std::size_t i) { return RuleNode::Leaf(table.leaves[i].type, table.leaves[i].name); };
  if (table.minterms.empty()) {
    const SignalKey first = *std::min_element(table.leaves.begin(), table.leaves.end());
    RuleNode l = RuleNode::Leaf(first.type, first.name);
    return RuleNode::And({l, RuleNode::Not(l)});
  }
  std::vector<RuleNode> terms;
  for (auto it = table.minterms.rbegin(); it != table.minterms.rend(); ++it) {
    if (*it >= (1u << n)) throw Error("minterm " + std::to_string(*it) + " out of range");
    std::vector<RuleNode> lits;
    for (std::size_t i = 0; i < n; ++i) {
      lits.push_back(((*it >> i) & 1u) ? leaf(i) : RuleNode::Not(leaf(i)));
    }
    terms.push_back(lits.size() == 1 ? std::move(lits.front()) : RuleNode::And(std::move(lits)));
  }
  return terms.size() == 1 ? std::move(terms.front()) : RuleNode::Or(std::move(terms));
}

/// Binary signal vector for one assignment of `leaves`.
inline SignalVector assignment_vector(const std::vector<SignalKey>& leaves, std::uint64_t bits) {
  SignalVector sv;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const bool on = (bits >> i) & 1u;
    sv[leaves[i]] = SignalResult{on, on ? 1.0 : 0.0, {}, {}};
  }
  return sv;
}

// ---------------------------------------------------------------------------
// Policy analysis

inline constexpr std::size_t kMaxAnalysisLeaves = 20;
inline constexpr std::size_t kMaxReportedAssignments = 256;

struct PolicyConflict {
  std::string first;
  std::string second;
  std::uint64_t count = 0;
  std::uint64_t example = 0;
};

struct SubsumedDecision {
  std::string name;
  std::vector<std::string> by;  // higher-priority decisions covering it
  bool unsatisfiable = false;
};

struct PolicyReport {
  std::vector<SignalKey> leaves;
  std::uint64_t assignments = 0;
  std::uint64_t uncovered_count = 0;
  std::vector<std::uint64_t> uncovered;  // first kMaxReportedAssignments
  std::vector<PolicyConflict> conflicts;
  std::vector<SubsumedDecision> subsumed;
  bool over_approximation = true;  // leaves are treated as independent

  std::map<std::string, bool> describe(std::uint64_t bits) const {
    std::map<std::string, bool> out;
    for (std::size_t i = 0; i < leaves.size(); ++i) out[to_string(leaves[i])] = (bits >> i) & 1u;
    return out;
  }
};

namespace detail {

/// Rule tree with leaves replaced by indices into the assignment bits.
struct IndexedRule {
  RuleNode::Op op = RuleNode::Op::kLeaf;
  std::size_t index = 0;
  std::vector<IndexedRule> children;

  bool eval(std::uint64_t bits) const {
    switch (op) {
      case RuleNode::Op::kLeaf: return (bits >> index) & 1u;
      case RuleNode::Op::kAnd:
        for (const auto& c : children) {
          if (!c.eval(bits)) return false;
        }
        return true;
      case RuleNode::Op::kOr:
        for (const auto& c : children) {
          if (c.eval(bits)) return true;
        }
        return false;
      case RuleNode::Op::kNot: return !children.front().eval(bits);
    }
    return false;
  }
};

inline IndexedRule index_rule(const RuleNode& n, const std::vector<SignalKey>& leaves) {
  IndexedRule r;
  r.op = n.op;
  if (n.is_leaf()) {
    r.index = static_cast<std::size_t>(std::find(leaves.begin(), leaves.end(), n.leaf) - leaves.begin());
  }
  for (const auto& c : n.children) r.children.push_back(index_rule(c, leaves));
  return r;
}

}  // namespace detail

/// Exhaustive coverage, conflict and subsumption analysis over every
/// assignment of the used leaves.
inline PolicyReport analyze_policy(const RouterConfig& config) {
  PolicyReport rep;
  const auto used = used_signal_types(config);
  rep.leaves.assign(used.begin(), used.end());
  if (rep.leaves.size() > kMaxAnalysisLeaves) {
    throw AnalysisError("policy uses " + std::to_string(rep.leaves.size()) + " leaves; analysis is limited to " +
                        std::to_string(kMaxAnalysisLeaves));
  }
  const auto& ds = config.decisions;
  std::vector<detail::IndexedRule> rules;
  for (const auto& d : ds) rules.push_back(detail::index_rule(d.rule, rep.leaves));

  std::vector<std::set<std::string>> models(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (const auto& m : ds[i].model_refs) models[i].insert(m.model);
  }
  const auto disjoint = [&](std::size_t a, std::size_t b) {
    for (const auto& m : models[a]) {
      if (models[b].count(m)) return false;
    }
    return true;
  };

  std::map<std::pair<std::size_t, std::size_t>, PolicyConflict> conflicts;
  std::vector<bool> ever_matched(ds.size(), false);
  std::vector<bool> shadowed(ds.size(), true);
  std::vector<std::set<std::size_t>> shadowers(ds.size());

  rep.assignments = std::uint64_t{1} << rep.leaves.size();
  std::vector<std::size_t> matched;
  for (std::uint64_t bits = 0; bits < rep.assignments; ++bits) {
    matched.clear();
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (rules[i].eval(bits)) matched.push_back(i);
    }
    if (matched.empty()) {
      ++rep.uncovered_count;
      if (rep.uncovered.size() < kMaxReportedAssignments) rep.uncovered.push_back(bits);
      continue;
    }
    for (std::size_t a = 0; a < matched.size(); ++a) {
      const std::size_t i = matched[a];
      ever_matched[i] = true;
      bool covered = false;
      for (std::size_t b = 0; b < matched.size(); ++b) {
        const std::size_t j = matched[b];
        if (ds[j].priority > ds[i].priority) {
          covered = true;
          shadowers[i].insert(j);
        }
        if (b > a && ds[j].priority == ds[i].priority && disjoint(i, j)) {
          auto& c = conflicts[{i, j}];
          if (c.count == 0) {
            c.first = ds[i].name;
            c.second = ds[j].name;
            c.example = bits;
          }
          ++c.count;
        }
      }
      if (!covered) shadowed[i] = false;
    }
  }
  for (auto& [k, c] : conflicts) rep.conflicts.push_back(std::move(c));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ever_matched[i]) {
      rep.subsumed.push_back({ds[i].name, {}, true});
    } else if (shadowed[i]) {
      SubsumedDecision s{ds[i].name, {}, false};
      for (std::size_t j : shadowers[i]) s.by.push_back(ds[j].name);
      rep.subsumed.push_back(std::move(s));
    }
  }
  return rep;
}

inline Json to_json(const PolicyReport& r) {
  Json j = Json::object();
  Json leaves = Json::array();
  for (const auto& l : r.leaves) leaves.push_back(to_string(l));
  j["leaves"] = leaves;
  j["assignments"] = r.assignments;
  j["over_approximation"] = r.over_approximation;
  j["uncovered_count"] = r.uncovered_count;
  Json unc = Json::array();
  for (auto bits : r.uncovered) unc.push_back(r.describe(bits));
  j["uncovered"] = unc;
  Json conf = Json::array();
  for (const auto& c : r.conflicts) {
    conf.push_back({{"decisions", {c.first, c.second}}, {"assignments", c.count}, {"example", r.describe(c.example)}});
  }
  j["conflicts"] = conf;
  Json sub = Json::array();
  for (const auto& s : r.subsumed) {
    sub.push_back({{"decision", s.name}, {"by", s.by}, {"unsatisfiable", s.unsatisfiable}});
  }
  j["subsumed"] = sub;
  return j;
}

}  // namespace srouter
