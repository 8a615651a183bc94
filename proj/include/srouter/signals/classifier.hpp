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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/core/text.hpp"

namespace srouter {

/// (label, score) pairs with scores in [0,1].
using LabelScores = std::vector<std::pair<std::string, double>>;

/// Pluggable classifier behind domain, fact_check, user_feedback, modality
/// and preference rules.
class LabelClassifier {
 public:
  virtual ~LabelClassifier() = default;
  virtual LabelScores classify(SignalType type, std::string_view text) const = 0;
};

/// Pluggable scorer behind classifier-method jailbreak rules.
class JailbreakScorer {
 public:
  virtual ~JailbreakScorer() = default;
  virtual double score(std::string_view text, const JailbreakParams& rule) const = 0;
};

namespace detail {

/// Case-insensitive containment of `phrase` with word-boundary ends.
inline bool contains_phrase(std::string_view lowered_text, std::string_view phrase) {
  const std::string p = text::to_lower(phrase);
  if (p.empty()) return false;
  std::size_t pos = 0;
  while ((pos = lowered_text.find(p, pos)) != std::string_view::npos) {
    const bool left = pos == 0 || !text::is_word_byte(lowered_text[pos - 1]) || !text::is_word_byte(p.front());
    const std::size_t end = pos + p.size();
    const bool right =
        end == lowered_text.size() || !text::is_word_byte(lowered_text[end]) || !text::is_word_byte(p.back());
    if (left && right) return true;
    ++pos;
  }
  return false;
}

inline bool contains_any(std::string_view lowered_text, std::initializer_list<std::string_view> phrases) {
  return std::any_of(phrases.begin(), phrases.end(),
                     [&](std::string_view p) { return contains_phrase(lowered_text, p); });
}

}  // namespace detail

/// Cheap gate deciding whether a prompt asks for checkable facts: some
/// factual cue and no creative cue.
inline bool sentinel_needs_fact_check(std::string_view text) {
  const std::string t = text::to_lower(text);
  const bool creative = detail::contains_any(
      t, {"poem", "story", "write a", "imagine", "joke", "lyrics", "fiction", "haiku", "song", "pretend",
          "brainstorm", "creative"});
  if (creative) return false;
  return detail::contains_any(
      t, {"what is", "what was", "who is", "who was", "when did", "when was", "where is", "how many",
          "how much", "capital of", "population", "founded", "invented", "born", "year", "date", "fact",
          "according to", "statistics", "distance", "height of", "define"});
}

/// Exact-phrase table classifier. Built-in entries cover a few common labels;
/// rule phrases from the config are added on top.
class TableClassifier final : public LabelClassifier {
 public:
  struct Entry {
    SignalType type;
    std::string phrase;
    std::string label;
  };

  TableClassifier() {
    const auto add = [&](SignalType t, std::string label, std::initializer_list<const char*> phrases) {
      for (const char* p : phrases) entries_.push_back({t, p, label});
    };
    add(SignalType::kDomain, "math",
        {"integral", "derivative", "equation", "algebra", "calculus", "theorem", "solve for", "matrix",
         "probability", "polynomial", "geometry", "prime number"});
    add(SignalType::kDomain, "computer science",
        {"algorithm", "python", "compile", "source code", "function", "data structure", "programming",
         "database", "recursion", "binary tree"});
    add(SignalType::kDomain, "physics", {"quantum", "velocity", "momentum", "thermodynamics", "relativity"});
    add(SignalType::kDomain, "biology", {"protein", "cell", "dna", "evolution", "enzyme"});
    add(SignalType::kDomain, "law", {"contract", "lawsuit", "statute", "liability", "court"});
    add(SignalType::kDomain, "business", {"revenue", "marketing", "invoice", "profit", "startup"});
    add(SignalType::kModality, "image", {"draw", "picture", "image of", "illustration", "diagram of"});
    add(SignalType::kFeedback, "negative", {"that's wrong", "that is wrong", "not helpful", "incorrect answer"});
    add(SignalType::kFeedback, "positive", {"thanks, that helped", "that worked", "perfect answer"});
    add(SignalType::kPreference, "concise", {"be brief", "short answer", "tl;dr", "in one sentence"});
    add(SignalType::kPreference, "detailed", {"in detail", "step by step", "explain thoroughly"});
  }

  void add(SignalType type, std::string phrase, std::string label) {
    entries_.push_back({type, std::move(phrase), std::move(label)});
  }

  /// Registers every rule phrase against every label of that rule.
  void add_rules(const std::vector<SignalRuleDef>& rules) {
    for (const auto& r : rules) {
      if (const auto* p = std::get_if<ClassifierParams>(&r.params)) {
        for (const auto& phrase : p->phrases) {
          for (const auto& label : p->labels) add(r.type, phrase, label);
        }
      }
    }
  }

  LabelScores classify(SignalType type, std::string_view text) const override {
    const std::string t = text::to_lower(text);
    LabelScores out;
    const auto put = [&](const std::string& label) {
      for (const auto& [l, s] : out) {
        if (l == label) return;
      }
      out.emplace_back(label, 1.0);
    };
    if (type == SignalType::kFactCheck && sentinel_needs_fact_check(text)) put("needs_fact_check");
    for (const auto& e : entries_) {
      if (e.type == type && detail::contains_phrase(t, e.phrase)) put(e.label);
    }
    return out;
  }

 private:
  std::vector<Entry> entries_;
};

/// Phrase-table jailbreak scorer: 1.0 when a built-in or rule phrase occurs.
class PhraseJailbreakScorer final : public JailbreakScorer {
 public:
  double score(std::string_view text, const JailbreakParams& rule) const override {
    const std::string t = text::to_lower(text);
    if (detail::contains_any(t, {"ignore all previous instructions", "ignore previous instructions",
                                 "ignore your instructions", "disregard your rules", "do anything now",
                                 "developer mode", "jailbreak", "without any restrictions",
                                 "pretend you have no rules", "bypass your safety"})) {
      return 1.0;
    }
    for (const auto& p : rule.phrases) {
      if (detail::contains_phrase(t, p)) return 1.0;
    }
    return 0.0;
  }
};

}  // namespace srouter
