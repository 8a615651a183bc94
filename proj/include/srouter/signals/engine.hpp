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
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/core/vec.hpp"
#include "srouter/signals/classifier.hpp"
#include "srouter/signals/embedder.hpp"
#include "srouter/signals/keyword.hpp"
#include "srouter/signals/language.hpp"
#include "srouter/signals/pii.hpp"
#include "srouter/signals/request.hpp"

namespace srouter {

struct SignalResult {
  bool matched = false;
  double confidence = 0.0;
  std::string error;                 // set when the evaluator failed
  std::vector<std::string> details;  // e.g. detected PII types, language code
  bool operator==(const SignalResult&) const = default;
};

/// (type, rule name) -> outcome, for the demanded rules only.
using SignalVector = std::map<SignalKey, SignalResult>;

inline double max_cosine(std::span<const double> q, const std::vector<vec::Vector>& refs) {
  double best = -1.0;
  for (const auto& r : refs) best = std::max(best, vec::dot(q, r));
  return refs.empty() ? 0.0 : best;
}

/// max cos to the first set minus max cos to the second; inputs unit-norm.
inline double contrastive_score(std::span<const double> q, const std::vector<vec::Vector>& hard,
                                const std::vector<vec::Vector>& easy) {
  return max_cosine(q, hard) - max_cosine(q, easy);
}

inline std::vector<vec::Vector> embed_all(const Embedder& e, const std::vector<std::string>& texts) {
  std::vector<vec::Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(e.embed(t));
  return out;
}

inline double contrastive_score(std::string_view text, const std::vector<std::string>& hard,
                                const std::vector<std::string>& easy, const Embedder& e) {
  return contrastive_score(e.embed(text), embed_all(e, hard), embed_all(e, easy));
}

inline ComplexityLevel complexity_level(double delta, double threshold) {
  if (delta > threshold) return ComplexityLevel::kHard;
  if (delta < -threshold) return ComplexityLevel::kEasy;
  return ComplexityLevel::kMedium;
}

enum class EvalMode { kParallel, kSequential };

/// Evaluates signal rules for one config. Reference and exemplar embeddings
/// and compiled keyword patterns are built once at construction.
class SignalEngine {
 public:
  struct Backends {
    std::shared_ptr<const Embedder> embedder;
    std::shared_ptr<const LabelClassifier> classifier;
    std::shared_ptr<const JailbreakScorer> jailbreak;
    std::shared_ptr<const PiiDetector> pii;
  };

  using Evaluator = std::function<SignalResult(const RequestView&, const SignalRuleDef&)>;

  explicit SignalEngine(const RouterConfig& config, Backends backends = {})
      : signals_(config.signals), demanded_(used_signal_types(config)), b_(std::move(backends)) {
    if (!b_.embedder) b_.embedder = std::make_shared<HashedTrigramEmbedder>();
    if (!b_.classifier) {
      auto table = std::make_shared<TableClassifier>();
      table->add_rules(config.signals);
      b_.classifier = table;
    }
    if (!b_.jailbreak) b_.jailbreak = std::make_shared<PhraseJailbreakScorer>();
    if (!b_.pii) b_.pii = std::make_shared<RegexPiiDetector>();
    for (const auto& s : signals_) {
      Compiled c;
      if (const auto* k = std::get_if<KeywordParams>(&s.params)) c.keyword.emplace(*k);
      if (const auto* e = std::get_if<EmbeddingParams>(&s.params)) c.refs = embed_all(*b_.embedder, e->candidates);
      if (const auto* x = std::get_if<ComplexityParams>(&s.params)) {
        c.hard = embed_all(*b_.embedder, x->hard);
        c.easy = embed_all(*b_.embedder, x->easy);
      }
      if (const auto* j = std::get_if<JailbreakParams>(&s.params)) {
        c.hard = embed_all(*b_.embedder, j->jailbreak_patterns);
        c.easy = embed_all(*b_.embedder, j->benign_patterns);
      }
      compiled_.emplace(s.key(), std::move(c));
    }
  }

  SignalEngine(const SignalEngine&) = delete;
  SignalEngine& operator=(const SignalEngine&) = delete;

  /// Replaces the built-in evaluator for one signal type.
  void register_evaluator(SignalType type, Evaluator fn) { overrides_[type] = std::move(fn); }

  /// One entry per demanded rule; identical in both modes.
  SignalVector evaluate(const RequestView& request, const std::set<SignalKey>& demanded,
                        EvalMode mode = EvalMode::kParallel) const {
    std::vector<SignalKey> keys(demanded.begin(), demanded.end());
    std::vector<SignalResult> results(keys.size());
    const auto run = [&](std::size_t i) { results[i] = evaluate_key(request, keys[i]); };
    if (mode == EvalMode::kSequential || keys.size() <= 1) {
      for (std::size_t i = 0; i < keys.size(); ++i) run(i);
    } else {
      std::atomic<std::size_t> next{0};
      const std::size_t hw = std::max(2u, std::thread::hardware_concurrency());
      const std::size_t workers = std::min(keys.size(), hw);
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < keys.size(); i = next++) run(i);
        });
      }
    }
    SignalVector out;
    for (std::size_t i = 0; i < keys.size(); ++i) out.emplace(keys[i], std::move(results[i]));
    return out;
  }

  /// Evaluates exactly the leaves reachable from the config's decisions.
  SignalVector evaluate(const RequestView& request, EvalMode mode = EvalMode::kParallel) const {
    return evaluate(request, demanded_, mode);
  }

  const std::set<SignalKey>& demanded() const { return demanded_; }
  const Embedder& embedder() const { return *b_.embedder; }
  std::shared_ptr<const Embedder> embedder_ptr() const { return b_.embedder; }
  const PiiDetector& pii_detector() const { return *b_.pii; }
  const LabelClassifier& classifier() const { return *b_.classifier; }

  std::uint64_t invocations(SignalType t) const { return counters_[static_cast<std::size_t>(t)].load(); }
  std::uint64_t total_invocations() const {
    std::uint64_t n = 0;
    for (const auto& c : counters_) n += c.load();
    return n;
  }
  void reset_counters() {
    for (auto& c : counters_) c.store(0);
  }

  /// Runs one rule's evaluator; failures become unmatched with an annotation.
  SignalResult evaluate_key(const RequestView& request, const SignalKey& key) const {
    const SignalRuleDef* def = find(key);
    if (!def) {
      SignalResult r;
      r.error = "rule " + to_string(key) + " is not declared";
      return r;
    }
    counters_[static_cast<std::size_t>(key.type)].fetch_add(1);
    try {
      SignalResult r;
      if (auto it = overrides_.find(key.type); it != overrides_.end()) {
        r = it->second(request, *def);
      } else {
        r = builtin(request, *def, compiled_.at(key));
      }
      r.confidence = vec::clamp01(r.confidence);
      return r;
    } catch (const std::exception& e) {
      SignalResult r;
      r.error = e.what();
      return r;
    }
  }

 private:
  struct Compiled {
    std::optional<KeywordMatcher> keyword;
    std::vector<vec::Vector> refs;
    std::vector<vec::Vector> hard;
    std::vector<vec::Vector> easy;
  };

  const SignalRuleDef* find(const SignalKey& key) const {
    for (const auto& s : signals_) {
      if (s.type == key.type && s.name == key.name) return &s;
    }
    return nullptr;
  }

  SignalResult builtin(const RequestView& req, const SignalRuleDef& def, const Compiled& c) const {
    SignalResult r;
    const std::string text = req.latest_user_text();
    switch (def.type) {
      case SignalType::kKeyword: {
        const MatchScore m = c.keyword->match(text);
        r.matched = m.matched;
        r.confidence = m.confidence;
        return r;
      }
      case SignalType::kContext: {
        const auto& p = std::get<ContextParams>(def.params);
        const auto tokens = static_cast<std::int64_t>(req.estimated_tokens());
        r.matched = tokens >= p.min_tokens && (!p.max_tokens || tokens <= *p.max_tokens);
        r.confidence = r.matched ? 1.0 : 0.0;
        return r;
      }
      case SignalType::kLanguage: {
        const auto& p = std::get<LanguageParams>(def.params);
        const LanguageGuess g = detect_language(text);
        r.details.push_back(g.code);
        r.matched = std::find(p.languages.begin(), p.languages.end(), g.code) != p.languages.end();
        r.confidence = r.matched ? g.confidence : 0.0;
        return r;
      }
      case SignalType::kAuthz: {
        const auto& p = std::get<AuthzParams>(def.params);
        const auto header = req.headers.get(p.header);
        if (!header) return r;
        for (const auto& role : text::split(*header, ',')) {
          const std::string t = text::trim(role);
          if (std::find(p.roles.begin(), p.roles.end(), t) != p.roles.end()) {
            r.matched = true;
            r.confidence = 1.0;
            r.details.push_back(t);
            return r;
          }
        }
        return r;
      }
      case SignalType::kEmbedding: {
        const auto& p = std::get<EmbeddingParams>(def.params);
        const double best = vec::clamp01(max_cosine(b_.embedder->embed(text), c.refs));
        r.matched = best >= p.threshold;
        r.confidence = r.matched ? best : 0.0;
        return r;
      }
      case SignalType::kComplexity: {
        const auto& p = std::get<ComplexityParams>(def.params);
        const double delta = contrastive_score(b_.embedder->embed(text), c.hard, c.easy);
        const ComplexityLevel level = complexity_level(delta, p.threshold);
        r.details.push_back(level == ComplexityLevel::kHard ? "hard"
                            : level == ComplexityLevel::kEasy ? "easy"
                                                              : "medium");
        r.matched = level == p.level;
        if (r.matched) {
          if (level == ComplexityLevel::kHard) r.confidence = delta;
          else if (level == ComplexityLevel::kEasy) r.confidence = -delta;
          else r.confidence = p.threshold > 0.0 ? 1.0 - std::abs(delta) / p.threshold : 1.0;
        }
        return r;
      }
      case SignalType::kJailbreak: {
        const auto& p = std::get<JailbreakParams>(def.params);
        std::vector<std::string> texts = p.include_history ? req.user_texts() : std::vector<std::string>{text};
        double best = 0.0;
        for (const auto& t : texts) {
          const double s = p.method == JailbreakMethod::kContrastive
                               ? contrastive_score(b_.embedder->embed(t), c.hard, c.easy)
                               : b_.jailbreak->score(t, p);
          best = std::max(best, s);
        }
        r.matched = best >= p.effective_threshold() && best > 0.0;
        r.confidence = r.matched ? best : 0.0;
        return r;
      }
      case SignalType::kPii: {
        const auto& p = std::get<PiiParams>(def.params);
        for (const auto& hit : b_.pii->detect(text)) {
          if (pii_type_allowed(p.allowed, hit.type) || hit.confidence < p.threshold) continue;
          r.matched = true;
          r.confidence = std::max(r.confidence, hit.confidence);
          if (std::find(r.details.begin(), r.details.end(), hit.type) == r.details.end()) r.details.push_back(hit.type);
        }
        return r;
      }
      case SignalType::kDomain:
      case SignalType::kFactCheck:
      case SignalType::kFeedback:
      case SignalType::kModality:
      case SignalType::kPreference: {
        const auto& p = std::get<ClassifierParams>(def.params);
        double best = 0.0;
        for (const auto& [label, score] : b_.classifier->classify(def.type, text)) {
          if (std::find(p.labels.begin(), p.labels.end(), label) != p.labels.end()) {
            if (score > best) {
              best = score;
              r.details = {label};
            }
          }
        }
        r.matched = best > 0.0 && best >= p.threshold;
        r.confidence = r.matched ? best : 0.0;
        if (!r.matched) r.details.clear();
        return r;
      }
    }
    return r;
  }

  std::vector<SignalRuleDef> signals_;
  std::set<SignalKey> demanded_;
  Backends b_;
  std::map<SignalKey, Compiled> compiled_;
  std::map<SignalType, Evaluator> overrides_;
  mutable std::array<std::atomic<std::uint64_t>, kSignalTypeNames.size()> counters_{};
};

/// Convenience form: builds an engine for `config` and evaluates `demanded`.
inline SignalVector evaluate_signals(const RequestView& request, const std::set<SignalKey>& demanded,
                                     const RouterConfig& config, EvalMode mode = EvalMode::kParallel) {
  const SignalEngine engine(config);
  return engine.evaluate(request, demanded, mode);
}

}  // namespace srouter
