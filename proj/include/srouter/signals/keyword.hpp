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
#include <regex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/core/text.hpp"
#include "srouter/retrieval/bm25.hpp"

namespace srouter {

struct MatchScore {
  bool matched = false;
  double confidence = 0.0;
  bool operator==(const MatchScore&) const = default;
};

/// Compiled keyword rule. Plain keywords use a literal search with ASCII word
/// boundaries; keywords holding regex metacharacters compile to std::regex
/// wrapped in \b...\b. BM25 and n-gram methods are case-insensitive.
class KeywordMatcher {
 public:
  explicit KeywordMatcher(KeywordParams params) : p_(std::move(params)) {
    for (const auto& k : p_.keywords) {
      Pattern pat;
      pat.literal = p_.case_sensitive ? k : text::to_lower(k);
      if (p_.method == KeywordMethod::kRegex && text::has_regex_meta(k)) {
        auto flags = std::regex::ECMAScript | std::regex::optimize;
        if (!p_.case_sensitive) flags |= std::regex::icase;
        pat.re.emplace("\\b(?:" + k + ")\\b", flags);
      }
      pat.tokens = text::tokenize(k);
      std::string joined;
      for (const auto& t : pat.tokens) joined += (joined.empty() ? "" : " ") + t;
      pat.joined = joined;
      patterns_.push_back(std::move(pat));
    }
  }

  MatchScore match(std::string_view input) const {
    std::vector<std::optional<double>> hits;
    hits.reserve(patterns_.size());
    switch (p_.method) {
      case KeywordMethod::kRegex: {
        const std::string lowered = p_.case_sensitive ? std::string() : text::to_lower(input);
        const std::string_view hay = p_.case_sensitive ? input : std::string_view(lowered);
        for (const auto& pat : patterns_) {
          const bool hit = pat.re ? std::regex_search(input.begin(), input.end(), *pat.re)
                                  : literal_word_match(hay, pat.literal);
          hits.push_back(hit ? std::optional<double>(1.0) : std::nullopt);
        }
        break;
      }
      case KeywordMethod::kBm25: {
        const auto doc = text::tokenize(input);
        std::unordered_map<std::string, double> tf;
        for (const auto& t : doc) tf[t] += 1.0;
        const double len = static_cast<double>(doc.size());
        for (const auto& pat : patterns_) {
          double s = 0.0;
          std::vector<std::string> seen;
          for (const auto& term : pat.tokens) {
            if (std::find(seen.begin(), seen.end(), term) != seen.end()) continue;
            seen.push_back(term);
            auto it = tf.find(term);
            if (it == tf.end()) continue;
            // The request is the whole corpus: N = 1, df = 1, avgdl = len.
            s += bm25_term(bm25_idf(1, 1), it->second, len, len);
          }
          hits.push_back(s >= p_.effective_threshold() && s > 0.0 ? std::optional<double>(s) : std::nullopt);
        }
        break;
      }
      case KeywordMethod::kNgram: {
        const auto words = text::tokenize(input);
        for (const auto& pat : patterns_) {
          const double s = best_window_jaccard(words, pat);
          hits.push_back(s >= p_.effective_threshold() && s > 0.0 ? std::optional<double>(s) : std::nullopt);
        }
        break;
      }
    }
    return combine(hits);
  }

  const KeywordParams& params() const { return p_; }

  /// Literal search with word boundaries at ends that are word characters.
  static bool literal_word_match(std::string_view hay, std::string_view needle) {
    if (needle.empty()) return false;
    std::size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string_view::npos) {
      const std::size_t end = pos + needle.size();
      const bool left = !text::is_word_byte(needle.front()) || pos == 0 || !text::is_word_byte(hay[pos - 1]);
      const bool right = !text::is_word_byte(needle.back()) || end == hay.size() || !text::is_word_byte(hay[end]);
      if (left && right) return true;
      ++pos;
    }
    return false;
  }

 private:
  struct Pattern {
    std::string literal;
    std::optional<std::regex> re;
    std::vector<std::string> tokens;
    std::string joined;
  };

  /// Max trigram Jaccard between the keyword and any window of the same
  /// number of words in the input.
  static double best_window_jaccard(const std::vector<std::string>& words, const Pattern& pat) {
    if (pat.joined.empty() || words.empty()) return 0.0;
    const auto kgrams = text::ngram_set(pat.joined);
    const std::size_t w = std::max<std::size_t>(1, pat.tokens.size());
    double best = 0.0;
    const std::size_t windows = words.size() >= w ? words.size() - w + 1 : 1;
    for (std::size_t i = 0; i < windows; ++i) {
      std::string window;
      for (std::size_t j = i; j < std::min(words.size(), i + w); ++j) window += (j == i ? "" : " ") + words[j];
      best = std::max(best, text::jaccard(kgrams, text::ngram_set(window)));
      if (best >= 1.0) break;
    }
    return best;
  }

  MatchScore combine(const std::vector<std::optional<double>>& hits) const {
    double best = 0.0;
    std::size_t n_hit = 0;
    for (const auto& h : hits) {
      if (h) {
        ++n_hit;
        best = std::max(best, *h);
      }
    }
    bool matched = false;
    switch (p_.op) {
      case Combinator::kOr: matched = n_hit > 0; break;
      case Combinator::kAnd: matched = !hits.empty() && n_hit == hits.size(); break;
      case Combinator::kNor: return n_hit == 0 ? MatchScore{true, 1.0} : MatchScore{false, 0.0};
    }
    if (!matched) return {false, 0.0};
    return {true, std::min(1.0, best)};
  }

  KeywordParams p_;
  std::vector<Pattern> patterns_;
};

}  // namespace srouter
