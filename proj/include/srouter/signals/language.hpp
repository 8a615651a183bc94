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

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "srouter/core/text.hpp"
#include "srouter/signals/language_data.hpp"

namespace srouter {

struct LanguageGuess {
  std::string code;
  double confidence = 0.0;
};

/// Character n-gram (n = 1..3) frequency language identification over the
/// bundled profiles.
class LanguageDetector {
 public:
  using Profile = std::unordered_map<std::uint64_t, double>;

  static constexpr std::size_t kMinCodePoints = 20;

  LanguageDetector() {
    for (const auto& s : language_data::kSamples) add_profile(std::string(s.code), s.profile);
  }

  void add_profile(std::string code, std::string_view sample) {
    Profile p = trigram_profile(sample);
    normalize(p);
    profiles_.emplace_back(std::move(code), std::move(p));
  }

  /// Highest-cosine profile; ("und", 0) for inputs under 20 code points.
  LanguageGuess detect(std::string_view text) const {
    if (text::code_point_count(text) < kMinCodePoints) return {"und", 0.0};
    Profile q = trigram_profile(text);
    normalize(q);
    LanguageGuess best{"und", 0.0};
    for (const auto& [code, profile] : profiles_) {
      double dot = 0.0;
      for (const auto& [gram, w] : q) {
        auto it = profile.find(gram);
        if (it != profile.end()) dot += w * it->second;
      }
      if (dot > best.confidence) best = {code, dot};
    }
    if (best.confidence > 1.0) best.confidence = 1.0;
    return best;
  }

  static const LanguageDetector& builtin() {
    static const LanguageDetector detector;
    return detector;
  }

  /// Lower-cased code points with everything that is not a letter folded to
  /// a single space, padded with a space at both ends.
  static std::u32string fold(std::string_view text) {
    std::u32string out = U" ";
    std::size_t pos = 0;
    while (pos < text.size()) {
      const char32_t c = text::lower_cp(text::next_code_point(text, pos));
      if (is_letter(c)) {
        out.push_back(c);
      } else if (out.back() != U' ') {
        out.push_back(U' ');
      }
    }
    if (out.back() != U' ') out.push_back(U' ');
    return out;
  }

  static Profile trigram_profile(std::string_view text) {
    Profile p;
    const std::u32string f = fold(text);
    // 1- to 3-grams: scripts without spaces (zh, ja) share few trigrams
    // between unrelated sentences. Code points are never 0, so the packed
    // keys of different orders cannot collide.
    for (std::size_t i = 0; i < f.size(); ++i) {
      std::uint64_t key = 0;
      for (std::size_t n = 0; n < 3 && i + n < f.size(); ++n) {
        key = (key << 21) | f[i + n];
        if (n == 0 && f[i] == U' ') continue;
        p[key] += 1.0;
      }
    }
    return p;
  }

 private:
  static bool is_letter(char32_t c) {
    if (c < 0x80) return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
    if (c >= 0xA0 && c <= 0xBF) return false;
    if (c == 0xD7 || c == 0xF7) return false;
    if (c >= 0x2000 && c <= 0x206F) return false;
    if (c >= 0x3000 && c <= 0x303F) return false;
    if (c >= 0xFF00 && c <= 0xFF0F) return false;
    if (c == text::kReplacement) return false;
    return true;
  }

  static void normalize(Profile& p) {
    double n = 0.0;
    for (const auto& [k, v] : p) n += v * v;
    n = std::sqrt(n);
    if (n > 0.0) {
      for (auto& [k, v] : p) v /= n;
    }
  }

  std::vector<std::pair<std::string, Profile>> profiles_;
};

inline LanguageGuess detect_language(std::string_view text) { return LanguageDetector::builtin().detect(text); }

}  // namespace srouter
