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
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace srouter {

struct PiiHit {
  std::string type;  // EMAIL, PHONE, SSN, CREDIT_CARD
  std::size_t begin = 0;
  std::size_t end = 0;
  double confidence = 1.0;
};

/// Finds PII spans. Implementations may return graded confidences.
class PiiDetector {
 public:
  virtual ~PiiDetector() = default;
  virtual std::vector<PiiHit> detect(std::string_view text) const = 0;
};

inline bool luhn_valid(std::string_view digits) {
  int sum = 0;
  bool twice = false;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    int d = *it - '0';
    if (twice) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    twice = !twice;
  }
  return sum % 10 == 0;
}

/// Built-in regex detector; every hit has confidence 1.0. Overlapping hits
/// keep the earliest-listed type.
class RegexPiiDetector final : public PiiDetector {
 public:
  std::vector<PiiHit> detect(std::string_view text) const override {
    static const std::regex kEmail(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})");
    static const std::regex kSsn(R"(\b\d{3}-\d{2}-\d{4}\b)");
    static const std::regex kCard(R"(\b\d(?:[ -]?\d){12,18}\b)");
    static const std::regex kPhone(R"((?:\+?1[-. ]?)?(?:\(\d{3}\)|\b\d{3})[-. ]?\d{3}[-. ]\d{4}\b)");

    std::vector<PiiHit> hits;
    const std::string s(text);
    const auto overlaps = [&](std::size_t b, std::size_t e) {
      return std::any_of(hits.begin(), hits.end(), [&](const PiiHit& h) { return b < h.end && h.begin < e; });
    };
    const auto scan = [&](const std::regex& re, const char* type, bool card) {
      for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        const auto b = static_cast<std::size_t>(it->position());
        const auto e = b + static_cast<std::size_t>(it->length());
        if (card) {
          std::string digits;
          for (char c : it->str()) {
            if (c >= '0' && c <= '9') digits.push_back(c);
          }
          if (!luhn_valid(digits)) continue;
        }
        if (!overlaps(b, e)) hits.push_back({type, b, e, 1.0});
      }
    };
    scan(kEmail, "EMAIL", false);
    scan(kSsn, "SSN", false);
    scan(kCard, "CREDIT_CARD", true);
    scan(kPhone, "PHONE", false);
    std::sort(hits.begin(), hits.end(), [](const PiiHit& a, const PiiHit& b) { return a.begin < b.begin; });
    return hits;
  }
};

inline bool pii_type_allowed(const std::vector<std::string>& allowed, const std::string& type) {
  return std::find(allowed.begin(), allowed.end(), type) != allowed.end();
}

/// Replaces each non-allowed hit at or above `threshold` with [REDACTED_<TYPE>].
inline std::string redact_pii(std::string_view text, const std::vector<PiiHit>& hits,
                              const std::vector<std::string>& allowed, double threshold) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& h : hits) {
    if (pii_type_allowed(allowed, h.type) || h.confidence < threshold || h.begin < pos) continue;
    out.append(text.substr(pos, h.begin - pos));
    out += "[REDACTED_" + h.type + "]";
    pos = h.end;
  }
  out.append(text.substr(pos));
  return out;
}

}  // namespace srouter
