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
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "srouter/core/text.hpp"

namespace srouter {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// ln(1 + (N - df + 0.5) / (df + 0.5))
inline double bm25_idf(std::size_t n_docs, std::size_t df) {
  const double n = static_cast<double>(n_docs);
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

/// One query term's Okapi contribution.
inline double bm25_term(double idf, double tf, double doc_len, double avgdl, const Bm25Params& p = {}) {
  if (tf <= 0.0) return 0.0;
  const double norm = avgdl > 0.0 ? doc_len / avgdl : 1.0;
  return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

/// Okapi BM25 inverted index over `text::tokenize` tokens.
class Bm25Index {
 public:
  explicit Bm25Index(Bm25Params params = {}) : params_(params) {}

  void add(const std::string& id, std::string_view text) { add_tokens(id, text::tokenize(text)); }

  void add_tokens(const std::string& id, const std::vector<std::string>& tokens) {
    remove(id);
    Doc doc;
    doc.length = tokens.size();
    for (const auto& t : tokens) doc.tf[t] += 1;
    for (const auto& [t, n] : doc.tf) df_[t] += 1;
    total_length_ += doc.length;
    docs_.emplace(id, std::move(doc));
  }

  void remove(const std::string& id) {
    auto it = docs_.find(id);
    if (it == docs_.end()) return;
    for (const auto& [t, n] : it->second.tf) {
      if (--df_[t] == 0) df_.erase(t);
    }
    total_length_ -= it->second.length;
    docs_.erase(it);
  }

  bool contains(const std::string& id) const { return docs_.count(id) > 0; }
  std::size_t size() const { return docs_.size(); }

  double avgdl() const {
    return docs_.empty() ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(docs_.size());
  }

  std::size_t df(const std::string& term) const {
    auto it = df_.find(term);
    return it == df_.end() ? 0 : it->second;
  }

  /// Sum over distinct query terms; 0 for unknown ids.
  double score(const std::vector<std::string>& query_tokens, const std::string& id) const {
    auto it = docs_.find(id);
    if (it == docs_.end()) return 0.0;
    const Doc& doc = it->second;
    const double avg = avgdl();
    double s = 0.0;
    const std::set<std::string> terms(query_tokens.begin(), query_tokens.end());
    for (const auto& t : terms) {
      auto tf = doc.tf.find(t);
      if (tf == doc.tf.end()) continue;
      s += bm25_term(bm25_idf(docs_.size(), df(t)), tf->second, static_cast<double>(doc.length), avg, params_);
    }
    return s;
  }

  double score(std::string_view query, const std::string& id) const { return score(text::tokenize(query), id); }

  const Bm25Params& params() const { return params_; }

 private:
  struct Doc {
    std::size_t length = 0;
    std::unordered_map<std::string, double> tf;
  };

  Bm25Params params_;
  std::map<std::string, Doc> docs_;
  std::unordered_map<std::string, std::size_t> df_;
  std::size_t total_length_ = 0;
};

}  // namespace srouter
