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
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "srouter/core/text.hpp"
#include "srouter/core/vec.hpp"
#include "srouter/retrieval/bm25.hpp"
#include "srouter/retrieval/fusion.hpp"
#include "srouter/signals/embedder.hpp"

namespace srouter {

struct StoredDoc {
  std::string id;
  std::string text;
  vec::Vector embedding;  // unit vector
};

enum class SearchMode { kVector, kWeighted, kRrf };

struct SearchOptions {
  SearchMode mode = SearchMode::kWeighted;
  FusionConfig fusion;  // weights and k; mode comes from `mode`
  std::size_t top_k = 5;
  std::optional<double> threshold;  // cosine cut-off, vector mode only
  std::size_t candidate_factor = 4;
};

struct SearchHit {
  std::string id;
  std::string text;
  double score = 0.0;
  double cosine = 0.0;
};

inline SearchMode search_mode(FusionMode f) { return f == FusionMode::kRrf ? SearchMode::kRrf : SearchMode::kWeighted; }

/// In-memory document store: linear-scan cosine index plus BM25. Searches
/// run concurrently; writes take the lock exclusively.
class DocumentStore {
 public:
  explicit DocumentStore(Bm25Params bm25 = {}) : bm25_(bm25) {}

  void upsert(StoredDoc doc) {
    doc.embedding = vec::normalized(std::move(doc.embedding));
    std::unique_lock lock(mu_);
    bm25_.add(doc.id, doc.text);
    docs_[doc.id] = std::move(doc);
  }

  void upsert(const std::string& id, const std::string& text, const Embedder& e) { upsert({id, text, e.embed(text)}); }

  bool remove(const std::string& id) {
    std::unique_lock lock(mu_);
    bm25_.remove(id);
    return docs_.erase(id) > 0;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return docs_.size();
  }

  std::optional<StoredDoc> get(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = docs_.find(id);
    if (it == docs_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<StoredDoc> all() const {
    std::shared_lock lock(mu_);
    std::vector<StoredDoc> out;
    for (const auto& [id, d] : docs_) out.push_back(d);
    return out;
  }

  /// Fetches candidate_factor * top_k by cosine, rescored lexically and fused.
  /// The cosine threshold applies only in vector mode; fused modes are
  /// bounded by top_k alone.
  std::vector<SearchHit> search(std::string_view query, const vec::Vector& query_embedding,
                                const SearchOptions& opt) const {
    std::shared_lock lock(mu_);
    std::vector<ScoredDoc> by_cos;
    for (const auto& [id, d] : docs_) by_cos.push_back({id, vec::cosine(query_embedding, d.embedding)});
    std::map<std::string, double> cos;
    for (const auto& s : by_cos) cos[s.id] = s.score;

    std::vector<ScoredDoc> ranked;
    if (opt.mode == SearchMode::kVector) {
      for (const auto& s : by_cos) {
        if (!opt.threshold || s.score >= *opt.threshold) ranked.push_back(s);
      }
      ranked = top_k_of(std::move(ranked), opt.top_k);
    } else {
      const auto cands = top_k_of(std::move(by_cos), opt.candidate_factor * opt.top_k);
      const auto tokens = text::tokenize(query);
      std::vector<RetrieverScores> scores;
      for (const auto& c : cands) {
        scores.push_back({c.id, c.score, bm25_.score(tokens, c.id), text::ngram_jaccard(query, docs_.at(c.id).text)});
      }
      FusionConfig f = opt.fusion;
      f.mode = opt.mode == SearchMode::kRrf ? FusionMode::kRrf : FusionMode::kWeighted;
      ranked = fuse(scores, f, opt.top_k);
    }
    std::vector<SearchHit> out;
    for (const auto& r : ranked) out.push_back({r.id, docs_.at(r.id).text, r.score, cos.at(r.id)});
    return out;
  }

  std::vector<SearchHit> search(std::string_view query, const Embedder& e, const SearchOptions& opt) const {
    return search(query, e.embed(query), opt);
  }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, StoredDoc> docs_;
  Bm25Index bm25_;
};

}  // namespace srouter
