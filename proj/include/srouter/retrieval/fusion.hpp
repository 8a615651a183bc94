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
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/core/error.hpp"

namespace srouter {

struct FusionConfig {
  FusionMode mode = FusionMode::kWeighted;
  double w_vector = 0.7;
  double w_bm25 = 0.2;
  double w_ngram = 0.1;
  double rrf_k = 60.0;

  void validate() const {
    if (w_vector < 0 || w_bm25 < 0 || w_ngram < 0) throw Error("fusion weights must be >= 0");
    if (std::abs(w_vector + w_bm25 + w_ngram - 1.0) > 1e-9) throw Error("fusion weights must sum to 1");
    if (!(rrf_k > 0)) throw Error("rrf constant must be > 0");
  }
};

struct ScoredDoc {
  std::string id;
  double score = 0.0;
  bool operator==(const ScoredDoc&) const = default;
};

/// Descending score, ties by id; keeps at most top_k.
inline std::vector<ScoredDoc> top_k_of(std::vector<ScoredDoc> docs, std::size_t top_k) {
  std::sort(docs.begin(), docs.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  if (docs.size() > top_k) docs.resize(top_k);
  return docs;
}

/// sum over lists of 1 / (k + rank), ranks 1-based; a doc missing from a
/// list gets nothing from it.
inline std::map<std::string, double> rrf_scores(const std::vector<std::vector<std::string>>& rankings, double k = 60.0) {
  std::map<std::string, double> out;
  for (const auto& list : rankings) {
    for (std::size_t r = 0; r < list.size(); ++r) out[list[r]] += 1.0 / (k + static_cast<double>(r + 1));
  }
  return out;
}

/// Raw per-retriever scores for one candidate.
struct RetrieverScores {
  std::string id;
  double vector = 0.0;
  double bm25 = 0.0;
  double ngram = 0.0;
};

/// w_v * vector + w_b * minmax(bm25) + w_n * ngram. A constant BM25 column
/// normalizes to 0 (all-zero) or 1 (all equal and positive).
inline std::vector<ScoredDoc> weighted_fuse(const std::vector<RetrieverScores>& cands, const FusionConfig& cfg) {
  std::vector<ScoredDoc> out;
  if (cands.empty()) return out;
  double lo = cands.front().bm25, hi = lo;
  for (const auto& c : cands) {
    lo = std::min(lo, c.bm25);
    hi = std::max(hi, c.bm25);
  }
  for (const auto& c : cands) {
    const double b = hi > lo ? (c.bm25 - lo) / (hi - lo) : (hi > 0 ? 1.0 : 0.0);
    out.push_back({c.id, cfg.w_vector * c.vector + cfg.w_bm25 * b + cfg.w_ngram * c.ngram});
  }
  return out;
}

/// Rank lists per retriever (descending, ties by id). Lexical lists drop
/// zero-score docs, the vector list keeps every candidate.
inline std::vector<std::vector<std::string>> retriever_rankings(const std::vector<RetrieverScores>& cands) {
  const auto rank = [&](auto field, bool drop_zero) {
    std::vector<ScoredDoc> s;
    for (const auto& c : cands) {
      if (!drop_zero || field(c) > 0.0) s.push_back({c.id, field(c)});
    }
    std::vector<std::string> ids;
    for (const auto& d : top_k_of(std::move(s), cands.size())) ids.push_back(d.id);
    return ids;
  };
  return {rank([](const RetrieverScores& c) { return c.vector; }, false),
          rank([](const RetrieverScores& c) { return c.bm25; }, true),
          rank([](const RetrieverScores& c) { return c.ngram; }, true)};
}

inline std::vector<ScoredDoc> fuse(const std::vector<RetrieverScores>& cands, const FusionConfig& cfg,
                                   std::size_t top_k) {
  if (cfg.mode == FusionMode::kWeighted) return top_k_of(weighted_fuse(cands, cfg), top_k);
  std::vector<ScoredDoc> out;
  for (const auto& [id, s] : rrf_scores(retriever_rankings(cands), cfg.rrf_k)) out.push_back({id, s});
  return top_k_of(std::move(out), top_k);
}

}  // namespace srouter
