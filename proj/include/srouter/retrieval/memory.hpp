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
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "srouter/core/error.hpp"
#include "srouter/core/text.hpp"
#include "srouter/retrieval/store.hpp"
#include "srouter/signals/classifier.hpp"
#include "srouter/signals/embedder.hpp"

namespace srouter {

using Clock = std::chrono::system_clock;

inline constexpr std::size_t kMaxChunkBytes = 16384;

inline constexpr std::array<std::string_view, 24> kGreetings{
    "hi",          "hello",     "hey",     "hiya",         "yo",        "thanks",
    "thank you",   "thx",       "ty",      "ok",           "okay",      "k",
    "yes",         "no",        "yep",     "nope",         "sure",      "cool",
    "got it",      "bye",       "goodbye", "good morning", "good night", "good evening"};

/// Lowercased, whitespace-collapsed, trailing punctuation stripped.
inline bool is_greeting(std::string_view text) {
  std::string t = text::normalize_query(text);
  while (!t.empty() && std::string_view(".!?,;:~").find(t.back()) != std::string_view::npos) t.pop_back();
  return std::find(kGreetings.begin(), kGreetings.end(), t) != kGreetings.end();
}

/// Write-side gate: at least 4 whitespace tokens and not a greeting.
inline bool entropy_gate(std::string_view user_text) {
  return text::split_whitespace(user_text).size() >= 4 && !is_greeting(user_text);
}

/// Read-side gate: skip greetings, tool-carrying requests, and general
/// knowledge questions with no first-person reference.
inline bool retrieval_gate(std::string_view query, bool has_tools = false) {
  if (has_tools || is_greeting(query)) return false;
  if (sentinel_needs_fact_check(query)) {
    static const std::set<std::string> personal{"i", "my", "me", "mine", "we", "our", "us"};
    for (const auto& t : text::tokenize(query)) {
      if (personal.count(t)) return true;
    }
    return false;
  }
  return true;
}

enum class ChunkKind { kTurn, kWindow };

struct MemoryChunk {
  std::string id;
  std::string user;
  ChunkKind kind = ChunkKind::kTurn;
  std::string text;
  vec::Vector embedding;
  Clock::time_point timestamp{};
  std::size_t tokens = 0;
};

/// `Q: ...\nA: ...`, sanitized and capped at a code-point boundary.
inline std::string format_turn(std::string_view user_text, std::string_view assistant_text) {
  std::string t = "Q: " + text::sanitize_utf8(user_text) + "\nA: " + text::sanitize_utf8(assistant_text);
  return text::truncate_utf8(t, kMaxChunkBytes);
}

struct ReflectionConfig {
  std::vector<std::string> block_patterns{
      R"(ignore (all )?(previous|prior|above) instructions)",
      R"(disregard (all )?(previous|prior|above) (instructions|rules))",
      R"(you are now (in )?(dan|developer mode))",
      R"(reveal (your|the) system prompt)",
  };
  std::chrono::seconds half_life{std::chrono::hours(24 * 7)};
  double dedup_jaccard = 0.8;
  std::size_t budget = 5;
};

struct MemoryCandidate {
  std::string id;
  std::string text;
  double score = 0.0;
  Clock::time_point timestamp{};
};

/// Block-list, recency decay, greedy Jaccard dedup, then budget.
class ReflectionGate {
 public:
  explicit ReflectionGate(ReflectionConfig cfg = {}) : cfg_(std::move(cfg)) {
    for (const auto& p : cfg_.block_patterns) blocks_.emplace_back(p, std::regex::icase | std::regex::ECMAScript);
  }

  const ReflectionConfig& config() const { return cfg_; }

  bool blocked(std::string_view text) const {
    const std::string s(text);
    return std::any_of(blocks_.begin(), blocks_.end(), [&](const std::regex& r) { return std::regex_search(s, r); });
  }

  /// Multiplier exp(-ln2 * age / half_life); future timestamps count as age 0.
  double decay(Clock::time_point ts, Clock::time_point now) const {
    const double age = std::max(0.0, std::chrono::duration<double>(now - ts).count());
    const double hl = std::chrono::duration<double>(cfg_.half_life).count();
    return hl > 0 ? std::exp(-std::log(2.0) * age / hl) : 1.0;
  }

  std::vector<MemoryCandidate> apply(std::vector<MemoryCandidate> in, Clock::time_point now) const {
    std::vector<MemoryCandidate> kept;
    for (auto& c : in) {
      if (blocked(c.text)) continue;
      c.score *= decay(c.timestamp, now);
      kept.push_back(std::move(c));
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    std::vector<MemoryCandidate> out;
    for (auto& c : kept) {
      const bool dup = std::any_of(out.begin(), out.end(), [&](const MemoryCandidate& o) {
        return text::word_jaccard(o.text, c.text) >= cfg_.dedup_jaccard;
      });
      if (!dup) out.push_back(std::move(c));
      if (out.size() == cfg_.budget) break;
    }
    return out;
  }

 private:
  ReflectionConfig cfg_;
  std::vector<std::regex> blocks_;
};

/// Single-linkage clusters at word Jaccard >= threshold, as index groups in
/// ascending order of their smallest member.
inline std::vector<std::vector<std::size_t>> single_linkage(const std::vector<std::string>& texts, double threshold) {
  const std::size_t n = texts.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (text::word_jaccard(texts[i], texts[j]) >= threshold) parent[find(i)] = find(j);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, g] : groups) out.push_back(std::move(g));
  std::sort(out.begin(), out.end());
  return out;
}

struct MemoryOptions {
  std::size_t window_stride = 3;  // s
  std::size_t window_span = 5;    // w
  double cluster_jaccard = 0.6;
  ReflectionConfig reflection;
  std::function<std::string(std::string_view)> rewrite_query;  // identity when empty
};

struct MemoryHit {
  MemoryChunk chunk;
  double score = 0.0;
};

/// Per-user episodic memory. Writes are serialized per user; consolidation
/// rebuilds a user's store and swaps it in.
class EpisodicMemory {
 public:
  EpisodicMemory(std::shared_ptr<const Embedder> embedder, MemoryOptions opt = {})
      : embedder_(std::move(embedder)), opt_(std::move(opt)), gate_(opt_.reflection) {}

  const MemoryOptions& options() const { return opt_; }

  /// Returns the chunks stored for this turn (empty when gated out).
  std::vector<MemoryChunk> write(const std::string& user, std::string_view user_text, std::string_view assistant_text,
                                 Clock::time_point now = Clock::now()) {
    if (!entropy_gate(user_text)) return {};
    auto& u = user_state(user);
    std::lock_guard lock(u.mu);
    std::vector<MemoryChunk> out;
    const std::string turn = format_turn(user_text, assistant_text);
    u.turns.push_back(turn);
    out.push_back(make_chunk(user, ChunkKind::kTurn, turn, now, u));
    if (opt_.window_stride > 0 && u.turns.size() % opt_.window_stride == 0) {
      const std::size_t span = std::min(opt_.window_span, u.turns.size());
      std::string w;
      for (std::size_t i = u.turns.size() - span; i < u.turns.size(); ++i) {
        if (!w.empty()) w += "\n\n";
        w += u.turns[i];
      }
      out.push_back(make_chunk(user, ChunkKind::kWindow, text::truncate_utf8(w, kMaxChunkBytes), now, u));
    }
    for (const auto& c : out) insert(u, c);
    return out;
  }

  /// Restores a chunk verbatim (persistence reload).
  void restore(MemoryChunk c) {
    auto& u = user_state(c.user);
    std::lock_guard lock(u.mu);
    if (c.embedding.empty()) c.embedding = embedder_->embed(c.text);
    if (c.kind == ChunkKind::kTurn) u.turns.push_back(c.text);
    u.next_id = std::max(u.next_id, parse_seq(c.id) + 1);
    insert(u, std::move(c));
  }

  std::size_t size(const std::string& user) const {
    auto u = find_user(user);
    if (!u) return 0;
    std::lock_guard lock(u->mu);
    return u->chunks.size();
  }

  std::vector<MemoryChunk> chunks(const std::string& user) const {
    auto u = find_user(user);
    std::vector<MemoryChunk> out;
    if (!u) return out;
    std::lock_guard lock(u->mu);
    for (const auto& [id, c] : u->chunks) out.push_back(c);
    return out;
  }

  std::vector<std::string> users() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [name, u] : users_) out.push_back(name);
    return out;
  }

  /// Hybrid search over the user's chunks, then the reflection gate.
  std::vector<MemoryHit> search(const std::string& user, std::string_view query, SearchOptions search,
                                Clock::time_point now = Clock::now()) const {
    auto u = find_user(user);
    if (!u) return {};
    const std::string q = opt_.rewrite_query ? opt_.rewrite_query(query) : std::string(query);
    std::vector<MemoryCandidate> cands;
    std::map<std::string, MemoryChunk> by_id;
    {
      std::lock_guard lock(u->mu);
      const std::size_t want = search.top_k;
      search.top_k = std::max(want, gate_.config().budget) * 2;
      for (const auto& h : u->store->search(q, *embedder_, search)) {
        const auto& c = u->chunks.at(h.id);
        cands.push_back({h.id, c.text, h.score, c.timestamp});
        by_id.emplace(h.id, c);
      }
      search.top_k = want;
    }
    std::vector<MemoryHit> out;
    for (auto& c : gate_.apply(std::move(cands), now)) {
      if (out.size() == search.top_k) break;
      out.push_back({by_id.at(c.id), c.score});
    }
    return out;
  }

  /// Replaces each multi-member single-linkage cluster with its longest
  /// member (ties: lowest id). Never grows the store.
  void consolidate(const std::string& user) {
    auto u = find_user(user);
    if (!u) return;
    std::lock_guard lock(u->mu);
    std::vector<MemoryChunk> all;
    for (const auto& [id, c] : u->chunks) all.push_back(c);
    std::vector<std::string> texts;
    for (const auto& c : all) texts.push_back(c.text);
    const auto clusters = single_linkage(texts, opt_.cluster_jaccard);
    if (clusters.size() == all.size()) return;
    auto fresh = std::make_unique<DocumentStore>();
    std::map<std::string, MemoryChunk> kept;
    for (const auto& g : clusters) {
      std::size_t best = g.front();
      for (std::size_t i : g) {
        if (all[i].text.size() > all[best].text.size()) best = i;
      }
      MemoryChunk c = all[best];
      if (g.size() > 1) c.embedding = embedder_->embed(c.text);
      fresh->upsert({c.id, c.text, c.embedding});
      kept.emplace(c.id, std::move(c));
    }
    u->store = std::move(fresh);
    u->chunks = std::move(kept);
  }

  // JSONL persistence: one object per line with
  // {"id","user","kind":"turn"|"window","text","timestamp_ms","tokens"}.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write memory file '" + path + "'");
    for (const auto& user : users()) {
      for (const auto& c : chunks(user)) out << to_json(c).dump() << '\n';
    }
  }

  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read memory file '" + path + "'");
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (text::trim(line).empty()) continue;
      try {
        restore(from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw Error("memory file line " + std::to_string(n) + ": " + e.what());
      }
    }
  }

  static nlohmann::json to_json(const MemoryChunk& c) {
    return {{"id", c.id},
            {"user", c.user},
            {"kind", c.kind == ChunkKind::kTurn ? "turn" : "window"},
            {"text", c.text},
            {"timestamp_ms",
             std::chrono::duration_cast<std::chrono::milliseconds>(c.timestamp.time_since_epoch()).count()},
            {"tokens", c.tokens}};
  }

  static MemoryChunk from_json(const nlohmann::json& j) {
    MemoryChunk c;
    c.id = j.at("id").get<std::string>();
    c.user = j.at("user").get<std::string>();
    c.kind = j.at("kind").get<std::string>() == "window" ? ChunkKind::kWindow : ChunkKind::kTurn;
    c.text = text::sanitize_utf8(j.at("text").get<std::string>());
    c.timestamp = Clock::time_point(std::chrono::milliseconds(j.at("timestamp_ms").get<std::int64_t>()));
    c.tokens = j.value("tokens", text::estimate_tokens(text::code_point_count(c.text)));
    return c;
  }

 private:
  struct UserState {
    std::mutex mu;
    std::vector<std::string> turns;
    std::map<std::string, MemoryChunk> chunks;
    std::unique_ptr<DocumentStore> store = std::make_unique<DocumentStore>();
    std::size_t next_id = 0;
  };

  static std::size_t parse_seq(const std::string& id) {
    const auto pos = id.rfind('-');
    try {
      return pos == std::string::npos ? 0 : std::stoul(id.substr(pos + 1));
    } catch (...) {
      return 0;
    }
  }

  MemoryChunk make_chunk(const std::string& user, ChunkKind kind, std::string text, Clock::time_point now,
                         UserState& u) const {
    MemoryChunk c;
    c.id = user + "-" + std::to_string(u.next_id++);
    c.user = user;
    c.kind = kind;
    c.embedding = embedder_->embed(text);
    c.tokens = text::estimate_tokens(text::code_point_count(text));
    c.text = std::move(text);
    c.timestamp = now;
    return c;
  }

  static void insert(UserState& u, MemoryChunk c) {
    u.store->upsert({c.id, c.text, c.embedding});
    u.chunks[c.id] = std::move(c);
  }

  UserState& user_state(const std::string& user) {
    std::lock_guard lock(mu_);
    auto& p = users_[user];
    if (!p) p = std::make_shared<UserState>();
    return *p;
  }

  std::shared_ptr<UserState> find_user(const std::string& user) const {
    std::lock_guard lock(mu_);
    auto it = users_.find(user);
    return it == users_.end() ? nullptr : it->second;
  }

  std::shared_ptr<const Embedder> embedder_;
  MemoryOptions opt_;
  ReflectionGate gate_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<UserState>> users_;
};

}  // namespace srouter
