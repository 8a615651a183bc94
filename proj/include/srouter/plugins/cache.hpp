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

#include <chrono>
#include <condition_variable>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "srouter/core/text.hpp"
#include "srouter/core/vec.hpp"
#include "srouter/signals/embedder.hpp"

namespace srouter {

struct CacheHit {
  std::string response;
  double similarity = 0.0;
};

/// Outcome of a lookup. A miss with `leader` set owns the pending entry and
/// must call complete() or fail(); a miss without it timed out waiting and
/// forwards on its own.
struct CacheLookup {
  std::optional<CacheHit> hit;
  bool leader = false;
  bool waited = false;
};

/// Semantic cache for one decision: linear-scan cosine over complete
/// entries, pending entries keyed by normalized query, LRU over complete
/// entries.
class SemanticCache {
 public:
  explicit SemanticCache(std::shared_ptr<const Embedder> embedder, std::size_t capacity = 4096,
                         std::chrono::milliseconds wait_timeout = std::chrono::seconds(30))
      : embedder_(std::move(embedder)), capacity_(capacity == 0 ? 1 : capacity), wait_(wait_timeout) {}

  CacheLookup lookup(std::string_view query, double threshold) {
    const std::string key = text::normalize_query(query);
    const vec::Vector e = embedder_->embed(query);
    std::unique_lock lock(mu_);
    CacheLookup out;
    while (true) {
      if (auto hit = best_match(e, threshold)) {
        out.hit = std::move(hit);
        return out;
      }
      auto p = pending_.find(key);
      if (p == pending_.end()) {
        pending_.emplace(key, std::make_shared<Pending>(Pending{e, false, false, {}}));
        out.leader = true;
        return out;
      }
      auto state = p->second;
      out.waited = true;
      ++waiting_;
      const bool released = cv_.wait_for(lock, wait_, [&] { return state->done || state->failed; });
      --waiting_;
      if (!released) return out;
      if (state->done) {
        out.hit = CacheHit{state->response, 1.0};
        return out;
      }
      // Leader failed: retry, possibly becoming the new leader.
    }
  }

  /// Completes the pending entry (or inserts directly) and releases waiters.
  void complete(std::string_view query, std::string response) {
    const std::string key = text::normalize_query(query);
    std::unique_lock lock(mu_);
    vec::Vector e;
    if (auto p = pending_.find(key); p != pending_.end()) {
      e = p->second->embedding;
      p->second->done = true;
      p->second->response = response;
      pending_.erase(p);
    } else {
      lock.unlock();
      e = embedder_->embed(query);
      lock.lock();
    }
    if (auto it = index_.find(key); it != index_.end()) {
      it->second->response = std::move(response);
      lru_.splice(lru_.begin(), lru_, it->second);
    } else {
      lru_.push_front(Entry{key, std::move(e), std::move(response), Clock::now(), 0});
      index_[key] = lru_.begin();
      while (lru_.size() > capacity_) {
        index_.erase(lru_.back().key);
        lru_.pop_back();
      }
    }
    cv_.notify_all();
  }

  /// Drops the pending entry after an upstream error; no entry is stored.
  void fail(std::string_view query) {
    const std::string key = text::normalize_query(query);
    std::lock_guard lock(mu_);
    if (auto p = pending_.find(key); p != pending_.end()) {
      p->second->failed = true;
      pending_.erase(p);
    }
    cv_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return lru_.size();
  }

  std::size_t pending() const {
    std::lock_guard lock(mu_);
    return pending_.size();
  }

  /// Lookups currently blocked on a pending entry.
  std::size_t waiting() const {
    std::lock_guard lock(mu_);
    return waiting_;
  }

  bool contains(std::string_view query) const {
    std::lock_guard lock(mu_);
    return index_.count(text::normalize_query(query)) > 0;
  }

  std::size_t hits(std::string_view query) const {
    std::lock_guard lock(mu_);
    auto it = index_.find(text::normalize_query(query));
    return it == index_.end() ? 0 : it->second->hit_count;
  }

 private:
  using Clock = std::chrono::steady_clock;

  struct Entry {
    std::string key;
    vec::Vector embedding;
    std::string response;
    Clock::time_point created;
    std::size_t hit_count = 0;
  };

  struct Pending {
    vec::Vector embedding;
    bool done = false;
    bool failed = false;
    std::string response;
  };

  std::optional<CacheHit> best_match(const vec::Vector& e, double threshold) {
    auto best = lru_.end();
    double best_sim = -2.0;
    for (auto it = lru_.begin(); it != lru_.end(); ++it) {
      const double s = vec::dot(e, it->embedding);
      if (s > best_sim) {
        best_sim = s;
        best = it;
      }
    }
    if (best == lru_.end() || best_sim < threshold) return std::nullopt;
    ++best->hit_count;
    lru_.splice(lru_.begin(), lru_, best);
    return CacheHit{best->response, best_sim};
  }

  std::shared_ptr<const Embedder> embedder_;
  std::size_t capacity_;
  std::chrono::milliseconds wait_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::list<Entry> lru_;
  std::map<std::string, std::list<Entry>::iterator> index_;
  std::map<std::string, std::shared_ptr<Pending>> pending_;
  std::size_t waiting_ = 0;
};

/// One cache per decision name, created on first use.
class CacheRegistry {
 public:
  explicit CacheRegistry(std::shared_ptr<const Embedder> embedder, std::size_t capacity = 4096,
                         std::chrono::milliseconds wait_timeout = std::chrono::seconds(30))
      : embedder_(std::move(embedder)), capacity_(capacity), wait_(wait_timeout) {}

  SemanticCache& for_decision(const std::string& decision) {
    std::lock_guard lock(mu_);
    auto& c = caches_[decision];
    if (!c) c = std::make_unique<SemanticCache>(embedder_, capacity_, wait_);
    return *c;
  }

 private:
  std::shared_ptr<const Embedder> embedder_;
  std::size_t capacity_;
  std::chrono::milliseconds wait_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<SemanticCache>> caches_;
};

}  // namespace srouter
