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
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "srouter/core/error.hpp"

namespace srouter {

/// P(i beats j) under the Bradley-Terry / Elo curve.
inline double elo_win_probability(double r_i, double r_j) { return 1.0 / (1.0 + std::pow(10.0, (r_j - r_i) / 400.0)); }

/// Elo ratings with K-factor updates. Thread-safe.
class EloState {
 public:
  explicit EloState(double k_factor = 32.0, double initial = 1500.0) : k_(k_factor), initial_(initial) {}

  double k_factor() const { return k_; }
  double initial_rating() const { return initial_; }

  double rating(const std::string& model) const {
    std::lock_guard lock(mu_);
    auto it = ratings_.find(model);
    return it == ratings_.end() ? initial_ : it->second;
  }

  void set_rating(const std::string& model, double r) {
    std::lock_guard lock(mu_);
    ratings_[model] = r;
  }

  /// Snapshot for a candidate list; unknown models get the initial rating.
  std::vector<double> ratings(const std::vector<std::string>& models) const {
    std::lock_guard lock(mu_);
    std::vector<double> out;
    for (const auto& m : models) {
      auto it = ratings_.find(m);
      out.push_back(it == ratings_.end() ? initial_ : it->second);
    }
    return out;
  }

  /// outcome is the score of `a` against `b`: 1 win, 0.5 draw, 0 loss.
  void record(const std::string& a, const std::string& b, double outcome) {
    if (outcome < 0.0 || outcome > 1.0) throw SelectionError("elo outcome must be in [0,1]");
    std::lock_guard lock(mu_);
    double& ra = slot(a);
    double& rb = slot(b);
    const double p = elo_win_probability(ra, rb);
    const double delta = k_ * (outcome - p);
    ra += delta;
    rb -= delta;
  }

 private:
  double& slot(const std::string& m) { return ratings_.try_emplace(m, initial_).first->second; }

  double k_;
  double initial_;
  mutable std::mutex mu_;
  std::map<std::string, double> ratings_;
};

/// Mean win probability of each entry against the rest of the pool; a
/// singleton pool has rate 1.
inline std::vector<double> expected_win_rates(const std::vector<double>& ratings) {
  const std::size_t n = ratings.size();
  std::vector<double> out(n, 1.0);
  if (n < 2) return out;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) s += elo_win_probability(ratings[i], ratings[j]);
    }
    out[i] = s / static_cast<double>(n - 1);
  }
  return out;
}

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
  double mean() const { return alpha / (alpha + beta); }
  bool operator==(const BetaParams&) const = default;
};

template <class Rng>
double sample_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y == 0.0) return 0.5;
  return x / (x + y);
}

/// Per-model Beta posteriors for Thompson sampling. Thread-safe.
class BetaState {
 public:
  BetaParams get(const std::string& model) const {
    std::lock_guard lock(mu_);
    auto it = params_.find(model);
    return it == params_.end() ? BetaParams{} : it->second;
  }

  void set(const std::string& model, BetaParams p) {
    if (p.alpha <= 0.0 || p.beta <= 0.0) throw SelectionError("beta parameters must be positive");
    std::lock_guard lock(mu_);
    params_[model] = p;
  }

  void update(const std::string& model, bool success) {
    std::lock_guard lock(mu_);
    auto& p = params_[model];
    (success ? p.alpha : p.beta) += 1.0;
  }

  std::vector<BetaParams> snapshot(const std::vector<std::string>& models) const {
    std::lock_guard lock(mu_);
    std::vector<BetaParams> out;
    for (const auto& m : models) {
      auto it = params_.find(m);
      out.push_back(it == params_.end() ? BetaParams{} : it->second);
    }
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, BetaParams> params_;
};

enum class LatencyMetric { kTpot, kTtft };

/// Nearest-rank percentile, p in (0,100].
inline double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw SelectionError("percentile of an empty window");
  if (!(p > 0.0 && p <= 100.0)) throw SelectionError("percentile must be in (0,100]");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

/// Bounded per-model latency windows, oldest evicted first. Thread-safe.
class LatencyStore {
 public:
  explicit LatencyStore(std::size_t capacity = 1024) : capacity_(capacity == 0 ? 1 : capacity) {}

  std::size_t capacity() const { return capacity_; }

  void observe(const std::string& model, LatencyMetric metric, double value) {
    std::lock_guard lock(mu_);
    auto& w = windows_[{model, metric}];
    w.push_back(value);
    while (w.size() > capacity_) w.pop_front();
  }

  std::size_t count(const std::string& model, LatencyMetric metric) const {
    std::lock_guard lock(mu_);
    auto it = windows_.find({model, metric});
    return it == windows_.end() ? 0 : it->second.size();
  }

  /// Empty window gives nullopt.
  std::optional<double> percentile(const std::string& model, LatencyMetric metric, double p) const {
    std::vector<double> values;
    {
      std::lock_guard lock(mu_);
      auto it = windows_.find({model, metric});
      if (it == windows_.end() || it->second.empty()) return std::nullopt;
      values.assign(it->second.begin(), it->second.end());
    }
    return nearest_rank_percentile(std::move(values), p);
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, LatencyMetric>, std::deque<double>> windows_;
};

}  // namespace srouter
