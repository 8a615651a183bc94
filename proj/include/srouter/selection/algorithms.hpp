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
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/core/error.hpp"
#include "srouter/core/vec.hpp"
#include "srouter/selection/automix.hpp"
#include "srouter/selection/model_file.hpp"
#include "srouter/selection/remom.hpp"
#include "srouter/selection/state.hpp"

namespace srouter {

struct SelectionContext {
  vec::Vector query_embedding;  // unit vector; may be empty for selectors that ignore it
  std::optional<std::string> domain;
  std::vector<ModelRef> candidates;
  std::map<std::string, double> costs;  // overrides ModelRef::cost
  double decision_confidence = 1.0;
  const LatencyStore* latency = nullptr;
  std::optional<std::uint64_t> seed;  // per-call seed for stochastic selectors

  std::vector<std::string> models() const {
    std::vector<std::string> out;
    for (const auto& c : candidates) out.push_back(c.model);
    return out;
  }

  double cost(std::size_t i) const {
    if (auto it = costs.find(candidates[i].model); it != costs.end()) return it->second;
    return candidates[i].cost.value_or(0.0);
  }
};

struct Selection {
  std::string model;
  double confidence = 0.0;
  std::size_t index = 0;
};

/// Pairwise or binary feedback for stateful selectors.
struct SelectionFeedback {
  std::string model;                 // winner, or the rated model
  std::optional<std::string> loser;  // pairwise preference
  bool success = true;               // binary reward
};

class Selector {
 public:
  virtual ~Selector() = default;
  virtual std::string_view id() const = 0;
  virtual Selection select(const SelectionContext& ctx) const = 0;
  virtual void feedback(const SelectionFeedback&) {}
};

namespace detail {

inline void require_candidates(const SelectionContext& ctx) {
  if (ctx.candidates.empty()) throw SelectionError("selection needs at least one candidate");
}

inline Selection pick(const SelectionContext& ctx, std::size_t i, double confidence) {
  return {ctx.candidates[i].model, vec::clamp01(confidence), i};
}

/// First index of the maximum; ties go to candidate order.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

/// Constant vectors normalize to 0.5.
inline std::vector<double> min_max(std::span<const double> v) {
  std::vector<double> out(v.size(), 0.5);
  if (v.empty()) return out;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*hi - *lo <= 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / (*hi - *lo);
  return out;
}

/// Seeded generator shared by calls that do not pass their own seed.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : rng_(seed) {}

  template <class F>
  auto with(const std::optional<std::uint64_t>& call_seed, F&& f) const {
    if (call_seed) {
      std::mt19937_64 local(*call_seed);
      return f(local);
    }
    std::lock_guard lock(mu_);
    return f(rng_);
  }

 private:
  mutable std::mutex mu_;
  mutable std::mt19937_64 rng_;
};

}  // namespace detail

class StaticSelector final : public Selector {
 public:
  std::string_view id() const override { return "static"; }
  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    std::vector<double> s;
    for (const auto& c : ctx.candidates) s.push_back(c.score.value_or(0.0));
    const std::size_t i = detail::argmax(s);
    return detail::pick(ctx, i, s[i]);
  }
};

/// Walks the candidates in order and takes the first whose score reaches the
/// threshold, else the last. A candidate without a score uses the decision
/// confidence.
class ConfidenceSelector final : public Selector {
 public:
  explicit ConfidenceSelector(double threshold) : threshold_(threshold) {}
  std::string_view id() const override { return "confidence"; }
  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    for (std::size_t i = 0; i < ctx.candidates.size(); ++i) {
      const double s = ctx.candidates[i].score.value_or(ctx.decision_confidence);
      if (s >= threshold_ || i + 1 == ctx.candidates.size()) return detail::pick(ctx, i, s);
    }
    return detail::pick(ctx, 0, 0.0);
  }

 private:
  double threshold_;
};

class EloSelector final : public Selector {
 public:
  enum class Mode { kSample, kArgmax };

  EloSelector(std::shared_ptr<EloState> state, Mode mode, std::uint64_t seed)
      : state_(std::move(state)), mode_(mode), rng_(seed) {}

  std::string_view id() const override { return "elo"; }
  const std::shared_ptr<EloState>& state() const { return state_; }

  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    const auto rates = expected_win_rates(state_->ratings(ctx.models()));
    if (mode_ == Mode::kArgmax) {
      const std::size_t i = detail::argmax(rates);
      return detail::pick(ctx, i, rates[i]);
    }
    const std::size_t i = rng_.with(ctx.seed, [&](auto& rng) {
      std::discrete_distribution<std::size_t> d(rates.begin(), rates.end());
      return d(rng);
    });
    return detail::pick(ctx, i, rates[i]);
  }

  void feedback(const SelectionFeedback& f) override {
    if (!f.loser) throw SelectionError("elo feedback needs a pairwise preference");
    state_->record(f.model, *f.loser, 1.0);
  }

 private:
  std::shared_ptr<EloState> state_;
  Mode mode_;
  detail::SeededRng rng_;
};

class RouterDcSelector final : public Selector {
 public:
  explicit RouterDcSelector(model_file::EmbeddingTable table) : table_(std::move(table)) {}
  std::string_view id() const override { return "routerdc"; }
  const model_file::EmbeddingTable& table() const { return table_; }

  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    const auto cos = similarities(table_, ctx);
    const std::size_t i = detail::argmax(cos);
    return detail::pick(ctx, i, cos[i]);
  }

  static std::vector<double> similarities(const model_file::EmbeddingTable& t, const SelectionContext& ctx) {
    std::vector<double> out;
    for (const auto& c : ctx.candidates) {
      const auto& e = t.at(c.model);
      if (e.size() != ctx.query_embedding.size()) {
        throw SelectionError("query embedding has dimension " + std::to_string(ctx.query_embedding.size()) +
                             ", model embeddings have " + std::to_string(e.size()));
      }
      out.push_back(vec::cosine(ctx.query_embedding, e));
    }
    return out;
  }

 private:
  model_file::EmbeddingTable table_;
};

/// alpha * normalized rating + beta * cosine + gamma * (1 - normalized cost).
class HybridSelector final : public Selector {
 public:
  HybridSelector(double alpha, double beta, double gamma, std::shared_ptr<EloState> elo,
                 std::optional<model_file::EmbeddingTable> table)
      : alpha_(alpha), beta_(beta), gamma_(gamma), elo_(std::move(elo)), table_(std::move(table)) {
    if (beta_ > 0.0 && !table_) throw SelectionError("hybrid with beta > 0 needs a model_file of embeddings");
  }

  std::string_view id() const override { return "hybrid"; }
  const std::shared_ptr<EloState>& state() const { return elo_; }

  std::vector<double> scores(const SelectionContext& ctx) const {
    const std::size_t n = ctx.candidates.size();
    const auto r = detail::min_max(elo_->ratings(ctx.models()));
    std::vector<double> costs;
    for (std::size_t i = 0; i < n; ++i) costs.push_back(ctx.cost(i));
    const auto c = detail::min_max(costs);
    std::vector<double> cos(n, 0.0);
    if (beta_ > 0.0) cos = RouterDcSelector::similarities(*table_, ctx);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = alpha_ * r[i] + beta_ * cos[i] + gamma_ * (1.0 - c[i]);
    return s;
  }

  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    const auto s = scores(ctx);
    const std::size_t i = detail::argmax(s);
    return detail::pick(ctx, i, s[i]);
  }

  void feedback(const SelectionFeedback& f) override {
    if (!f.loser) throw SelectionError("hybrid feedback needs a pairwise preference");
    elo_->record(f.model, *f.loser, 1.0);
  }

 private:
  double alpha_, beta_, gamma_;
  std::shared_ptr<EloState> elo_;
  std::optional<model_file::EmbeddingTable> table_;
};

/// Single-shot selection returns the cascade entry point; the cascade itself
/// runs through run_cascade with the configured thresholds.
class AutomixSelector final : public Selector {
 public:
  explicit AutomixSelector(std::vector<std::int64_t> thresholds) : thresholds_(std::move(thresholds)) {}
  std::string_view id() const override { return "automix"; }
  const std::vector<std::int64_t>& thresholds() const { return thresholds_; }
  CascadeVerifier verifier() const { return length_verifier(thresholds_); }

  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    return detail::pick(ctx, 0, 1.0 / static_cast<double>(ctx.candidates.size()));
  }

 private:
  std::vector<std::int64_t> thresholds_;
};

/// Quality-weighted vote over the k nearest records (Euclidean). Records for
/// models outside the candidate list are ignored.
class KnnSelector final : public Selector {
 public:
  KnnSelector(model_file::KnnTable table, std::size_t k) : table_(std::move(table)), k_(k) {
    if (table_.records.empty()) throw SelectionError("knn model has no records");
  }
  std::string_view id() const override { return "knn"; }

  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    const auto f = model_file::features(ctx.query_embedding, ctx.domain, table_.domains);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ctx.candidates.size(); ++i) index.try_emplace(ctx.candidates[i].model, i);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t r = 0; r < table_.records.size(); ++r) {
      const auto& rec = table_.records[r];
      if (!index.count(rec.model)) continue;
      if (rec.features.size() != f.size()) {
        throw SelectionError("knn feature dimension " + std::to_string(f.size()) + " does not match records (" +
                             std::to_string(rec.features.size()) + ")");
      }
      dist.emplace_back(vec::squared_distance(f, rec.features), r);
    }
    if (dist.empty()) throw SelectionError("knn: no records for any candidate");
    const std::size_t k = std::min(k_, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<double> votes(ctx.candidates.size(), 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& rec = table_.records[dist[j].second];
      votes[index.at(rec.model)] += rec.quality;
      total += rec.quality;
    }
    const std::size_t i = detail::argmax(votes);
    return detail::pick(ctx, i, total > 0.0 ? votes[i] / total : 0.0);
  }

 private:
  model_file::KnnTable table_;
  std::size_t k_;
};

/// Nearest centroid, then alpha * quality - (1 - alpha) * min-max latency
/// within that cluster.
class KmeansSelector final : public Selector {
 public:
  KmeansSelector(model_file::KmeansTable table, double alpha) : table_(std::move(table)), alpha_(alpha) {}
  std::string_view id() const override { return "kmeans"; }

  std::size_t cluster_of(const vec::Vector& f) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < table_.centroids.size(); ++c) {
      if (table_.centroids[c].size() != f.size()) {
        throw SelectionError("kmeans feature dimension " + std::to_string(f.size()) + " does not match centroids");
      }
      const double d = vec::squared_distance(f, table_.centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  }

  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    const auto f = model_file::features(ctx.query_embedding, ctx.domain, table_.domains);
    const auto& stats = table_.stats[cluster_of(f)];
    std::vector<std::size_t> present;
    std::vector<double> quality, latency;
    for (std::size_t i = 0; i < ctx.candidates.size(); ++i) {
      auto it = stats.find(ctx.candidates[i].model);
      if (it == stats.end()) continue;
      present.push_back(i);
      quality.push_back(it->second.quality);
      latency.push_back(it->second.latency);
    }
    if (present.empty()) throw SelectionError("kmeans: no candidate has stats in the assigned cluster");
    const auto lat = detail::min_max(latency);
    std::vector<double> s;
    for (std::size_t j = 0; j < present.size(); ++j) s.push_back(alpha_ * quality[j] - (1.0 - alpha_) * lat[j]);
    const std::size_t j = detail::argmax(s);
    return detail::pick(ctx, present[j], s[j]);
  }

 private:
  model_file::KmeansTable table_;
  double alpha_;
};

/// Softmax over the candidates' logits; confidence is the winner's mass.
class MlpSelector final : public Selector {
 public:
  explicit MlpSelector(model_file::MlpTable table) : table_(std::move(table)) {}
  std::string_view id() const override { return "mlp"; }

  std::vector<double> probabilities(const SelectionContext& ctx) const {
    const auto logits = table_.forward(model_file::features(ctx.query_embedding, ctx.domain, table_.domains));
    std::vector<double> z;
    for (const auto& c : ctx.candidates) {
      auto it = std::find(table_.models.begin(), table_.models.end(), c.model);
      if (it == table_.models.end()) throw SelectionError("mlp model has no output for '" + c.model + "'");
      z.push_back(logits[static_cast<std::size_t>(it - table_.models.begin())]);
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) sum += (v = std::exp(v - mx));
    for (double& v : z) v /= sum;
    return z;
  }

  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    const auto p = probabilities(ctx);
    const std::size_t i = detail::argmax(p);
    return detail::pick(ctx, i, p[i]);
  }

 private:
  model_file::MlpTable table_;
};

class ThompsonSelector final : public Selector {
 public:
  ThompsonSelector(std::shared_ptr<BetaState> state, std::uint64_t seed) : state_(std::move(state)), rng_(seed) {}
  std::string_view id() const override { return "thompson"; }
  const std::shared_ptr<BetaState>& state() const { return state_; }

  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    const auto params = state_->snapshot(ctx.models());
    const auto theta = rng_.with(ctx.seed, [&](auto& rng) {
      std::vector<double> t;
      for (const auto& p : params) t.push_back(sample_beta(p.alpha, p.beta, rng));
      return t;
    });
    const std::size_t i = detail::argmax(theta);
    return detail::pick(ctx, i, theta[i]);
  }

  void feedback(const SelectionFeedback& f) override { state_->update(f.model, f.success); }

 private:
  std::shared_ptr<BetaState> state_;
  detail::SeededRng rng_;
};

/// argmin over s_k = mean over metrics of perc_p(m_k) / min_j perc_p(m_j).
/// Candidates missing a window for any metric are excluded. Confidence is
/// 1 / s_k.
class LatencyAwareSelector final : public Selector {
 public:
  LatencyAwareSelector(std::vector<LatencyMetric> metrics, double percentile)
      : metrics_(std::move(metrics)), percentile_(percentile) {
    if (metrics_.empty()) throw SelectionError("latency_aware needs at least one metric");
  }
  std::string_view id() const override { return "latency_aware"; }

  /// Scores aligned with candidates; excluded ones are nullopt.
  std::vector<std::optional<double>> scores(const SelectionContext& ctx) const {
    if (!ctx.latency) throw SelectionError("latency_aware needs a latency store");
    const std::size_t n = ctx.candidates.size();
    std::vector<std::vector<double>> perc(n);
    std::vector<bool> ok(n, true);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto m : metrics_) {
        const auto p = ctx.latency->percentile(ctx.candidates[i].model, m, percentile_);
        if (!p) {
          ok[i] = false;
          break;
        }
        perc[i].push_back(*p);
      }
    }
    std::vector<std::optional<double>> out(n);
    for (std::size_t k = 0; k < metrics_.size(); ++k) {
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (ok[i]) lo = std::min(lo, perc[i][k]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (!ok[i]) continue;
        const double ratio = lo > 0.0 ? perc[i][k] / lo : (perc[i][k] > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
        out[i] = out[i].value_or(0.0) + ratio / static_cast<double>(metrics_.size());
      }
    }
    return out;
  }

  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    const auto s = scores(ctx);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] && (!best || *s[i] < *s[*best])) best = i;
    }
    if (!best) throw SelectionError("latency_aware: no candidate has latency observations");
    return detail::pick(ctx, *best, 1.0 / *s[*best]);
  }

 private:
  std::vector<LatencyMetric> metrics_;
  double percentile_;
};

/// Single-shot selection names the first-round lead model; the multi-round
/// run goes through run_remom with params().
class RemomSelector final : public Selector {
 public:
  explicit RemomSelector(RemomParams params) : params_(std::move(params)) {}
  std::string_view id() const override { return "remom"; }
  const RemomParams& params() const { return params_; }

  Selection select(const SelectionContext& ctx) const override {
    detail::require_candidates(ctx);
    return detail::pick(ctx, 0, 1.0);
  }

 private:
  RemomParams params_;
};

// ---------------------------------------------------------------------------
// Registry

struct SelectorEnv {
  std::filesystem::path base_dir = ".";  // relative model_file paths resolve here
};

namespace detail {

inline model_file::Json model_json(const Json& params, const SelectorEnv& env, bool required) {
  auto it = params.find("model_file");
  if (it == params.end()) {
    if (required) throw SelectionError("algorithm needs a model_file");
    return nullptr;
  }
  std::filesystem::path p = it->get<std::string>();
  if (p.is_relative()) p = env.base_dir / p;
  return model_file::load_json(p);
}

inline void check_embeddings(const model_file::EmbeddingTable& t, std::span<const ModelRef> candidates) {
  for (const auto& c : candidates) {
    if (!t.embeddings.count(c.model)) throw SelectionError("model file has no embedding for candidate '" + c.model + "'");
  }
}

}  // namespace detail

/// Builds the selector for one decision. Model files load here, so a missing
/// embedding or a malformed table fails at load time.
inline std::unique_ptr<Selector> make_selector(const AlgorithmConfig& algo, std::span<const ModelRef> candidates,
                                               const SelectorEnv& env = {}) {
  const Json p = algo.params.is_object() ? algo.params : Json::object();
  const auto seed = static_cast<std::uint64_t>(p.value("seed", std::int64_t{0}));
  const std::string& t = algo.type;
  if (t == "static") return std::make_unique<StaticSelector>();
  if (t == "confidence") return std::make_unique<ConfidenceSelector>(p.value("threshold", 0.5));
  if (t == "elo") {
    auto state = std::make_shared<EloState>(p.value("k_factor", 32.0), p.value("initial_rating", 1500.0));
    const auto mode = p.value("mode", std::string("sample")) == "argmax" ? EloSelector::Mode::kArgmax
                                                                         : EloSelector::Mode::kSample;
    return std::make_unique<EloSelector>(std::move(state), mode, seed);
  }
  if (t == "routerdc") {
    auto table = model_file::EmbeddingTable::from_json(detail::model_json(p, env, true));
    detail::check_embeddings(table, candidates);
    return std::make_unique<RouterDcSelector>(std::move(table));
  }
  if (t == "hybrid") {
    std::optional<model_file::EmbeddingTable> table;
    if (auto j = detail::model_json(p, env, false); !j.is_null()) {
      table = model_file::EmbeddingTable::from_json(j);
      detail::check_embeddings(*table, candidates);
    }
    const double third = 1.0 / 3.0;
    return std::make_unique<HybridSelector>(p.value("alpha", third), p.value("beta", third), p.value("gamma", third),
                                            std::make_shared<EloState>(), std::move(table));
  }
  if (t == "automix") {
    return std::make_unique<AutomixSelector>(p.value("thresholds", std::vector<std::int64_t>{}));
  }
  if (t == "knn") {
    return std::make_unique<KnnSelector>(model_file::KnnTable::from_json(detail::model_json(p, env, true)),
                                         static_cast<std::size_t>(p.value("k", std::int64_t{5})));
  }
  if (t == "kmeans") {
    return std::make_unique<KmeansSelector>(model_file::KmeansTable::from_json(detail::model_json(p, env, true)),
                                            p.value("alpha", 0.5));
  }
  if (t == "mlp") {
    auto table = model_file::MlpTable::from_json(detail::model_json(p, env, true));
    for (const auto& c : candidates) {
      if (std::find(table.models.begin(), table.models.end(), c.model) == table.models.end()) {
        throw SelectionError("mlp model has no output for candidate '" + c.model + "'");
      }
    }
    return std::make_unique<MlpSelector>(std::move(table));
  }
  if (t == "thompson") return std::make_unique<ThompsonSelector>(std::make_shared<BetaState>(), seed);
  if (t == "latency_aware") {
    std::vector<LatencyMetric> metrics;
    for (const auto& m : p.value("metrics", std::vector<std::string>{"tpot"})) {
      metrics.push_back(m == "ttft" ? LatencyMetric::kTtft : LatencyMetric::kTpot);
    }
    return std::make_unique<LatencyAwareSelector>(std::move(metrics), p.value("percentile", 50.0));
  }
  if (t == "remom") {
    RemomParams r;
    r.breadth = p.value("breadth", std::vector<std::int64_t>{});
    r.distribution = parse_remom_distribution(p.value("distribution", std::string("equal")));
    r.compaction = p.value("compaction", std::string("full")) == "last_n_tokens" ? RemomCompaction::kLastNTokens
                                                                               : RemomCompaction::kFull;
    r.compaction_tokens = p.value("compaction_tokens", std::int64_t{512});
    r.temperature = p.value("temperature", 1.0);
    r.concurrency = p.value("concurrency", std::int64_t{8});
    r.template_text = p.value("template", std::string(kDefaultRemomTemplate));
    r.seed = seed;
    return std::make_unique<RemomSelector>(std::move(r));
  }
  if (t == "gmtrouter" || t == "svm") throw SelectionError("selection algorithm '" + t + "' is out of scope");
  throw SelectionError("unknown selection algorithm '" + t + "'");
}

/// One-shot dispatch by id with default parameters.
inline Selection select(std::string_view algorithm, const SelectionContext& ctx, const SelectorEnv& env = {}) {
  AlgorithmConfig a;
  a.type = std::string(algorithm);
  return make_selector(a, ctx.candidates, env)->select(ctx);
}

}  // namespace srouter
