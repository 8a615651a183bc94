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

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "srouter/selection/algorithms.hpp"

namespace srouter {
namespace {

namespace fs = std::filesystem;

ModelRef ref(std::string m, std::optional<double> score = {}, std::optional<double> cost = {}) {
  ModelRef r;
  r.model = std::move(m);
  r.score = score;
  r.cost = cost;
  return r;
}

SelectionContext ctx_of(std::vector<ModelRef> c, vec::Vector e = {}) {
  SelectionContext ctx;
  ctx.candidates = std::move(c);
  ctx.query_embedding = std::move(e);
  return ctx;
}

AlgorithmConfig algo(std::string type, Json params = Json::object()) {
  AlgorithmConfig a;
  a.type = std::move(type);
  a.params = std::move(params);
  return a;
}

/// Writes a model file into a per-test temp directory.
class ModelFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("srouter_sel_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const Json& j) {
    std::ofstream(dir_ / name) << j.dump();
    return name;
  }
  SelectorEnv env() const { return {dir_}; }

  fs::path dir_;
};

// ---------------------------------------------------------------------------
// Dispatch

TEST(Select, StaticPicksHighestScore) {
  const auto s = select("static", ctx_of({ref("a", 0.3), ref("b", 0.9)}));
  EXPECT_EQ(s.model, "b");
  EXPECT_EQ(s.confidence, 0.9);
  EXPECT_EQ(s.index, 1u);
}

TEST(Select, UnknownAndOutOfScopeIds) {
  try {
    select("gmtrouter", ctx_of({ref("a")}));
    FAIL();
  } catch (const SelectionError& e) {
    EXPECT_NE(std::string(e.what()).find("gmtrouter"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("out of scope"), std::string::npos);
  }
  EXPECT_THROW(select("nope", ctx_of({ref("a")})), SelectionError);
}

TEST(Select, EmptyCandidatesRejected) {
  for (const char* id : {"static", "confidence", "elo", "thompson", "automix", "remom"}) {
    EXPECT_THROW(select(id, ctx_of({})), SelectionError) << id;
  }
}

TEST_F(ModelFiles, SingleCandidateUnderEveryAlgorithm) {
  const vec::Vector e{1.0, 0.0};
  const std::string emb = write("emb.json", {{"embeddings", {{"only", {0.0, 1.0}}}}});
  const std::string knn =
      write("knn.json", {{"records", {{{"embedding", {0.5, 0.5}}, {"model", "only"}, {"quality", 0.2}}}}});
  const std::string km = write(
      "km.json", {{"centroids", {{0.0, 0.0}}}, {"clusters", {{{"only", {{"quality", 0.1}, {"latency", 9.0}}}}}}});
  const std::string mlp = write(
      "mlp.json", {{"models", {"only"}}, {"layers", {{{"weights", {{0.3, -0.2}}}, {"bias", {0.0}}}}}});
  LatencyStore lat;
  lat.observe("only", LatencyMetric::kTpot, 5.0);
  const std::map<std::string, Json> params{
      {"static", Json::object()},
      {"confidence", Json::object()},
      {"elo", Json::object()},
      {"routerdc", {{"model_file", emb}}},
      {"hybrid", {{"model_file", emb}}},
      {"automix", Json::object()},
      {"knn", {{"model_file", knn}}},
      {"kmeans", {{"model_file", km}}},
      {"mlp", {{"model_file", mlp}}},
      {"thompson", Json::object()},
      {"latency_aware", Json::object()},
      {"remom", Json::object()},
  };
  ASSERT_EQ(params.size(), kAlgorithmIds.size());
  std::vector<ModelRef> cands{ref("only")};
  for (const auto& [id, p] : params) {
    auto sel = make_selector(algo(id, p), cands, env());
    auto ctx = ctx_of(cands, e);
    ctx.latency = &lat;
    const auto s = sel->select(ctx);
    EXPECT_EQ(s.model, "only") << id;
    EXPECT_GE(s.confidence, 0.0) << id;
    EXPECT_LE(s.confidence, 1.0) << id;
  }
}

TEST(Select, ConfidenceCascadesOnScore) {
  ConfidenceSelector sel(0.5);
  EXPECT_EQ(sel.select(ctx_of({ref("a", 0.4), ref("b", 0.6), ref("c", 0.9)})).model, "b");
  EXPECT_EQ(sel.select(ctx_of({ref("a", 0.1), ref("b", 0.2)})).model, "b");
  auto ctx = ctx_of({ref("big"), ref("small")});
  ctx.decision_confidence = 0.7;
  EXPECT_EQ(sel.select(ctx).model, "big");
  ctx.decision_confidence = 0.3;
  EXPECT_EQ(sel.select(ctx).model, "small");
}

// ---------------------------------------------------------------------------
// Elo

TEST(Elo, WinProbabilityValues) {
  EXPECT_EQ(elo_win_probability(1500, 1500), 0.5);
  EXPECT_NEAR(elo_win_probability(1900, 1500), 10.0 / 11.0, 1e-12);
  EXPECT_NEAR(elo_win_probability(1500, 1900), 1.0 / 11.0, 1e-12);
}

TEST(Elo, ComplementOnRandomPairs) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> r(0.0, 3000.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = r(rng), b = r(rng);
    ASSERT_NEAR(elo_win_probability(a, b) + elo_win_probability(b, a), 1.0, 1e-12);
  }
}

TEST(Elo, UpdatesConserveRatingSum) {
  EloState s;
  std::mt19937_64 rng(2);
  const std::vector<std::string> m{"a", "b", "c", "d"};
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  for (int i = 0; i < 1000; ++i) {
    const auto x = pick(rng), y = pick(rng);
    if (x == y) continue;
    s.record(m[x], m[y], (i % 3) * 0.5);
  }
  double sum = 0.0;
  for (double r : s.ratings(m)) sum += r;
  EXPECT_NEAR(sum, 4 * 1500.0, 1e-8);
}

TEST(Elo, KFactorUpdate) {
  EloState s(32.0);
  s.record("a", "b", 1.0);
  EXPECT_DOUBLE_EQ(s.rating("a"), 1516.0);
  EXPECT_DOUBLE_EQ(s.rating("b"), 1484.0);
}

TEST(Elo, ExpectedWinRatesMatchPairwiseMean) {
  const std::vector<double> r{1500, 1700, 1300};
  const auto w = expected_win_rates(r);
  const auto p = [](double a, double b) { return 1.0 / (1.0 + std::pow(10.0, (b - a) / 400.0)); };
  EXPECT_NEAR(w[0], (p(1500, 1700) + p(1500, 1300)) / 2, 1e-12);
  EXPECT_NEAR(w[1], (p(1700, 1500) + p(1700, 1300)) / 2, 1e-12);
  EXPECT_NEAR(w[0] + w[1] + w[2], 1.5, 1e-12);  // pairs sum to 1, n(n-1)/2 pairs over n-1
}

TEST(Elo, SamplingFollowsWinRates) {
  auto state = std::make_shared<EloState>();
  state->set_rating("a", 1700);
  state->set_rating("b", 1500);
  EloSelector sel(state, EloSelector::Mode::kSample, 3);
  const auto ctx = ctx_of({ref("a"), ref("b")});
  const int n = 20000;
  int a = 0;
  for (int i = 0; i < n; ++i) a += sel.select(ctx).model == "a";
  const double p = elo_win_probability(1700, 1500) / (elo_win_probability(1700, 1500) + elo_win_probability(1500, 1700));
  EXPECT_NEAR(a / double(n), p, 3 * std::sqrt(p * (1 - p) / n));
  EloSelector arg(state, EloSelector::Mode::kArgmax, 0);
  EXPECT_EQ(arg.select(ctx).model, "a");
}

TEST(Elo, FeedbackMovesRatings) {
  auto sel = make_selector(algo("elo", {{"mode", "argmax"}}), std::vector<ModelRef>{ref("a"), ref("b")});
  const auto ctx = ctx_of({ref("a"), ref("b")});
  EXPECT_EQ(sel->select(ctx).model, "a");
  sel->feedback({"b", "a", true});
  EXPECT_EQ(sel->select(ctx).model, "b");
  EXPECT_THROW(sel->feedback({"b", std::nullopt, true}), SelectionError);
}

// ---------------------------------------------------------------------------
// Embedding selectors

model_file::EmbeddingTable table_of(std::map<std::string, vec::Vector> m) {
  Json j = Json::object();
  for (auto& [k, v] : m) j["embeddings"][k] = v;
  return model_file::EmbeddingTable::from_json(j);
}

TEST(RouterDc, IdentityAndHandSetCosines) {
  const auto t = table_of({{"a", {0.1, std::sqrt(1 - 0.01), 0}},
                           {"b", {0.7, std::sqrt(1 - 0.49), 0}},
                           {"c", {0.3, 0, std::sqrt(1 - 0.09)}}});
  RouterDcSelector sel(t);
  const vec::Vector q{1, 0, 0};
  // brute-force dot products
  std::vector<double> dots;
  for (const char* m : {"a", "b", "c"}) {
    double d = 0;
    for (int i = 0; i < 3; ++i) d += q[i] * t.at(m)[i];
    dots.push_back(d);
  }
  EXPECT_NEAR(dots[0], 0.1, 1e-12);
  EXPECT_NEAR(dots[1], 0.7, 1e-12);
  const auto s = sel.select(ctx_of({ref("a"), ref("b"), ref("c")}, q));
  EXPECT_EQ(s.model, "b");
  EXPECT_NEAR(s.confidence, 0.7, 1e-12);
  EXPECT_EQ(sel.select(ctx_of({ref("a"), ref("b"), ref("c")}, t.at("c"))).model, "c");
}

TEST(RouterDc, OrthogonalTiesGoToCandidateOrder) {
  RouterDcSelector sel(table_of({{"a", {0, 1, 0}}, {"b", {0, 0, 1}}}));
  const auto s = sel.select(ctx_of({ref("b"), ref("a")}, {1, 0, 0}));
  EXPECT_EQ(s.model, "b");
  EXPECT_EQ(s.confidence, 0.0);
}

TEST_F(ModelFiles, RouterDcMissingEmbeddingFailsAtLoad) {
  const auto f = write("emb.json", {{"embeddings", {{"a", {1, 0}}}}});
  EXPECT_THROW(make_selector(algo("routerdc", {{"model_file", f}}), std::vector<ModelRef>{ref("a"), ref("b")}, env()),
               SelectionError);
  EXPECT_THROW(make_selector(algo("routerdc", {{"model_file", "absent.json"}}), std::vector<ModelRef>{ref("a")}, env()),
               SelectionError);
}

TEST(Hybrid, BetaOneReducesToRouterDc) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    std::map<std::string, vec::Vector> m;
    std::vector<ModelRef> c;
    for (int k = 0; k < 4; ++k) {
      m["m" + std::to_string(k)] = {g(rng), g(rng), g(rng)};
      c.push_back(ref("m" + std::to_string(k), {}, std::abs(g(rng))));
    }
    const auto t = table_of(m);
    auto elo = std::make_shared<EloState>();
    elo->set_rating("m0", 1500 + 300 * g(rng));
    HybridSelector h(0, 1, 0, elo, t);
    const auto ctx = ctx_of(c, vec::normalized({g(rng), g(rng), g(rng)}));
    EXPECT_EQ(h.select(ctx).model, RouterDcSelector(t).select(ctx).model);
  }
}

TEST(Hybrid, GammaOnePicksCheapest) {
  HybridSelector h(0, 0, 1, std::make_shared<EloState>(), std::nullopt);
  EXPECT_EQ(h.select(ctx_of({ref("a", {}, 3.0), ref("b", {}, 0.5), ref("c", {}, 2.0)})).model, "b");
  auto ctx = ctx_of({ref("a", {}, 3.0), ref("b", {}, 0.5)});
  ctx.costs["a"] = 0.1;
  EXPECT_EQ(h.select(ctx).model, "a");
}

TEST(Hybrid, EqualWeightsTabulated) {
  // ratings 1600/1500/1400 -> R~ (1, .5, 0); cos (0, .8, .6); cost 1/2/4 -> c~ (0, 1/3, 1)
  // scores: (1+0+1)/3 = .667, (.5+.8+2/3)/3 = .656, (0+.6+0)/3 = .2
  auto elo = std::make_shared<EloState>();
  elo->set_rating("a", 1600);
  elo->set_rating("b", 1500);
  elo->set_rating("c", 1400);
  const auto t = table_of({{"a", {0, 1}}, {"b", {0.8, 0.6}}, {"c", {0.6, 0.8}}});
  const double w = 1.0 / 3.0;
  HybridSelector h(w, w, w, elo, t);
  const auto ctx = ctx_of({ref("a", {}, 1), ref("b", {}, 2), ref("c", {}, 4)}, {1, 0});
  const auto s = h.scores(ctx);
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s[1], (0.5 + 0.8 + 2.0 / 3.0) / 3.0, 1e-12);
  EXPECT_NEAR(s[2], 0.2, 1e-12);
  EXPECT_EQ(h.select(ctx).model, "a");
}

TEST(Hybrid, ConstantVectorsNormalizeToHalf) {
  HybridSelector h(0.5, 0, 0.5, std::make_shared<EloState>(), std::nullopt);
  const auto s = h.scores(ctx_of({ref("a", {}, 2), ref("b", {}, 2)}));
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
  EXPECT_THROW(HybridSelector(0, 1, 0, std::make_shared<EloState>(), std::nullopt), SelectionError);
}

// ---------------------------------------------------------------------------
// AutoMix

TEST(Automix, ExpectedCostValues) {
  EXPECT_DOUBLE_EQ(expected_cost({0.8}, {1, 10}), 3.0);
  EXPECT_DOUBLE_EQ(expected_cost({1.0}, {1, 10}), 1.0);
  EXPECT_DOUBLE_EQ(expected_cost({0.5, 0.5, 0.9}, {1, 2, 4}), 1 + 0.5 * 2 + 0.25 * 4);
  EXPECT_THROW(expected_cost({}, {}), SelectionError);
  EXPECT_THROW(expected_cost({}, {1, 2, 3}), SelectionError);
}

TEST(Automix, RaisingPassProbabilityNeverIncreasesCost) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + i % 4;
    std::vector<double> p(k - 1), c(k);
    for (auto& x : p) x = u(rng);
    for (auto& x : c) x = 10 * u(rng);
    const double before = expected_cost(p, c);
    p[i % (k - 1)] = std::min(1.0, p[i % (k - 1)] + u(rng) * 0.5);
    EXPECT_LE(expected_cost(p, c), before + 1e-12);
  }
}

TEST(Automix, ClosedFormMatchesMonteCarlo) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u;
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t k = 2 + inst % 3;
    std::vector<double> p(k), c(k);
    for (auto& x : p) x = u(rng);
    for (auto& x : c) x = 1 + 9 * u(rng);
    const int trials = 100000;
    double sum = 0, sq = 0;
    for (int t = 0; t < trials; ++t) {
      double cost = 0;
      for (std::size_t s = 0; s < k; ++s) {
        cost += c[s];
        if (s + 1 == k || u(rng) < p[s]) break;
      }
      sum += cost;
      sq += cost * cost;
    }
    const double mean = sum / trials;
    const double sd = std::sqrt(std::max(0.0, sq / trials - mean * mean));
    EXPECT_NEAR(expected_cost(p, c), mean, 3 * sd / std::sqrt(double(trials)) + 1e-9);
  }
}

TEST(Automix, CascadeEscalatesUntilVerified) {
  const std::vector<std::string> models{"small", "mid", "large"};
  const auto gen = [](std::size_t, const std::string& m) { return m == "small" ? std::string("ok") : std::string(40, 'x'); };
  auto r = run_cascade(models, gen, length_verifier({10, 10}));
  EXPECT_EQ(r.model, "mid");
  EXPECT_EQ(r.attempted, (std::vector<std::string>{"small", "mid"}));
  r = run_cascade(models, gen, [](std::size_t, const std::string&) { return false; });
  EXPECT_EQ(r.model, "large");
  EXPECT_EQ(r.attempted.size(), 3u);
  EXPECT_THROW(run_cascade({}, gen, length_verifier({})), SelectionError);
}

// ---------------------------------------------------------------------------
// Classical ML

model_file::KnnTable knn_table(std::vector<std::tuple<vec::Vector, std::string, double>> rows) {
  Json j;
  j["records"] = Json::array();
  for (auto& [e, m, q] : rows) j["records"].push_back({{"embedding", e}, {"model", m}, {"quality", q}});
  return model_file::KnnTable::from_json(j);
}

TEST(Knn, NearestRecordIdentity) {
  KnnSelector sel(knn_table({{{0, 0}, "a", 1}, {{1, 0}, "b", 1}, {{0, 1}, "c", 1}}), 1);
  EXPECT_EQ(sel.select(ctx_of({ref("a"), ref("b"), ref("c")}, {1, 0})).model, "b");
}

TEST(Knn, QualityWeightedVote) {
  const auto t = knn_table({{{0.1, 0}, "m1", 0.9}, {{0, 0.1}, "m2", 0.4}, {{0.1, 0.1}, "m2", 0.4}, {{5, 5}, "m2", 1}});
  KnnSelector sel(t, 3);
  const auto ctx = ctx_of({ref("m1"), ref("m2")}, {0, 0});
  // Oracle: sort by squared norm, sum qualities of the three nearest.
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    double s = 0;
    for (double x : t.records[i].features) s += x * x;
    d.push_back({s, i});
  }
  std::sort(d.begin(), d.end());
  double m1 = 0, m2 = 0;
  for (int i = 0; i < 3; ++i) (t.records[d[i].second].model == "m1" ? m1 : m2) += t.records[d[i].second].quality;
  EXPECT_NEAR(m1, 0.9, 1e-12);
  EXPECT_NEAR(m2, 0.8, 1e-12);
  const auto s = sel.select(ctx);
  EXPECT_EQ(s.model, "m1");
  EXPECT_NEAR(s.confidence, 0.9 / 1.7, 1e-12);
}

TEST(Knn, KClampsToStoreSize) {
  KnnSelector sel(knn_table({{{0, 0}, "a", 0.2}, {{9, 9}, "b", 0.5}}), 50);
  EXPECT_EQ(sel.select(ctx_of({ref("a"), ref("b")}, {0, 0})).model, "b");
  EXPECT_THROW(KnnSelector(knn_table({}), 1), SelectionError);
}

TEST(Knn, DomainOneHotJoinsFeatures) {
  Json j;
  j["domains"] = {"math", "law"};
  j["records"] = {{{"embedding", {0, 0}}, {"domain", "math"}, {"model", "a"}, {"quality", 1}},
                  {{"embedding", {0, 0}}, {"domain", "law"}, {"model", "b"}, {"quality", 1}}};
  KnnSelector sel(model_file::KnnTable::from_json(j), 1);
  auto ctx = ctx_of({ref("a"), ref("b")}, {0, 0});
  ctx.domain = "law";
  EXPECT_EQ(sel.select(ctx).model, "b");
  ctx.domain = "math";
  EXPECT_EQ(sel.select(ctx).model, "a");
}

model_file::KmeansTable two_clusters() {
  return model_file::KmeansTable::from_json(
      {{"centroids", {{0, 0}, {10, 10}}},
       {"clusters",
        {{{"a", {{"quality", 0.9}, {"latency", 100}}}, {"b", {{"quality", 0.5}, {"latency", 10}}}},
         {{"a", {{"quality", 0.6}, {"latency", 50}}},
          {"b", {{"quality", 0.8}, {"latency", 200}}},
          {"c", {{"quality", 0.7}, {"latency", 100}}}}}}});
}

TEST(Kmeans, AlphaExtremes) {
  const auto ctx = ctx_of({ref("a"), ref("b")}, {0.5, 0.5});
  EXPECT_EQ(KmeansSelector(two_clusters(), 1.0).select(ctx).model, "a");
  EXPECT_EQ(KmeansSelector(two_clusters(), 0.0).select(ctx).model, "b");
}

TEST(Kmeans, HandComputedWinnerInSecondCluster) {
  // cluster 2, latencies 50/200/100 -> (0, 1, 1/3); alpha .5:
  // a .5*.6 - 0 = .30; b .5*.8 - .5 = -.10; c .5*.7 - .5/3 = .1833
  KmeansSelector sel(two_clusters(), 0.5);
  const auto ctx = ctx_of({ref("a"), ref("b"), ref("c")}, {9, 9});
  const auto s = sel.select(ctx);
  EXPECT_EQ(s.model, "a");
  EXPECT_NEAR(s.confidence, 0.30, 1e-12);
}

TEST(Kmeans, MissingStatsSkipped) {
  KmeansSelector sel(two_clusters(), 0.5);
  EXPECT_EQ(sel.select(ctx_of({ref("c"), ref("b")}, {0, 0})).model, "b");
  EXPECT_THROW(sel.select(ctx_of({ref("c")}, {0, 0})), SelectionError);
}

TEST(Mlp, ZeroWeightsGiveUniform) {
  const auto t = model_file::MlpTable::from_json(
      {{"models", {"a", "b", "c"}},
       {"layers",
        {{{"weights", {{0, 0}, {0, 0}}}, {"bias", {0, 0}}},
         {{"weights", {{0, 0}, {0, 0}}}, {"bias", {0, 0}}},
         {{"weights", {{0, 0}, {0, 0}, {0, 0}}}, {"bias", {0, 0, 0}}}}}});
  const auto s = MlpSelector(t).select(ctx_of({ref("a"), ref("b"), ref("c")}, {0.3, 0.7}));
  EXPECT_EQ(s.model, "a");
  EXPECT_NEAR(s.confidence, 1.0 / 3.0, 1e-12);
}

TEST(Mlp, CraftedWeightsFavorSecondModel) {
  // f = (1, 0); W1 = I -> h = (1, 0); W2 = [[0, 0], [3, 0]] -> logits (0, 3)
  const auto t = model_file::MlpTable::from_json({{"models", {"m1", "m2"}},
                                                  {"layers",
                                                   {{{"weights", {{1, 0}, {0, 1}}}, {"bias", {0, 0}}},
                                                    {{"weights", {{0, 0}, {3, 0}}}, {"bias", {0, 0}}}}}});
  const auto s = MlpSelector(t).select(ctx_of({ref("m1"), ref("m2")}, {1, 0}));
  EXPECT_EQ(s.model, "m2");
  EXPECT_NEAR(s.confidence, std::exp(3.0) / (1.0 + std::exp(3.0)), 1e-12);
}

TEST(Mlp, SoftmaxSumsToOne) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0, 3);
  for (int i = 0; i < 100; ++i) {
    Json layers = Json::array();
    const std::vector<std::size_t> dims{3, 5, 4, 3};
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      Json w = Json::array(), b = Json::array();
      for (std::size_t o = 0; o < dims[l + 1]; ++o) {
        Json row = Json::array();
        for (std::size_t in = 0; in < dims[l]; ++in) row.push_back(g(rng));
        w.push_back(row);
        b.push_back(g(rng));
      }
      layers.push_back({{"weights", w}, {"bias", b}});
    }
    MlpSelector sel(model_file::MlpTable::from_json({{"models", {"a", "b", "c"}}, {"layers", layers}}));
    const auto p = sel.probabilities(ctx_of({ref("a"), ref("b"), ref("c")}, {g(rng), g(rng), g(rng)}));
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-9);
  }
}

TEST(Mlp, DimensionMismatchRejectedAtLoad) {
  EXPECT_THROW(model_file::MlpTable::from_json({{"models", {"a"}},
                                                {"layers",
                                                 {{{"weights", {{1, 0}}}, {"bias", {0}}},
                                                  {{"weights", {{1, 0}}}, {"bias", {0}}}}}}),
               SelectionError);
  EXPECT_THROW(model_file::MlpTable::from_json(
                   {{"models", {"a", "b"}}, {"layers", {{{"weights", {{1, 0}}}, {"bias", {0}}}}}}),
               SelectionError);
}

// ---------------------------------------------------------------------------
// Thompson

TEST(Thompson, ConjugateCounting) {
  BetaState s;
  for (bool ok : {true, true, false, true}) s.update("m", ok);
  EXPECT_EQ(s.get("m"), (BetaParams{4, 2}));
  EXPECT_NEAR(s.get("m").mean(), 2.0 / 3.0, 1e-12);
}

TEST(Thompson, DegeneratePriorDominates) {
  auto state = std::make_shared<BetaState>();
  state->set("a", {1000, 1});
  state->set("b", {1, 1000});
  ThompsonSelector sel(state, 21);
  const auto ctx = ctx_of({ref("a"), ref("b")});
  int a = 0;
  for (int i = 0; i < 10000; ++i) a += sel.select(ctx).model == "a";
  EXPECT_GE(a, 9900);
}

TEST(Thompson, SymmetricStatesSelectUniformly) {
  ThompsonSelector sel(std::make_shared<BetaState>(), 22);
  const auto ctx = ctx_of({ref("a"), ref("b"), ref("c")});
  const int n = 10000;
  std::map<std::string, int> f;
  for (int i = 0; i < n; ++i) ++f[sel.select(ctx).model];
  const double p = 1.0 / 3, sigma = std::sqrt(n * p * (1 - p));
  for (const auto& [m, k] : f) EXPECT_NEAR(k, n * p, 3 * sigma) << m;
}

TEST(Thompson, ConvergesToBetterArm) {
  ThompsonSelector sel(std::make_shared<BetaState>(), 23);
  std::mt19937_64 env(24);
  std::bernoulli_distribution good(0.8), bad(0.5);
  const auto ctx = ctx_of({ref("bad"), ref("good")});
  int best = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto m = sel.select(ctx).model;
    best += m == "good";
    sel.feedback({m, std::nullopt, m == "good" ? good(env) : bad(env)});
  }
  EXPECT_GT(best / 1000.0, 0.5);
}

TEST(Thompson, SeededCallsAreDeterministic) {
  ThompsonSelector a(std::make_shared<BetaState>(), 1), b(std::make_shared<BetaState>(), 999);
  auto ctx = ctx_of({ref("x"), ref("y"), ref("z")});
  ctx.seed = 77;
  EXPECT_EQ(a.select(ctx).model, b.select(ctx).model);
  EXPECT_EQ(a.select(ctx).confidence, b.select(ctx).confidence);
}

// ---------------------------------------------------------------------------
// Latency

TEST(Latency, NearestRankPercentile) {
  EXPECT_EQ(nearest_rank_percentile({7}, 1), 7);
  EXPECT_EQ(nearest_rank_percentile({7}, 100), 7);
  EXPECT_EQ(nearest_rank_percentile({15, 20, 35, 40, 50}, 30), 20);
  EXPECT_EQ(nearest_rank_percentile({15, 20, 35, 40, 50}, 40), 20);
  EXPECT_EQ(nearest_rank_percentile({15, 20, 35, 40, 50}, 50), 35);
  EXPECT_EQ(nearest_rank_percentile({15, 20, 35, 40, 50}, 100), 50);
  EXPECT_THROW(nearest_rank_percentile({}, 50), SelectionError);
  EXPECT_THROW(nearest_rank_percentile({1}, 0), SelectionError);
}

TEST(Latency, WindowEvictsOldest) {
  LatencyStore s(3);
  for (double v : {100.0, 1.0, 2.0, 3.0}) s.observe("m", LatencyMetric::kTpot, v);
  EXPECT_EQ(s.count("m", LatencyMetric::kTpot), 3u);
  EXPECT_EQ(*s.percentile("m", LatencyMetric::kTpot, 100), 3.0);
  EXPECT_FALSE(s.percentile("m", LatencyMetric::kTtft, 50));
}

TEST(Latency, ScoresAreRatiosToBest) {
  LatencyStore s;
  s.observe("m1", LatencyMetric::kTpot, 10);
  s.observe("m2", LatencyMetric::kTpot, 20);
  LatencyAwareSelector sel({LatencyMetric::kTpot}, 50);
  auto ctx = ctx_of({ref("m1"), ref("m2")});
  ctx.latency = &s;
  const auto sc = sel.scores(ctx);
  EXPECT_DOUBLE_EQ(*sc[0], 1.0);
  EXPECT_DOUBLE_EQ(*sc[1], 2.0);
  const auto pick = sel.select(ctx);
  EXPECT_EQ(pick.model, "m1");
  EXPECT_DOUBLE_EQ(pick.confidence, 1.0);
}

TEST(Latency, TwoMetricsAndExclusion) {
  LatencyStore s;
  s.observe("m1", LatencyMetric::kTpot, 10);
  s.observe("m1", LatencyMetric::kTtft, 100);
  s.observe("m2", LatencyMetric::kTpot, 15);
  s.observe("m2", LatencyMetric::kTtft, 300);
  s.observe("m3", LatencyMetric::kTpot, 1);  // no ttft window
  LatencyAwareSelector sel({LatencyMetric::kTpot, LatencyMetric::kTtft}, 50);
  auto ctx = ctx_of({ref("m1"), ref("m2"), ref("m3")});
  ctx.latency = &s;
  const auto sc = sel.scores(ctx);
  EXPECT_DOUBLE_EQ(*sc[0], 1.0);
  EXPECT_DOUBLE_EQ(*sc[1], (1.5 + 3.0) / 2);
  EXPECT_FALSE(sc[2]);
  EXPECT_EQ(sel.select(ctx).model, "m1");
  auto none = ctx_of({ref("m3")});
  none.latency = &s;
  EXPECT_THROW(sel.select(none), SelectionError);
}

TEST(Latency, SlowerObservationsForLoserKeepWinner) {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> u(1, 100);
  for (int t = 0; t < 200; ++t) {
    LatencyStore s;
    for (const char* m : {"a", "b", "c"}) {
      for (int i = 0; i < 5; ++i) s.observe(m, LatencyMetric::kTpot, u(rng));
    }
    LatencyAwareSelector sel({LatencyMetric::kTpot}, 90);
    auto ctx = ctx_of({ref("a"), ref("b"), ref("c")});
    ctx.latency = &s;
    const auto before = sel.select(ctx).model;
    const std::string loser = before == "a" ? "b" : "a";
    for (int i = 0; i < 10; ++i) s.observe(loser, LatencyMetric::kTpot, 1000 + u(rng));
    EXPECT_EQ(sel.select(ctx).model, before);
  }
}

// ---------------------------------------------------------------------------
// ReMoM

TEST(Remom, Schedule) {
  EXPECT_EQ(remom_schedule({32, 4}), (std::vector<std::int64_t>{32, 4, 1}));
  EXPECT_EQ(remom_schedule({}), (std::vector<std::int64_t>{1}));
  EXPECT_THROW(remom_schedule({3, 0}), SelectionError);
}

TEST(Remom, Distribution) {
  EXPECT_EQ(remom_distribute(4, 3, RemomDistribution::kEqual), (std::vector<std::int64_t>{2, 1, 1}));
  EXPECT_EQ(remom_distribute(4, 3, RemomDistribution::kWeighted), (std::vector<std::int64_t>{2, 1, 1}));
  EXPECT_EQ(remom_distribute(3, 3, RemomDistribution::kFirstOnly), (std::vector<std::int64_t>{3, 0, 0}));
  const auto plan = remom_plan(3, 3, RemomDistribution::kFirstOnly, 100);
  std::set<std::uint64_t> seeds;
  for (const auto& p : plan) {
    EXPECT_EQ(p.candidate, 0u);
    seeds.insert(p.seed);
  }
  EXPECT_EQ(seeds, (std::set<std::uint64_t>{100, 101, 102}));
}

TEST(Remom, DistributionConservesCalls) {
  for (std::int64_t b = 1; b <= 64; ++b) {
    for (std::size_t n = 1; n <= 7; ++n) {
      for (auto d : {RemomDistribution::kEqual, RemomDistribution::kFirstOnly}) {
        const auto c = remom_distribute(b, n, d);
        std::int64_t sum = 0, lo = b, hi = 0;
        for (auto x : c) {
          sum += x;
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
        EXPECT_EQ(sum, b);
        if (d == RemomDistribution::kEqual) {
          EXPECT_LE(hi - lo, 1);
        }
      }
    }
  }
}

TEST(Remom, PromptFullAndCompacted) {
  const auto p = remom_synthesis_prompt("Q?", {{"first answer", ""}, {"second answer", ""}});
  EXPECT_NE(p.find("Q?"), std::string::npos);
  EXPECT_NE(p.find("[1]\nfirst answer"), std::string::npos);
  EXPECT_NE(p.find("[2]\nsecond answer"), std::string::npos);
  EXPECT_EQ(compact_response("abcdefghijklmnopqrst", RemomCompaction::kLastNTokens, 2), "mnopqrst");
  EXPECT_EQ(compact_response("short", RemomCompaction::kLastNTokens, 2), "short");
  EXPECT_EQ(compact_response("abcdefghijklmnopqrst", RemomCompaction::kFull, 2), "abcdefghijklmnopqrst");
  const auto c = remom_synthesis_prompt("Q", {{"abcdefghijklmnopqrst", ""}}, kDefaultRemomTemplate,
                                        RemomCompaction::kLastNTokens, 2);
  EXPECT_EQ(c.find("abcdefghijkl"), std::string::npos);
  EXPECT_NE(c.find("mnopqrst"), std::string::npos);
  EXPECT_THROW(remom_synthesis_prompt("Q", {}), SelectionError);
}

TEST(Remom, TemplateReasoningSectionAndErrors) {
  const std::string t = "{{query}}|{{#references}}{{index}}:{{response}}{{#reasoning}}({{reasoning}}){{/reasoning}};{{/references}}";
  EXPECT_EQ(remom_synthesis_prompt("q", {{"a", "r"}, {"b", ""}}, t), "q|1:a(r);2:b;");
  try {
    remom_synthesis_prompt("q", {{"a", ""}}, "ok {{bogus}}");
    FAIL();
  } catch (const SelectionError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 3"), std::string::npos);
  }
  EXPECT_THROW(remom_synthesis_prompt("q", {{"a", ""}}, "{{#references}}x"), SelectionError);
  EXPECT_THROW(remom_synthesis_prompt("q", {{"a", ""}}, "{{query"), SelectionError);
}

TEST(Remom, RunMakesScheduledCallsInOrder) {
  RemomParams params;
  params.breadth = {32, 4};
  params.concurrency = 4;
  std::atomic<int> calls{0}, in_flight{0}, peak{0};
  const auto invoke = [&](const RemomCall& c) {
    const int now = ++in_flight;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    ++calls;
    std::this_thread::sleep_for(std::chrono::microseconds(200));
    --in_flight;
    return RemomReference{c.model + "#" + std::to_string(c.round) + "." + std::to_string(c.index), ""};
  };
  const auto r = run_remom("question", {"a", "b", "c"}, params, invoke);
  EXPECT_EQ(calls.load(), 37);
  EXPECT_EQ(r.calls, 37u);
  EXPECT_LE(peak.load(), 4);
  ASSERT_EQ(r.rounds.size(), 3u);
  EXPECT_EQ(r.rounds[0].size(), 32u);
  EXPECT_EQ(r.rounds[1].size(), 4u);
  for (std::size_t i = 0; i < r.rounds[0].size(); ++i) {
    EXPECT_NE(r.rounds[0][i].response.find("#0." + std::to_string(i)), std::string::npos);
  }
  EXPECT_EQ(r.response, "a#2.0");
}

TEST(Remom, RunPropagatesUpstreamErrors) {
  RemomParams params;
  params.breadth = {3};
  EXPECT_THROW(run_remom("q", {"a"}, params,
                         [](const RemomCall& c) -> RemomReference {
                           if (c.index == 1) throw Error("upstream down");
                           return {"x", ""};
                         }),
               Error);
}

TEST(Registry, BuildsFromLoadedParams) {
  auto s = make_selector(algo("remom", {{"breadth", {2, 2}}, {"distribution", "first_only"}, {"seed", 5}}),
                         std::vector<ModelRef>{ref("a")});
  const auto* r = dynamic_cast<const RemomSelector*>(s.get());
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->params().breadth, (std::vector<std::int64_t>{2, 2}));
  EXPECT_EQ(r->params().distribution, RemomDistribution::kFirstOnly);
  EXPECT_EQ(r->params().seed, 5u);
  auto a = make_selector(algo("automix", {{"thresholds", {5, 9}}}), std::vector<ModelRef>{ref("a")});
  EXPECT_EQ(dynamic_cast<const AutomixSelector&>(*a).thresholds(), (std::vector<std::int64_t>{5, 9}));
}

}  // namespace
}  // namespace srouter
