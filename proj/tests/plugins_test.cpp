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

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "srouter/plugins/chain.hpp"
#include "support/table_embedder.hpp"

namespace srouter {
namespace {

using namespace std::chrono_literals;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CompletionMeta golden_meta() { return {"chatcmpl-golden", 1700000000, "srouter"}; }

/// Splits an SSE body into `data:` payloads, checking the framing.
std::vector<std::string> sse_events(const std::string& body) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto end = body.find("\n\n", pos);
    EXPECT_NE(end, std::string::npos);
    const std::string ev = body.substr(pos, end - pos);
    EXPECT_EQ(ev.rfind("data: ", 0), 0u) << ev;
    out.push_back(ev.substr(6));
    pos = end + 2;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fast response

TEST(FastResponse, DocumentMatchesGolden) {
  const auto sc = fast_response(golden_meta(), "Request blocked.", false);
  EXPECT_EQ(sc.body, read_file(std::string(SROUTER_TEST_DATA) + "/golden/fast_response.json"));
  const auto j = nlohmann::json::parse(sc.body);
  EXPECT_EQ(j["choices"][0]["finish_reason"], "stop");
  EXPECT_EQ(j["choices"][0]["message"]["content"], "Request blocked.");
  EXPECT_EQ(sc.content_type, "application/json");
}

TEST(FastResponse, StreamMatchesGolden) {
  const auto sc = fast_response(golden_meta(), "Request blocked by policy.", true);
  EXPECT_EQ(sc.content_type, "text/event-stream");
  EXPECT_EQ(sc.body, read_file(std::string(SROUTER_TEST_DATA) + "/golden/fast_response_stream.sse"));
}

TEST(FastResponse, TwoWordsGiveFiveEvents) {
  const auto events = sse_events(fast_response(golden_meta(), "a b", true).body);
  ASSERT_EQ(events.size(), 5u);
  EXPECT_EQ(nlohmann::json::parse(events[0])["choices"][0]["delta"]["role"], "assistant");
  std::string text;
  for (std::size_t i = 1; i <= 2; ++i) {
    const auto j = nlohmann::json::parse(events[i]);
    EXPECT_EQ(j["object"], "chat.completion.chunk");
    EXPECT_TRUE(j["choices"][0]["finish_reason"].is_null());
    text += j["choices"][0]["delta"]["content"].get<std::string>();
  }
  EXPECT_EQ(text, "a b");
  EXPECT_EQ(nlohmann::json::parse(events[3])["choices"][0]["finish_reason"], "stop");
  EXPECT_EQ(events[4], "[DONE]");
}

TEST(FastResponse, EmptyMessageGivesThreeEvents) {
  const auto events = sse_events(fast_response(golden_meta(), "", true).body);
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[2], "[DONE]");
}

TEST(FastResponse, EventCountIsWordsPlusThree) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int words = static_cast<int>(rng() % 12);
    std::string msg;
    for (int w = 0; w < words; ++w) msg += std::string(1 + rng() % 3, ' ') + "w" + std::to_string(w);
    EXPECT_EQ(sse_events(fast_response(golden_meta(), msg, true).body).size(), static_cast<std::size_t>(words + 3));
  }
}

// ---------------------------------------------------------------------------
// Semantic cache

std::shared_ptr<const Embedder> trigram() { return std::make_shared<HashedTrigramEmbedder>(); }

TEST(SemanticCache, EmptyStoreMissRegistersPending) {
  SemanticCache c(trigram());
  const auto r = c.lookup("what is the capital of France?", 0.92);
  EXPECT_FALSE(r.hit);
  EXPECT_TRUE(r.leader);
  EXPECT_EQ(c.pending(), 1u);
  EXPECT_EQ(c.size(), 0u);
}

TEST(SemanticCache, ExactRepeatHitsWithSimilarityOne) {
  SemanticCache c(trigram());
  const std::string q = "what is the capital of France?";
  ASSERT_TRUE(c.lookup(q, 0.92).leader);
  c.complete(q, "Paris");
  EXPECT_EQ(c.pending(), 0u);
  const auto r = c.lookup(q, 0.92);
  ASSERT_TRUE(r.hit);
  EXPECT_EQ(r.hit->response, "Paris");
  EXPECT_NEAR(r.hit->similarity, 1.0, 1e-12);
  EXPECT_EQ(c.hits(q), 1u);
}

TEST(SemanticCache, ExactRepeatsOverThousandEntriesAreFast) {
  SemanticCache c(trigram());
  for (int i = 0; i < 1000; ++i) c.complete("question number " + std::to_string(i) + " about topic", "a" + std::to_string(i));
  ASSERT_EQ(c.size(), 1000u);
  int hits = 0;
  auto worst = std::chrono::nanoseconds(0);
  for (int i = 0; i < 100; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = c.lookup("question number " + std::to_string(i * 7) + " about topic", 0.92);
    worst = std::max(worst, std::chrono::steady_clock::now() - t0);
    if (r.hit && r.hit->response == "a" + std::to_string(i * 7)) ++hits;
  }
  EXPECT_EQ(hits, 100);
  EXPECT_LT(worst, 5ms);
}

TEST(SemanticCache, ThresholdBoundary) {
  auto e = std::make_shared<testing::TableEmbedder>(2);
  e->set("stored", {1.0, 0.0});
  e->set("near", {0.93, std::sqrt(1 - 0.93 * 0.93)});
  e->set("far", {0.90, std::sqrt(1 - 0.90 * 0.90)});
  SemanticCache c(e);
  c.complete("stored", "body");
  EXPECT_FALSE(c.lookup("far", 0.92).hit);
  const auto r = c.lookup("near", 0.92);
  ASSERT_TRUE(r.hit);
  EXPECT_NEAR(r.hit->similarity, 0.93, 1e-12);
}

TEST(SemanticCache, CompletionReleasesThreeWaiters) {
  SemanticCache c(trigram());
  const std::string q = "how many moons does Jupiter have";
  ASSERT_TRUE(c.lookup(q, 0.92).leader);
  std::vector<CacheLookup> got(3);
  std::vector<std::jthread> ts;
  for (int i = 0; i < 3; ++i) ts.emplace_back([&, i] { got[i] = c.lookup(q, 0.92); });
  while (c.waiting() < 3) std::this_thread::sleep_for(1ms);
  c.complete(q, "95");
  ts.clear();
  for (const auto& g : got) {
    EXPECT_TRUE(g.waited);
    EXPECT_FALSE(g.leader);
    ASSERT_TRUE(g.hit);
    EXPECT_EQ(g.hit->response, "95");
  }
  EXPECT_EQ(c.size(), 1u);
}

TEST(SemanticCache, LruEvictsLeastRecentlyHit) {
  auto e = std::make_shared<testing::TableEmbedder>(3);
  e->set("a", {1, 0, 0});
  e->set("b", {0, 1, 0});
  e->set("c", {0, 0, 1});
  SemanticCache c(e, 2);
  c.complete("a", "A");
  c.complete("b", "B");
  ASSERT_TRUE(c.lookup("a", 0.99).hit);
  c.complete("c", "C");
  EXPECT_EQ(c.size(), 2u);
  EXPECT_TRUE(c.contains("a"));
  EXPECT_FALSE(c.contains("b"));
  EXPECT_TRUE(c.contains("c"));
}

TEST(SemanticCache, FailureRemovesPendingAndStoresNothing) {
  SemanticCache c(trigram());
  ASSERT_TRUE(c.lookup("q one", 0.9).leader);
  c.fail("q one");
  EXPECT_EQ(c.pending(), 0u);
  EXPECT_EQ(c.size(), 0u);
  EXPECT_TRUE(c.lookup("q one", 0.9).leader);
}

TEST(SemanticCache, FailurePromotesWaiterToLeader) {
  SemanticCache c(trigram());
  ASSERT_TRUE(c.lookup("q two", 0.9).leader);
  CacheLookup waiter;
  std::jthread t([&] { waiter = c.lookup("q two", 0.9); });
  while (c.waiting() < 1) std::this_thread::sleep_for(1ms);
  c.fail("q two");
  t.join();
  EXPECT_TRUE(waiter.waited);
  EXPECT_TRUE(waiter.leader);
  EXPECT_EQ(c.pending(), 1u);
}

TEST(SemanticCache, WaiterTimesOutAndForwardsAlone) {
  SemanticCache c(trigram(), 16, 30ms);
  ASSERT_TRUE(c.lookup("slow", 0.9).leader);
  const auto r = c.lookup("slow", 0.9);
  EXPECT_TRUE(r.waited);
  EXPECT_FALSE(r.hit);
  EXPECT_FALSE(r.leader);
  EXPECT_EQ(c.pending(), 1u);
}

TEST(SemanticCache, CompleteWithoutPendingUpserts) {
  SemanticCache c(trigram());
  c.complete("x y z", "one");
  c.complete("X  y z", "two");
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(c.lookup("x y z", 0.99).hit->response, "two");
}

TEST(SemanticCacheProperty, EveryHitMeetsThreshold) {
  auto e = trigram();
  SemanticCache c(e);
  std::mt19937 rng(11);
  const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "route", "model", "cache", "query"};
  const auto phrase = [&] {
    std::string s;
    for (int i = 0; i < 4; ++i) s += words[rng() % words.size()] + " ";
    return s;
  };
  std::map<std::string, std::string> body_to_query;
  for (int i = 0; i < 60; ++i) {
    const std::string q = phrase();
    const std::string body = "b" + std::to_string(i);
    c.complete(q, body);
    body_to_query[body] = q;
  }
  int hits = 0;
  for (int i = 0; i < 300; ++i) {
    const std::string q = phrase();
    const double theta = 0.5 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
    const auto r = c.lookup(q, theta);
    if (!r.hit) {
      if (r.leader) c.fail(q);
      continue;
    }
    ++hits;
    // The stored body might have been overwritten by a later upsert of the same key.
    const std::string& stored = body_to_query.at(r.hit->response);
    const double cos = vec::dot(e->embed(q), e->embed(stored));
    EXPECT_GE(cos + 1e-12, theta);
    EXPECT_NEAR(cos, r.hit->similarity, 1e-9);
  }
  EXPECT_GT(hits, 0);
}

TEST(CacheRegistry, OneStorePerDecision) {
  CacheRegistry reg(trigram());
  reg.for_decision("a").complete("hello there friend", "A");
  EXPECT_EQ(reg.for_decision("a").size(), 1u);
  EXPECT_EQ(reg.for_decision("b").size(), 0u);
  EXPECT_EQ(&reg.for_decision("a"), &reg.for_decision("a"));
}

// ---------------------------------------------------------------------------
// System prompt and header mutation

TEST(SystemPrompt, InsertCreatesAtIndexZero) {
  const auto out = system_prompt_apply({{"user", "hi"}}, "You are helpful.", PromptMode::kInsert);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], (Message{"system", "You are helpful."}));
}

TEST(SystemPrompt, ReplaceOverwrites) {
  const auto out = system_prompt_apply({{"system", "B"}, {"user", "hi"}}, "A", PromptMode::kReplace);
  EXPECT_EQ(out[0].content, "A");
  EXPECT_EQ(out.size(), 2u);
}

TEST(SystemPrompt, InsertPrepends) {
  const auto out = system_prompt_apply({{"system", "B"}, {"user", "hi"}}, "A", PromptMode::kInsert);
  EXPECT_EQ(out[0].content, "A\nB");
}

TEST(SystemPrompt, ReplaceCreatesWhenAbsent) {
  const auto out = system_prompt_apply({{"user", "hi"}}, "A", PromptMode::kReplace);
  EXPECT_EQ(out[0], (Message{"system", "A"}));
}

HeaderMutation mut(HeaderAction a, std::string n, std::string v = "") { return {a, std::move(n), std::move(v)}; }

TEST(HeaderMutate, PairwiseSemantics) {
  struct Row {
    bool present;
    HeaderAction action;
    std::optional<std::string> expect;
  };
  // Present value "old", mutation value "new".
  const std::vector<Row> table{
      {false, HeaderAction::kAdd, "new"},    {true, HeaderAction::kAdd, "old"},
      {false, HeaderAction::kUpdate, "new"}, {true, HeaderAction::kUpdate, "new"},
      {false, HeaderAction::kDelete, std::nullopt}, {true, HeaderAction::kDelete, std::nullopt},
  };
  for (const auto& row : table) {
    Headers h;
    if (row.present) h.set("x-team", "old");
    header_mutate(h, {mut(row.action, "X-Team", "new")});
    EXPECT_EQ(h.get("x-team"), row.expect);
  }
}

TEST(HeaderMutate, AppliedInOrder) {
  Headers h;
  header_mutate(h, {mut(HeaderAction::kAdd, "a", "1"), mut(HeaderAction::kUpdate, "a", "2"),
                    mut(HeaderAction::kDelete, "b"), mut(HeaderAction::kAdd, "a", "3")});
  EXPECT_EQ(h.get("a"), "2");
  EXPECT_FALSE(h.has("b"));
}

TEST(HeaderMutateProperty, IdempotentForUpdateDeleteAndAddOnPresent) {
  std::mt19937 rng(3);
  const std::vector<std::string> names{"a", "b", "c", "d"};
  for (int trial = 0; trial < 200; ++trial) {
    Headers h;
    for (const auto& n : names) {
      if (rng() % 2) h.set(n, "v" + std::to_string(rng() % 3));
    }
    const auto& n = names[rng() % names.size()];
    const auto action = static_cast<HeaderAction>(rng() % 3);
    if (action == HeaderAction::kAdd && !h.has(n)) h.set(n, "seed");
    const std::vector<HeaderMutation> m{mut(action, n, "w")};
    Headers once = h;
    header_mutate(once, m);
    Headers twice = once;
    header_mutate(twice, m);
    EXPECT_EQ(once, twice);
    if (action == HeaderAction::kAdd) {
      EXPECT_EQ(once, h);
    }
  }
}

// ---------------------------------------------------------------------------
// HaluGate

HaluStages counting_stages(int& detector_calls, std::vector<HaluSpan> spans) {
  HaluStages s;
  s.detector = [&detector_calls, spans](std::string_view, std::string_view, std::string_view) {
    ++detector_calls;
    return spans;
  };
  return s;
}

TEST(HaluGate, CreativePromptSkipsDetector) {
  int calls = 0;
  const auto out = halugate_run("write a poem about rain", "", "Rain falls.", counting_stages(calls, {{0, 4, ""}}),
                                HaluAction::kBlock);
  EXPECT_EQ(calls, 0);
  EXPECT_FALSE(out.checked);
  EXPECT_EQ(out.content, "Rain falls.");
  EXPECT_EQ(out.status, 200);
}

TEST(HaluGate, BodyActionPrefixesWarning) {
  int calls = 0;
  const auto out = halugate_run("what is the capital of Australia", "", "Sydney.",
                                counting_stages(calls, {{0, 7, ""}}), HaluAction::kBody);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(out.content, std::string(kHaluWarning) + "Sydney.");
  EXPECT_EQ(out.spans.size(), 1u);
  EXPECT_EQ(out.spans[0].label, "unsupported");
}

TEST(HaluGate, BlockReturnsErrorDocument) {
  int calls = 0;
  const auto out = halugate_run("what is the capital of Australia", "", "Sydney.",
                                counting_stages(calls, {{0, 7, ""}}), HaluAction::kBlock);
  EXPECT_TRUE(out.blocked);
  EXPECT_EQ(out.status, 422);
  EXPECT_TRUE(out.content.empty());
  EXPECT_EQ(nlohmann::json::parse(halugate_error_body())["error"]["type"], "hallucination_detected");
}

TEST(HaluGate, HeaderActionCarriesExplainerLabels) {
  int calls = 0;
  auto stages = counting_stages(calls, {{0, 3, ""}, {4, 7, ""}});
  stages.explainer = [](std::string_view, const HaluSpan& s) { return s.begin == 0 ? "contradiction" : "neutral"; };
  const auto out = halugate_run("how many people live in Oslo", "", "abc def", stages, HaluAction::kHeader);
  ASSERT_TRUE(out.header);
  EXPECT_EQ(*out.header, "spans=2;labels=contradiction,neutral");
  EXPECT_EQ(out.content, "abc def");
}

TEST(HaluGate, NoneActionAnnotatesOnly) {
  int calls = 0;
  const auto out =
      halugate_run("what year was X founded", "", "1999", counting_stages(calls, {{0, 4, ""}}), HaluAction::kNone);
  EXPECT_EQ(out.content, "1999");
  EXPECT_FALSE(out.header);
  EXPECT_EQ(out.annotation, "detected;spans=1;labels=unsupported");
}

TEST(HaluGate, DefaultMocksFindNothing) {
  const auto out = halugate_run("what is the capital of Peru", "", "Lima", {}, HaluAction::kBlock);
  EXPECT_TRUE(out.checked);
  EXPECT_TRUE(out.spans.empty());
  EXPECT_EQ(out.status, 200);
}

TEST(HaluGate, StageFailureMeansNoDetection) {
  HaluStages s;
  s.detector = [](std::string_view, std::string_view, std::string_view) -> std::vector<HaluSpan> {
    throw std::runtime_error("detector down");
  };
  const auto out = halugate_run("what is the capital of Peru", "", "Lima", s, HaluAction::kBlock);
  EXPECT_FALSE(out.blocked);
  EXPECT_EQ(out.content, "Lima");
  EXPECT_EQ(out.error, "detector down");
}

TEST(HaluGate, ExpectedCost) {
  EXPECT_DOUBLE_EQ(halugate_expected_cost(1, 0.5, 4, 2, 3), 6.0);
  EXPECT_DOUBLE_EQ(halugate_expected_cost(2.5, 0.0, 4, 2, 3), 2.5);
  EXPECT_DOUBLE_EQ(halugate_expected_cost(2.5, 1.0, 4, 0, 3), 6.5);
}

// ---------------------------------------------------------------------------
// Chain

struct ChainFixture : ::testing::Test {
  std::shared_ptr<const Embedder> embedder = trigram();
  CacheRegistry caches{embedder};
  EpisodicMemory memory{embedder};
  PluginServices svc;
  Decision decision;

  ChainFixture() {
    svc.embedder = embedder;
    svc.caches = &caches;
    svc.memory = &memory;
    svc.meta = golden_meta();
    auto store = std::make_shared<DocumentStore>();
    store->upsert("d1", "Refunds are processed within five business days of approval.", *embedder);
    store->upsert("d2", "Our office is closed on public holidays.", *embedder);
    svc.rag_stores["kb"] = store;
    decision.name = "d";
  }

  PluginContext context(std::string text, bool stream = false) {
    PluginContext ctx;
    ctx.request = RequestView::from_text(std::move(text));
    ctx.request.stream = stream;
    ctx.decision = &decision;
    return ctx;
  }

  void enable_all() {
    auto& p = decision.plugins;
    p.cache = CacheConfig{};
    p.pii = PiiRedactionConfig{};
    p.rag = RagConfig{true, "kb", 2, FusionMode::kWeighted, std::nullopt};
    p.modality = ModalityConfig{true, "img", "painter"};
    p.memory = MemoryConfig{};
    p.system_prompt = SystemPromptConfig{true, "Be careful.", PromptMode::kInsert};
    p.header_mutation = HeaderMutationConfig{true, {mut(HeaderAction::kAdd, "x-team", "ml")}};
  }
};

TEST_F(ChainFixture, FastResponseEndsAtStageOne) {
  enable_all();
  decision.plugins.fast_response = FastResponseConfig{true, "Request blocked."};
  const auto ctx = run_request_chain(context("how do refunds work?"), svc);
  EXPECT_EQ(ctx.invoked, std::vector<PluginStage>{PluginStage::kFastResponse});
  ASSERT_TRUE(ctx.short_circuit);
  EXPECT_EQ(ctx.short_circuit->source, "fast_response");
  EXPECT_EQ(ctx.short_circuit->body, read_file(std::string(SROUTER_TEST_DATA) + "/golden/fast_response.json"));
  EXPECT_EQ(caches.for_decision("d").pending(), 0u);
}

TEST_F(ChainFixture, AllDisabledLeavesContextUnchanged) {
  enable_all();
  for (auto* e : {&decision.plugins.cache->enabled, &decision.plugins.pii->enabled, &decision.plugins.rag->enabled,
                  &decision.plugins.modality->enabled, &decision.plugins.memory->enabled,
                  &decision.plugins.system_prompt->enabled, &decision.plugins.header_mutation->enabled}) {
    *e = false;
  }
  decision.plugins.fast_response = FastResponseConfig{false, "no"};
  auto in = context("my email is a@b.com, how do refunds work?");
  in.request.headers.set("x-user-id", "u1");
  const auto out = run_request_chain(in, svc);
  EXPECT_EQ(out.request.messages, in.request.messages);
  EXPECT_EQ(out.request.headers, in.request.headers);
  EXPECT_FALSE(out.short_circuit);
  EXPECT_FALSE(out.model_override);
  EXPECT_TRUE(out.invoked.empty());
  EXPECT_EQ(caches.for_decision("d").pending(), 0u);
}

TEST_F(ChainFixture, OrderIsSubsequenceOfFixedOrder) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 64; ++trial) {
    decision = Decision{};
    decision.name = "order" + std::to_string(trial);
    enable_all();
    auto& p = decision.plugins;
    if (rng() % 2) p.cache.reset();
    if (rng() % 2) p.pii.reset();
    if (rng() % 2) p.rag.reset();
    if (rng() % 2) p.modality.reset();
    if (rng() % 2) p.memory.reset();
    if (rng() % 2) p.system_prompt.reset();
    if (rng() % 2) p.header_mutation->enabled = false;
    auto in = context("tell me about refunds and holidays " + std::to_string(trial));
    in.request.headers.set("x-user-id", "u");
    const auto out = run_request_chain(in, svc);
    std::size_t pos = 0;
    for (auto s : out.invoked) {
      while (pos < kPluginOrder.size() && kPluginOrder[pos] != s) ++pos;
      ASSERT_LT(pos, kPluginOrder.size()) << "stage out of order: " << to_string(s);
      ++pos;
    }
    const std::size_t expected = (p.cache ? 1 : 0) + (p.pii ? 1 : 0) + (p.rag ? 1 : 0) + (p.modality ? 1 : 0) +
                                 (p.memory ? 1 : 0) + (p.system_prompt ? 1 : 0) +
                                 (p.header_mutation->enabled ? 1 : 0);
    EXPECT_EQ(out.invoked.size(), expected);
  }
}

/// Runs one request through both chain halves against a counting upstream.
std::string serve(ChainFixture& f, const std::string& text, std::atomic<int>& upstream_calls,
                  std::chrono::milliseconds latency = 0ms) {
  auto ctx = run_request_chain(f.context(text), f.svc);
  if (ctx.short_circuit) return ctx.short_circuit->body;
  ++upstream_calls;
  std::this_thread::sleep_for(latency);
  CompletionMeta meta{"chatcmpl-up", 1, "m"};
  const auto res = run_response_chain(ctx, {200, chat_completion(meta, "answer to " + text).dump()}, f.svc);
  return res.body;
}

TEST_F(ChainFixture, SecondIdenticalRequestHitsCache) {
  decision.plugins.cache = CacheConfig{};
  std::atomic<int> calls = 0;
  const auto first = serve(*this, "what are your opening hours", calls);
  auto ctx = run_request_chain(context("what are your opening hours"), svc);
  ASSERT_TRUE(ctx.short_circuit);
  EXPECT_EQ(ctx.short_circuit->source, "cache");
  EXPECT_EQ(ctx.short_circuit->body, first);
  EXPECT_EQ(ctx.annotation("cache"), "hit");
  EXPECT_EQ(calls.load(), 1);
}

TEST_F(ChainFixture, CacheHitOnStreamingRequestIsSse) {
  decision.plugins.cache = CacheConfig{};
  std::atomic<int> calls = 0;
  serve(*this, "what are your opening hours", calls);
  auto ctx = run_request_chain(context("what are your opening hours", true), svc);
  ASSERT_TRUE(ctx.short_circuit);
  EXPECT_EQ(ctx.short_circuit->content_type, "text/event-stream");
  EXPECT_EQ(sse_events(ctx.short_circuit->body).size(), 7u + 3u);  // "answer to what are your opening hours"
}

TEST_F(ChainFixture, ConcurrentIdenticalMissesCallUpstreamOnce) {
  decision.plugins.cache = CacheConfig{};
  std::atomic<int> calls = 0;
  std::vector<std::string> bodies(8);
  {
    std::vector<std::jthread> ts;
    for (int i = 0; i < 8; ++i) ts.emplace_back([&, i] { bodies[i] = serve(*this, "same question here", calls, 50ms); });
  }
  EXPECT_EQ(calls.load(), 1);
  for (const auto& b : bodies) EXPECT_EQ(b, bodies[0]);
  EXPECT_EQ(caches.for_decision("d").size(), 1u);
}

TEST_F(ChainFixture, UpstreamErrorReleasesPendingEntry) {
  decision.plugins.cache = CacheConfig{};
  auto ctx = run_request_chain(context("flaky question"), svc);
  ASSERT_TRUE(ctx.cache_leader);
  const auto res = run_response_chain(ctx, {502, "{\"error\":\"bad gateway\"}"}, svc);
  EXPECT_EQ(res.status, 502);
  EXPECT_EQ(caches.for_decision("d").pending(), 0u);
  EXPECT_EQ(caches.for_decision("d").size(), 0u);
  EXPECT_TRUE(run_request_chain(context("flaky question"), svc).cache_leader);
}

TEST_F(ChainFixture, BlockedResponseIsNotCached) {
  decision.plugins.cache = CacheConfig{};
  decision.plugins.hallucination = HallucinationConfig{true, HaluAction::kBlock};
  svc.halu.detector = [](std::string_view, std::string_view, std::string_view) {
    return std::vector<HaluSpan>{{0, 1, ""}};
  };
  auto ctx = run_request_chain(context("what is the capital of Peru"), svc);
  const auto res = run_response_chain(ctx, {200, chat_completion({}, "Quito").dump()}, svc);
  EXPECT_EQ(res.status, 422);
  EXPECT_EQ(caches.for_decision("d").size(), 0u);
  EXPECT_EQ(caches.for_decision("d").pending(), 0u);
}

TEST_F(ChainFixture, BodyActionRewritesContentAndCachesResult) {
  decision.plugins.cache = CacheConfig{};
  decision.plugins.hallucination = HallucinationConfig{true, HaluAction::kBody};
  svc.halu.detector = [](std::string_view, std::string_view, std::string_view) {
    return std::vector<HaluSpan>{{0, 1, ""}};
  };
  auto ctx = run_request_chain(context("what is the capital of Peru"), svc);
  const auto res = run_response_chain(ctx, {200, chat_completion({}, "Quito").dump()}, svc);
  EXPECT_EQ(completion_content(res.body), std::string(kHaluWarning) + "Quito");
  const auto again = run_request_chain(context("what is the capital of Peru"), svc);
  ASSERT_TRUE(again.short_circuit);
  EXPECT_EQ(again.short_circuit->body, res.body);
}

TEST_F(ChainFixture, HeaderActionSetsObservabilityHeader) {
  decision.plugins.hallucination = HallucinationConfig{true, HaluAction::kHeader};
  svc.halu.detector = [](std::string_view, std::string_view, std::string_view) {
    return std::vector<HaluSpan>{{0, 1, ""}};
  };
  auto ctx = run_request_chain(context("what is the capital of Peru"), svc);
  const auto res = run_response_chain(ctx, {200, chat_completion({}, "Quito").dump()}, svc);
  EXPECT_EQ(res.headers.get("x-sr-halugate"), "spans=1;labels=unsupported");
}

TEST_F(ChainFixture, RagInjectsContextBeforeLatestUserMessage) {
  decision.plugins.rag = RagConfig{true, "kb", 1, FusionMode::kWeighted, std::nullopt};
  decision.plugins.system_prompt = SystemPromptConfig{true, "Answer briefly.", PromptMode::kReplace};
  const auto ctx = run_request_chain(context("how long do refunds take?"), svc);
  ASSERT_EQ(ctx.request.messages.size(), 3u);
  EXPECT_EQ(ctx.request.messages[0], (Message{"system", "Answer briefly."}));
  EXPECT_EQ(ctx.request.messages[1].role, "system");
  EXPECT_NE(ctx.request.messages[1].content.find("Refunds are processed"), std::string::npos);
  EXPECT_EQ(ctx.request.messages[2], (Message{"user", "how long do refunds take?"}));
  EXPECT_EQ(ctx.annotation("rag.hits"), "1");
}

TEST_F(ChainFixture, FailingPluginIsAnnotatedAndSkipped) {
  decision.plugins.rag = RagConfig{true, "missing", 3, FusionMode::kRrf, std::nullopt};
  decision.plugins.header_mutation = HeaderMutationConfig{true, {mut(HeaderAction::kAdd, "x-team", "ml")}};
  const auto ctx = run_request_chain(context("how long do refunds take?"), svc);
  EXPECT_TRUE(ctx.annotation("rag.error"));
  EXPECT_EQ(ctx.request.headers.get("x-team"), "ml");
  EXPECT_EQ(ctx.request.messages.size(), 1u);
}

TEST_F(ChainFixture, ModalityOverridesPoolWhenSignalMatched) {
  decision.plugins.modality = ModalityConfig{true, "img", "painter"};
  auto ctx = context("draw a cat");
  EXPECT_FALSE(run_request_chain(ctx, svc).model_override);
  ctx.signals[SignalKey{SignalType::kModality, "img"}] = SignalResult{true, 1.0, {}, {}};
  const auto out = run_request_chain(ctx, svc);
  ASSERT_TRUE(out.model_override);
  EXPECT_EQ(out.model_override->at(0).model, "painter");
}

TEST_F(ChainFixture, PiiRedactsUserMessages) {
  decision.plugins.pii = PiiRedactionConfig{true, 0.5, {"PHONE"}};
  const auto ctx = run_request_chain(context("mail me at jo@example.com or call 555-123-4567"), svc);
  EXPECT_EQ(ctx.request.messages[0].content, "mail me at [REDACTED_EMAIL] or call 555-123-4567");
}

TEST_F(ChainFixture, MemoryWrittenOnResponseAndRecalledLater) {
  decision.plugins.memory = MemoryConfig{};
  auto first = context("my favourite colour for the kitchen walls is teal green");
  first.request.headers.set("x-user-id", "alice");
  auto ctx = run_request_chain(first, svc);
  EXPECT_EQ(ctx.annotation("memory.hits"), "0");
  run_response_chain(ctx, {200, chat_completion({}, "Teal green is a calm choice.").dump()}, svc);
  EXPECT_EQ(memory.size("alice"), 1u);

  auto second = context("what colour did I pick for my kitchen walls?");
  second.request.headers.set("x-user-id", "alice");
  const auto out = run_request_chain(second, svc);
  ASSERT_EQ(out.request.messages.size(), 2u);
  EXPECT_NE(out.request.messages[0].content.find("teal green"), std::string::npos);

  auto other = second;
  other.request.headers.set("x-user-id", "bob");
  EXPECT_EQ(run_request_chain(other, svc).request.messages.size(), 1u);
}

TEST_F(ChainFixture, MemoryWithoutUserIsSkipped) {
  decision.plugins.memory = MemoryConfig{};
  const auto ctx = run_request_chain(context("what colour did I pick for my kitchen walls?"), svc);
  EXPECT_EQ(ctx.annotation("memory"), "no_user");
}

}  // namespace
}  // namespace srouter
