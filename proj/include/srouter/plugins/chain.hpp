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

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/plugins/cache.hpp"
#include "srouter/plugins/completion.hpp"
#include "srouter/plugins/halugate.hpp"
#include "srouter/plugins/mutate.hpp"
#include "srouter/retrieval/memory.hpp"
#include "srouter/retrieval/store.hpp"
#include "srouter/signals/engine.hpp"
#include "srouter/signals/pii.hpp"

namespace srouter {

enum class PluginStage { kFastResponse, kCache, kPii, kRag, kModality, kMemory, kSystemPrompt, kHeaderMutation };

inline constexpr std::array<PluginStage, 8> kPluginOrder{
    PluginStage::kFastResponse, PluginStage::kCache,  PluginStage::kPii,          PluginStage::kRag,
    PluginStage::kModality,     PluginStage::kMemory, PluginStage::kSystemPrompt, PluginStage::kHeaderMutation};

inline std::string_view to_string(PluginStage s) {
  switch (s) {
    case PluginStage::kFastResponse: return "fast_response";
    case PluginStage::kCache: return "cache";
    case PluginStage::kPii: return "pii";
    case PluginStage::kRag: return "rag";
    case PluginStage::kModality: return "modality";
    case PluginStage::kMemory: return "memory";
    case PluginStage::kSystemPrompt: return "system_prompt";
    case PluginStage::kHeaderMutation: return "header_mutation";
  }
  return "?";
}

/// A response produced inside the chain; the upstream is never called.
struct ShortCircuit {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::string source;  // fast_response | cache
};

struct PluginContext {
  RequestView request;
  const Decision* decision = nullptr;
  SignalVector signals;
  std::optional<ShortCircuit> short_circuit;
  std::vector<std::pair<std::string, std::string>> annotations;
  std::vector<PluginStage> invoked;
  std::optional<std::vector<ModelRef>> model_override;
  std::vector<std::string> retrieved;  // context injected by rag/memory, for HaluGate

  // Cache bookkeeping for the response path.
  SemanticCache* cache = nullptr;
  std::string cache_query;
  bool cache_leader = false;

  void annotate(std::string key, std::string value) { annotations.emplace_back(std::move(key), std::move(value)); }

  std::optional<std::string> annotation(std::string_view key) const {
    for (auto it = annotations.rbegin(); it != annotations.rend(); ++it) {
      if (it->first == key) return it->second;
    }
    return std::nullopt;
  }
};

/// Shared collaborators. Any pointer may be null; the stage that needs it is
/// then annotated and skipped.
struct PluginServices {
  std::shared_ptr<const Embedder> embedder;
  CacheRegistry* caches = nullptr;
  const PiiDetector* pii = nullptr;
  std::map<std::string, std::shared_ptr<const DocumentStore>> rag_stores;
  EpisodicMemory* memory = nullptr;
  std::string user_header = "x-user-id";
  HaluStages halu;
  CompletionMeta meta;  // id/created/model of synthetic completions
};

/// Renders a completion body as JSON or as an SSE stream.
inline ShortCircuit synthetic_response(const CompletionMeta& meta, std::string_view content, bool stream,
                                       std::string source) {
  ShortCircuit sc;
  sc.source = std::move(source);
  if (stream) {
    sc.content_type = "text/event-stream";
    sc.body = sse_body(completion_sse_events(meta, content));
  } else {
    sc.body = chat_completion(meta, content).dump();
  }
  return sc;
}

inline ShortCircuit fast_response(const CompletionMeta& meta, std::string_view message, bool stream) {
  return synthetic_response(meta, message, stream, "fast_response");
}

namespace detail {

inline std::optional<std::string> user_of(const PluginContext& ctx, const PluginServices& svc) {
  auto u = ctx.request.headers.get(svc.user_header);
  if (!u || u->empty()) return std::nullopt;
  return u;
}

inline void insert_before_last_user(std::vector<Message>& messages, Message m) {
  auto pos = messages.end();
  for (auto it = messages.begin(); it != messages.end(); ++it) {
    if (it->role == "user") pos = it;
  }
  messages.insert(pos, std::move(m));
}

inline void stage_cache(PluginContext& ctx, const CacheConfig& cfg, PluginServices& svc) {
  if (!svc.caches) throw std::runtime_error("no cache registry");
  const std::string q = ctx.request.latest_user_text();
  SemanticCache& cache = svc.caches->for_decision(ctx.decision->name);
  const CacheLookup r = cache.lookup(q, cfg.similarity_threshold);
  if (r.hit) {
    ctx.annotate("cache", "hit");
    ctx.annotate("cache.similarity", std::to_string(r.hit->similarity));
    if (ctx.request.stream) {
      const auto content = completion_content(r.hit->response).value_or("");
      ctx.short_circuit = synthetic_response(svc.meta, content, true, "cache");
    } else {
      ctx.short_circuit = ShortCircuit{200, "application/json", r.hit->response, "cache"};
    }
    return;
  }
  ctx.annotate("cache", "miss");
  if (r.leader) {
    ctx.cache = &cache;
    ctx.cache_query = q;
    ctx.cache_leader = true;
  }
}

inline void stage_pii(PluginContext& ctx, const PiiRedactionConfig& cfg, PluginServices& svc) {
  static const RegexPiiDetector kDefault;
  const PiiDetector& det = svc.pii ? *svc.pii : kDefault;
  std::size_t changed = 0;
  for (auto& m : ctx.request.messages) {
    if (m.role != "user") continue;
    std::string red = redact_pii(m.content, det.detect(m.content), cfg.allowed, cfg.threshold);
    if (red != m.content) {
      m.content = std::move(red);
      ++changed;
    }
  }
  ctx.annotate("pii.redacted_messages", std::to_string(changed));
}

inline std::string numbered_context(std::string_view title, const std::vector<std::string>& items) {
  std::string out(title);
  for (std::size_t i = 0; i < items.size(); ++i) out += "\n[" + std::to_string(i + 1) + "] " + items[i];
  return out;
}

inline std::optional<Message> stage_rag(PluginContext& ctx, const RagConfig& cfg, PluginServices& svc) {
  auto it = svc.rag_stores.find(cfg.store);
  if (it == svc.rag_stores.end() || !it->second) throw std::runtime_error("unknown store '" + cfg.store + "'");
  if (!svc.embedder) throw std::runtime_error("no embedder");
  SearchOptions opt;
  opt.mode = search_mode(cfg.fusion);
  opt.top_k = static_cast<std::size_t>(std::max(cfg.top_k, 0));
  opt.threshold = cfg.threshold;
  const auto hits = it->second->search(ctx.request.latest_user_text(), *svc.embedder, opt);
  ctx.annotate("rag.hits", std::to_string(hits.size()));
  if (hits.empty()) return std::nullopt;
  std::vector<std::string> texts;
  for (const auto& h : hits) texts.push_back(h.text);
  ctx.retrieved.insert(ctx.retrieved.end(), texts.begin(), texts.end());
  return Message{"system", numbered_context("Reference documents:", texts)};
}

inline std::optional<Message> stage_memory(PluginContext& ctx, const MemoryConfig& cfg, PluginServices& svc) {
  if (!svc.memory) throw std::runtime_error("no memory store");
  const auto user = user_of(ctx, svc);
  if (!user) {
    ctx.annotate("memory", "no_user");
    return std::nullopt;
  }
  const std::string q = ctx.request.latest_user_text();
  if (!retrieval_gate(q, ctx.request.has_tools)) {
    ctx.annotate("memory", "gated");
    return std::nullopt;
  }
  SearchOptions opt;
  opt.mode = search_mode(cfg.fusion);
  opt.top_k = static_cast<std::size_t>(std::max(cfg.top_k, 0));
  const auto hits = svc.memory->search(*user, q, opt);
  ctx.annotate("memory.hits", std::to_string(hits.size()));
  if (hits.empty()) return std::nullopt;
  std::vector<std::string> texts;
  for (const auto& h : hits) texts.push_back(h.chunk.text);
  ctx.retrieved.insert(ctx.retrieved.end(), texts.begin(), texts.end());
  return Message{"system", numbered_context("Relevant memories from earlier conversations:", texts)};
}

template <typename Cfg>
const Cfg* enabled(const std::optional<Cfg>& c) {
  return c && c->enabled ? &*c : nullptr;
}

}  // namespace detail

/// Runs the request-side chain in fixed order. Context from rag and memory
/// is injected as separate system messages just before the latest user
/// message once the chain finishes, so system-prompt replacement never
/// overwrites it.
inline PluginContext run_request_chain(PluginContext ctx, PluginServices& svc) {
  if (!ctx.decision) throw std::invalid_argument("run_request_chain: no decision");
  const PluginChainConfig& p = ctx.decision->plugins;
  std::vector<Message> injected;

  const auto guarded = [&](PluginStage stage, auto&& body) {
    ctx.invoked.push_back(stage);
    try {
      body();
    } catch (const std::exception& e) {
      ctx.annotate(std::string(to_string(stage)) + ".error", e.what());
    }
  };

  if (const auto* c = detail::enabled(p.fast_response)) {
    ctx.invoked.push_back(PluginStage::kFastResponse);
    ctx.short_circuit = fast_response(svc.meta, c->message, ctx.request.stream);
    ctx.annotate("fast_response", "hit");
    return ctx;
  }
  if (const auto* c = detail::enabled(p.cache)) {
    guarded(PluginStage::kCache, [&] { detail::stage_cache(ctx, *c, svc); });
    if (ctx.short_circuit) return ctx;
  }
  if (const auto* c = detail::enabled(p.pii)) {
    guarded(PluginStage::kPii, [&] { detail::stage_pii(ctx, *c, svc); });
  }
  if (const auto* c = detail::enabled(p.rag)) {
    guarded(PluginStage::kRag, [&] {
      if (auto m = detail::stage_rag(ctx, *c, svc)) injected.push_back(std::move(*m));
    });
  }
  if (const auto* c = detail::enabled(p.modality)) {
    guarded(PluginStage::kModality, [&] {
      auto it = ctx.signals.find(SignalKey{SignalType::kModality, c->signal});
      if (it != ctx.signals.end() && it->second.matched) {
        ModelRef m;
        m.model = c->model;
        ctx.model_override = std::vector<ModelRef>{m};
        ctx.annotate("modality", c->model);
      }
    });
  }
  if (const auto* c = detail::enabled(p.memory)) {
    guarded(PluginStage::kMemory, [&] {
      if (auto m = detail::stage_memory(ctx, *c, svc)) injected.push_back(std::move(*m));
    });
  }
  if (const auto* c = detail::enabled(p.system_prompt)) {
    guarded(PluginStage::kSystemPrompt,
            [&] { ctx.request.messages = system_prompt_apply(std::move(ctx.request.messages), c->text, c->mode); });
  }
  if (const auto* c = detail::enabled(p.header_mutation)) {
    guarded(PluginStage::kHeaderMutation, [&] { header_mutate(ctx.request.headers, c->mutations); });
  }
  for (auto& m : injected) detail::insert_before_last_user(ctx.request.messages, std::move(m));
  return ctx;
}

struct UpstreamReply {
  int status = 200;
  std::string body;  // chat.completion JSON
};

struct ResponseResult {
  int status = 200;
  std::string body;
  Headers headers;  // observability headers added by the response path
};

/// Response path: HaluGate, then cache write, then memory write. Non-2xx
/// replies release the pending cache entry and pass through untouched.
inline ResponseResult run_response_chain(PluginContext& ctx, const UpstreamReply& reply, PluginServices& svc) {
  ResponseResult out{reply.status, reply.body, {}};
  const bool ok = reply.status >= 200 && reply.status < 300;
  if (!ok) {
    if (ctx.cache_leader && ctx.cache) ctx.cache->fail(ctx.cache_query);
    ctx.cache_leader = false;
    return out;
  }
  const PluginChainConfig& p = ctx.decision->plugins;
  auto content = completion_content(reply.body);

  if (const auto* h = detail::enabled(p.hallucination); h && content) {
    std::string joined;
    for (const auto& r : ctx.retrieved) joined += r + "\n";
    const HaluOutcome g = halugate_run(ctx.request.latest_user_text(), joined, *content, svc.halu, h->action);
    ctx.annotate("halugate", g.error.empty() ? g.annotation : "error: " + g.error);
    if (g.blocked) {
      out.status = g.status;
      out.body = halugate_error_body();
    } else if (g.content != *content) {
      auto doc = OrderedJson::parse(reply.body);
      doc["choices"][0]["message"]["content"] = g.content;
      out.body = doc.dump();
      content = g.content;
    }
    if (g.header) out.headers.set("x-sr-halugate", *g.header);
  }

  if (ctx.cache_leader && ctx.cache) {
    if (out.status >= 200 && out.status < 300) {
      ctx.cache->complete(ctx.cache_query, out.body);
    } else {
      ctx.cache->fail(ctx.cache_query);
    }
    ctx.cache_leader = false;
  }

  if (const auto* m = detail::enabled(p.memory); m && svc.memory && content && out.status == 200) {
    if (auto user = detail::user_of(ctx, svc)) {
      svc.memory->write(*user, ctx.request.latest_user_text(), *content);
    }
  }
  return out;
}

}  // namespace srouter
