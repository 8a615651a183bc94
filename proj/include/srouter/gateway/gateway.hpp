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

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "srouter/config/types.hpp"
#include "srouter/decision/eval.hpp"
#include "srouter/gateway/auth.hpp"
#include "srouter/gateway/conversation.hpp"
#include "srouter/gateway/endpoints.hpp"
#include "srouter/gateway/http.hpp"
#include "srouter/gateway/metrics.hpp"
#include "srouter/gateway/upstream.hpp"
#include "srouter/plugins/chain.hpp"
#include "srouter/selection/algorithms.hpp"
#include "srouter/signals/engine.hpp"

namespace srouter::gateway {

enum class Stage {
  kApiTranslation,
  kParseDetect,
  kSignalsAndDecision,
  kFastResponse,
  kCacheLookup,
  kRag,
  kModality,
  kMemory,
  kSelectAndMutate,
  kEndpointResolution,
};

inline constexpr std::array<Stage, 10> kPipelinePlan{
    Stage::kApiTranslation, Stage::kParseDetect, Stage::kSignalsAndDecision, Stage::kFastResponse,
    Stage::kCacheLookup,    Stage::kRag,         Stage::kModality,           Stage::kMemory,
    Stage::kSelectAndMutate, Stage::kEndpointResolution};

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kApiTranslation: return "api_translation";
    case Stage::kParseDetect: return "parse_detect";
    case Stage::kSignalsAndDecision: return "signals_and_decision";
    case Stage::kFastResponse: return "fast_response";
    case Stage::kCacheLookup: return "cache_lookup";
    case Stage::kRag: return "rag";
    case Stage::kModality: return "modality";
    case Stage::kMemory: return "memory";
    case Stage::kSelectAndMutate: return "select_and_mutate";
    case Stage::kEndpointResolution: return "endpoint_resolution";
  }
  return "?";
}

struct Usage {
  std::int64_t prompt = 0;
  std::int64_t completion = 0;
  bool operator==(const Usage&) const = default;
};

inline std::optional<Usage> usage_of(const OrderedJson& doc) {
  auto u = doc.find("usage");
  if (u == doc.end() || !u->is_object()) return std::nullopt;
  auto p = u->find("prompt_tokens");
  auto c = u->find("completion_tokens");
  if (p == u->end() || c == u->end() || !p->is_number_integer() || !c->is_number_integer()) return std::nullopt;
  return Usage{p->get<std::int64_t>(), c->get<std::int64_t>()};
}

/// What a relayed SSE body said: concatenated content deltas, the last
/// usage block, the model.
struct StreamSummary {
  std::string content;
  std::optional<Usage> usage;
  std::string model;
  std::size_t content_chunks = 0;
  bool done = false;
};

inline StreamSummary summarize_sse(std::string_view body) {
  StreamSummary s;
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t end = body.find('\n', pos);
    if (end == std::string_view::npos) end = body.size();
    std::string_view line = body.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.rfind("data:", 0) != 0) continue;
    std::string_view data = line.substr(5);
    while (!data.empty() && data.front() == ' ') data.remove_prefix(1);
    if (data == "[DONE]") {
      s.done = true;
      continue;
    }
    OrderedJson j = OrderedJson::parse(data, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    if (j.contains("model") && j["model"].is_string()) s.model = j["model"].get<std::string>();
    if (auto u = usage_of(j)) s.usage = u;
    auto ch = j.find("choices");
    if (ch == j.end() || !ch->is_array() || ch->empty()) continue;
    const auto& delta = (*ch)[0].value("delta", OrderedJson::object());
    if (auto c = delta.find("content"); c != delta.end() && c->is_string() && !c->get<std::string>().empty()) {
      s.content += c->get<std::string>();
      ++s.content_chunks;
    }
  }
  return s;
}

struct Attempt {
  std::string endpoint;
  int status = 0;
  std::string outcome;  // ok | client_error | http_5xx | transport: <error>
};

/// Everything observed while handling one request.
struct Exchange {
  HttpResponse response;
  bool streamed = false;  // body went out through the relay
  std::vector<Stage> stages;
  std::vector<std::pair<std::string, std::string>> annotations;
  std::vector<Attempt> attempts;
  std::optional<std::string> decision;
  std::optional<std::string> model;
  std::optional<std::string> endpoint;
  std::optional<Usage> usage;
  std::optional<double> ttft_ms;
  std::optional<double> tpot_ms;
  std::size_t upstream_calls = 0;
  std::string short_circuit;  // "", fast_response, cache

  std::optional<std::string> annotation(std::string_view key) const {
    for (auto it = annotations.rbegin(); it != annotations.rend(); ++it) {
      if (it->first == key) return it->second;
    }
    return std::nullopt;
  }
};

/// Hooks for relaying a streamed 2xx reply: `begin` once with the status and
/// headers, then `chunk` per body piece as it arrives.
struct StreamRelay {
  std::function<void(const HttpResponse& head)> begin;
  ChunkRelay chunk;
};

struct GatewayOptions {
  std::string session_header = "x-session-id";
  std::chrono::milliseconds upstream_timeout{60000};
  std::size_t stream_buffer_cap = std::size_t{1} << 20;
  ConversationStore::Options conversations;
  std::optional<std::uint64_t> seed;  // endpoint draws; random when unset
  std::size_t cache_capacity = 4096;
  std::chrono::milliseconds cache_wait{30000};
  std::filesystem::path base_dir = ".";  // relative model_file paths
  EnvLookup env = process_env;
  std::function<std::int64_t()> unix_time = [] {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
};

struct GatewayServices {
  SignalEngine::Backends signals;
  std::map<std::string, std::shared_ptr<const DocumentStore>> rag_stores;
  std::shared_ptr<EpisodicMemory> memory;
  HaluStages halu;
  std::string user_header = "x-user-id";
};

/// Result of `route --dry-run`: the routing plan without any upstream call.
struct DryRun {
  SignalVector signals;
  MatchResult match;
  std::vector<Stage> stages;
  std::vector<std::pair<std::string, std::string>> annotations;
  std::optional<ShortCircuit> short_circuit;
  std::optional<std::string> model;
  std::optional<std::string> endpoint;
  std::string error;

  Json to_json() const {
    Json j;
    Json sv = Json::array();
    for (const auto& [k, r] : signals) {
      Json e = {{"type", to_string(k.type)}, {"name", k.name}, {"matched", r.matched}, {"confidence", r.confidence}};
      if (!r.error.empty()) e["error"] = r.error;
      if (!r.details.empty()) e["details"] = r.details;
      sv.push_back(e);
    }
    j["signals"] = sv;
    Json m;
    m["strategy"] = match.strategy == Strategy::kConfidence ? "confidence" : "priority";
    m["selected"] = match.selected ? Json(match.selected->name) : Json();
    if (match.selected) m["confidence"] = match.selected->confidence;
    Json all = Json::array();
    for (const auto& o : match.all_matched) all.push_back({{"name", o.name}, {"confidence", o.confidence}, {"priority", o.priority}});
    m["matched"] = all;
    if (match.fallback_applied) m["fallback_model"] = *match.fallback_model;
    j["match"] = m;
    Json st = Json::array();
    for (auto s : stages) st.push_back(to_string(s));
    j["stages"] = st;
    if (short_circuit) j["short_circuit"] = {{"source", short_circuit->source}, {"status", short_circuit->status}};
    j["model"] = model ? Json(*model) : Json();
    j["endpoint"] = endpoint ? Json(*endpoint) : Json();
    Json ann = Json::object();
    for (const auto& [k, v] : annotations) ann[k] = v;
    j["annotations"] = ann;
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

class Gateway {
 public:
  Gateway(RouterConfig config, std::shared_ptr<UpstreamClient> upstream, GatewayServices services = {},
          GatewayOptions options = {})
      : upstream_(std::move(upstream)),
        services_(std::move(services)),
        options_(std::move(options)),
        resolver_(options_.seed.value_or(std::random_device{}())),
        conversations_(options_.conversations) {
    if (!upstream_) upstream_ = std::make_shared<HttpUpstreamClient>();
    auto snap = build(std::move(config));
    caches_ = std::make_unique<CacheRegistry>(snap->engine->embedder_ptr(), options_.cache_capacity,
                                              options_.cache_wait);
    snapshot_ = std::move(snap);
  }

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Swaps in a new config; requests already running keep the old one.
  void reload(RouterConfig config) {
    auto snap = build(std::move(config));
    std::lock_guard lock(snapshot_mu_);
    snapshot_ = std::move(snap);
  }

  const RouterConfig& config() const { return snapshot()->config; }
  Metrics& metrics() { return metrics_; }
  ConversationStore& conversations() { return conversations_; }
  CacheRegistry& caches() { return *caches_; }
  LatencyStore& latency() { return latency_; }

  /// POST /v1/chat/completions.
  Exchange chat(const HttpRequest& req, const StreamRelay* relay = nullptr) { return run(req, relay, nullptr); }

  /// POST /v1/responses: rebuilds history from previous_response_id, runs
  /// the chat pipeline and stores the turn.
  Exchange responses(const HttpRequest& req) {
    ResponsesRequest rr;
    std::vector<Message> history;
    std::optional<std::string> pinned;
    try {
      rr = parse_responses_request(req.body);
      if (rr.stream) throw RequestError(400, "streaming is not supported on /v1/responses");
      if (rr.previous_id) {
        history = conversations_.history(*rr.previous_id);
        if (auto prev = conversations_.get(*rr.previous_id)) pinned = prev->model;
      }
    } catch (const RequestError& e) {
      Exchange ex;
      ex.stages.push_back(Stage::kApiTranslation);
      ex.response = error_response(e.status(), e.status() == 404 ? "not_found" : "invalid_request_error", e.what());
      count_response(ex);
      return ex;
    }
    HttpRequest inner{"POST", "/v1/chat/completions", req.headers, chat_body(rr, chat_messages(rr, history))};
    Turn turn{pinned};
    Exchange ex = run(inner, nullptr, &turn);
    if (ex.response.status < 200 || ex.response.status >= 300) return ex;
    const auto content = completion_content(ex.response.body);
    if (!content) return ex;
    ConversationRecord rec;
    rec.id = conversations_.next_id();
    rec.previous_id = rr.previous_id;
    rec.input = rr.input;
    rec.output = *content;
    rec.decision = ex.decision.value_or("");
    rec.model = ex.model.value_or("");
    rec.signal_summary = ex.annotation("signals").value_or("");
    ex.response.body = responses_object(rec.id, rr.previous_id, ex.response.body, options_.unix_time()).dump();
    conversations_.put(std::move(rec));
    return ex;
  }

  /// Routing plan for a chat-completions body; no upstream call and no
  /// cache or memory side effects.
  DryRun dry_run(std::string_view body, const Headers& headers = {}) {
    DryRun d;
    const auto snap = snapshot();
    d.stages = {Stage::kApiTranslation, Stage::kParseDetect};
    ChatRequest chat;
    try {
      chat = parse_chat_request(body, headers);
    } catch (const RequestError& e) {
      d.error = e.what();
      return d;
    }
    d.stages.push_back(Stage::kSignalsAndDecision);
    d.signals = snap->engine->evaluate(chat.view);
    d.match = select_decision(snap->config, d.signals);
    PluginContext ctx;
    ctx.request = chat.view;
    ctx.signals = d.signals;
    const Decision* decision = find_decision(*snap, d.match);
    std::vector<ModelRef> candidates;
    if (decision) {
      ctx.decision = decision;
      PluginServices svc = plugin_services(*snap);
      svc.caches = nullptr;
      svc.memory = nullptr;
      ctx = run_request_chain(std::move(ctx), svc);
      record_plugin_stages(ctx, d.stages);
      d.annotations = ctx.annotations;
      if (ctx.short_circuit) {
        d.short_circuit = ctx.short_circuit;
        return d;
      }
      candidates = ctx.model_override.value_or(decision->model_refs);
    } else if (auto c = fallback_candidates(*snap, d.match, chat.view)) {
      candidates = *c;
    } else {
      d.error = "no decision matched and no default_model is configured";
      return d;
    }
    d.stages.push_back(Stage::kSelectAndMutate);
    try {
      d.model = choose_model(*snap, decision, candidates, ctx, d.match, nullptr).model;
    } catch (const std::exception& e) {
      d.error = e.what();
      return d;
    }
    d.stages.push_back(Stage::kEndpointResolution);
    const auto order = resolver_.resolve(snap->config.endpoints, *d.model, ctx.request.headers.get(options_.session_header));
    if (order.empty()) {
      d.error = "no endpoint serves model '" + *d.model + "'";
    } else {
      d.endpoint = snap->config.endpoints.entries[order.front()].name;
    }
    return d;
  }

  HttpResponse health() const {
    HttpResponse r;
    r.content_type = "application/json";
    r.body = "{\"status\":\"ok\"}";
    return r;
  }

  HttpResponse metrics_response() const {
    HttpResponse r;
    r.content_type = "text/plain; version=0.0.4";
    r.body = metrics_.render();
    return r;
  }

 private:
  struct Snapshot {
    RouterConfig config;
    std::unique_ptr<SignalEngine> engine;
    std::map<std::string, std::unique_ptr<Selector>> selectors;
    std::map<std::string, std::string> secrets;
  };

  struct Turn {
    std::optional<std::string> pinned_model;
  };

  std::shared_ptr<Snapshot> build(RouterConfig config) const {
    auto snap = std::make_shared<Snapshot>();
    snap->config = std::move(config);
    snap->engine = std::make_unique<SignalEngine>(snap->config, services_.signals);
    SelectorEnv env{options_.base_dir};
    for (const auto& d : snap->config.decisions) {
      snap->selectors[d.name] = make_selector(d.algorithm, d.model_refs, env);
    }
    snap->secrets = resolve_secrets(snap->config.endpoints, options_.env);
    return snap;
  }

  std::shared_ptr<Snapshot> snapshot() const {
    std::lock_guard lock(snapshot_mu_);
    return snapshot_;
  }

  static const Decision* find_decision(const Snapshot& snap, const MatchResult& m) {
    if (!m.selected) return nullptr;
    for (const auto& d : snap.config.decisions) {
      if (d.name == m.selected->name) return &d;
    }
    return nullptr;
  }

  /// default_model, else the client's model when some endpoint serves it.
  static std::optional<std::vector<ModelRef>> fallback_candidates(const Snapshot& snap, const MatchResult& m,
                                                                 const RequestView& view) {
    ModelRef r;
    if (m.fallback_model) {
      r.model = *m.fallback_model;
    } else if (view.model_hint && !snap.config.endpoints.for_model(*view.model_hint).empty()) {
      r.model = *view.model_hint;
    } else {
      return std::nullopt;
    }
    return std::vector<ModelRef>{r};
  }

  PluginServices plugin_services(const Snapshot& snap) {
    PluginServices svc;
    svc.embedder = snap.engine->embedder_ptr();
    svc.caches = caches_.get();
    svc.pii = &snap.engine->pii_detector();
    svc.rag_stores = services_.rag_stores;
    svc.memory = services_.memory.get();
    svc.user_header = services_.user_header;
    svc.halu = services_.halu;
    svc.meta.id = "chatcmpl-" + conversations_.next_id("");
    svc.meta.created = options_.unix_time();
    return svc;
  }

  static void record_plugin_stages(const PluginContext& ctx, std::vector<Stage>& stages) {
    for (auto s : ctx.invoked) {
      switch (s) {
        case PluginStage::kFastResponse: stages.push_back(Stage::kFastResponse); break;
        case PluginStage::kCache: stages.push_back(Stage::kCacheLookup); break;
        case PluginStage::kRag: stages.push_back(Stage::kRag); break;
        case PluginStage::kModality: stages.push_back(Stage::kModality); break;
        case PluginStage::kMemory: stages.push_back(Stage::kMemory); break;
        default: break;  // pii, system prompt and header edits belong to select_and_mutate
      }
    }
  }

  Selection choose_model(const Snapshot& snap, const Decision* decision, const std::vector<ModelRef>& candidates,
                         const PluginContext& ctx, const MatchResult& match, const Turn* turn) {
    if (candidates.empty()) throw SelectionError("no candidate models");
    if (turn && turn->pinned_model && decision && decision->pin_model) {
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].model == *turn->pinned_model) return {candidates[i].model, 1.0, i};
      }
    }
    if (!decision || ctx.model_override) return {candidates.front().model, 1.0, 0};
    const Selector& sel = *snap.selectors.at(decision->name);
    SelectionContext sc;
    sc.candidates = candidates;
    sc.query_embedding = snap.engine->embedder().embed(ctx.request.latest_user_text());
    for (const auto& [k, r] : ctx.signals) {
      if (k.type == SignalType::kDomain && r.matched) {
        sc.domain = k.name;
        break;
      }
    }
    sc.decision_confidence = match.selected ? match.selected->confidence : 1.0;
    sc.latency = &latency_;
    return sel.select(sc);
  }

  static ModelRef ref_for(const std::vector<ModelRef>& candidates, const std::string& model) {
    for (const auto& c : candidates) {
      if (c.model == model) return c;
    }
    ModelRef r;
    r.model = model;
    return r;
  }

  /// Outbound body for one model: LoRA adapters are addressed by name,
  /// reasoning flags become vLLM chat-template arguments.
  static std::string body_for(const OrderedJson& inbound, const ModelRef& ref, const std::vector<Message>& messages,
                              std::optional<bool> stream = std::nullopt) {
    OrderedJson doc = OrderedJson::parse(upstream_body(inbound, ref.lora.value_or(ref.model), messages));
    if (ref.reasoning) doc["chat_template_kwargs"]["enable_thinking"] = *ref.reasoning;
    if (ref.effort) doc["reasoning_effort"] = *ref.effort;
    if (stream) doc["stream"] = *stream;
    return doc.dump();
  }

  static Headers outbound_headers(const Headers& in) {
    Headers out;
    for (const auto& [k, v] : in.all()) {
      if (k == "host" || k == "content-length" || k == "connection" || k == "transfer-encoding" ||
          k == "accept-encoding" || k == "content-type") {
        continue;
      }
      out.set(k, v);
    }
    return out;
  }

  struct ForwardResult {
    std::optional<UpstreamOutcome> outcome;  // set when some endpoint answered (2xx or 4xx)
    std::string endpoint;
    bool relayed = false;
  };

  /// Tries each endpoint once in `order`. 5xx and transport errors fail
  /// over; anything else is final.
  ForwardResult forward(const Snapshot& snap, const std::vector<std::size_t>& order, const std::string& body,
                        const Headers& headers, const Headers& inbound, const StreamRelay* relay,
                        const std::function<HttpResponse()>& head, std::vector<Attempt>& attempts,
                        std::mutex* attempts_mu, std::atomic<std::size_t>& calls) {
    ForwardResult fr;
    for (std::size_t idx : order) {
      const Endpoint& e = snap.config.endpoints.entries[idx];
      UpstreamCall call;
      call.host = e.address;
      call.port = e.port;
      call.headers = headers;
      auto s = snap.secrets.find(e.name);
      inject_auth(call.headers, inbound, e.auth, s == snap.secrets.end() ? std::string() : s->second);
      call.body = body;
      call.timeout = options_.upstream_timeout;
      call.buffer_cap = options_.stream_buffer_cap;

      bool began = false;
      ChunkRelay wrapped;
      if (relay) {
        wrapped = [&](std::string_view chunk) {
          if (!began) {
            HttpResponse h = head();
            h.headers.set("x-sr-endpoint", e.name);
            relay->begin(h);
            began = true;
          }
          return relay->chunk(chunk);
        };
      }
      ++calls;
      metrics_.add(Metrics::series("srouter_upstream_requests_total", {{"endpoint", e.name}}));
      UpstreamOutcome o = upstream_->send(call, relay ? &wrapped : nullptr);
      Attempt a{e.name, o.status, ""};
      if (o.status == 0) {
        a.outcome = "transport: " + o.error;
      } else if (o.status >= 500) {
        a.outcome = "http_5xx";
      } else {
        a.outcome = o.status < 300 ? "ok" : "client_error";
      }
      {
        std::unique_lock<std::mutex> lock;
        if (attempts_mu) lock = std::unique_lock(*attempts_mu);
        attempts.push_back(a);
      }
      if (o.status == 0 || o.status >= 500) {
        metrics_.add(Metrics::series("srouter_upstream_failures_total", {{"endpoint", e.name}}));
        continue;
      }
      fr.outcome = std::move(o);
      fr.endpoint = e.name;
      fr.relayed = began;
      return fr;
    }
    return fr;
  }

  static HttpResponse exhausted(const std::vector<Attempt>& attempts) {
    OrderedJson list = OrderedJson::array();
    for (const auto& a : attempts) list.push_back({{"endpoint", a.endpoint}, {"status", a.status}, {"outcome", a.outcome}});
    OrderedJson j;
    j["error"] = {{"type", "upstream_exhausted"},
                  {"message", "every endpoint failed"},
                  {"code", 502},
                  {"attempts", list}};
    HttpResponse r;
    r.status = 502;
    r.body = j.dump();
    return r;
  }

  void set_route_headers(HttpResponse& r, const Exchange& ex) const {
    if (ex.decision) r.headers.set("x-sr-decision", *ex.decision);
    if (ex.model) r.headers.set("x-sr-model", *ex.model);
    if (ex.endpoint) r.headers.set("x-sr-endpoint", *ex.endpoint);
    if (auto c = ex.annotation("cache")) r.headers.set("x-sr-cache", *c);
  }

  void count_response(const Exchange& ex) {
    metrics_.add(Metrics::series("srouter_requests_total", {{"decision", ex.decision.value_or("")},
                                                           {"status", std::to_string(ex.response.status)}}));
  }

  Exchange run(const HttpRequest& req, const StreamRelay* relay, const Turn* turn) {
    using Clock = std::chrono::steady_clock;
    const auto started = Clock::now();
    Exchange ex;
    const auto snap = snapshot();
    ex.stages = {Stage::kApiTranslation, Stage::kParseDetect};

    ChatRequest chat;
    try {
      chat = parse_chat_request(req.body, req.headers);
    } catch (const RequestError& e) {
      ex.response = error_response(e.status(), "invalid_request_error", e.what());
      count_response(ex);
      return ex;
    }

    ex.stages.push_back(Stage::kSignalsAndDecision);
    const SignalVector sv = snap->engine->evaluate(chat.view);
    const MatchResult match = select_decision(snap->config, sv);
    {
      std::string summary;
      for (const auto& [k, r] : sv) {
        if (r.matched) summary += (summary.empty() ? "" : ",") + to_string(k);
      }
      ex.annotations.emplace_back("signals", summary);
    }

    PluginContext ctx;
    ctx.request = chat.view;
    ctx.signals = sv;
    const Decision* decision = find_decision(*snap, match);
    PluginServices svc = plugin_services(*snap);
    // Releases a pending cache entry on every early exit.
    struct PendingGuard {
      PluginContext& ctx;
      ~PendingGuard() {
        if (ctx.cache_leader && ctx.cache) ctx.cache->fail(ctx.cache_query);
      }
    } guard{ctx};

    std::vector<ModelRef> candidates;
    if (decision) {
      ex.decision = decision->name;
      ctx.decision = decision;
      ctx = run_request_chain(std::move(ctx), svc);
      record_plugin_stages(ctx, ex.stages);
      ex.annotations.insert(ex.annotations.end(), ctx.annotations.begin(), ctx.annotations.end());
      if (ctx.short_circuit) {
        const ShortCircuit& sc = *ctx.short_circuit;
        ex.short_circuit = sc.source;
        ex.response.status = sc.status;
        ex.response.content_type = sc.content_type;
        ex.response.body = sc.body;
        set_route_headers(ex.response, ex);
        metrics_.add(Metrics::series("srouter_short_circuits_total", {{"source", sc.source}}));
        count_response(ex);
        return ex;
      }
      candidates = ctx.model_override.value_or(decision->model_refs);
    } else if (auto c = fallback_candidates(*snap, match, chat.view)) {
      candidates = *c;
      ex.annotations.emplace_back("decision", "fallback");
    } else {
      ex.response = error_response(502, "no_route", "no decision matched and no default_model is configured");
      count_response(ex);
      return ex;
    }

    ex.stages.push_back(Stage::kSelectAndMutate);
    const Headers headers = outbound_headers(ctx.request.headers);
    const std::optional<std::string> session = ctx.request.headers.get(options_.session_header);
    std::atomic<std::size_t> calls{0};

    const auto* remom = decision ? dynamic_cast<const RemomSelector*>(snap->selectors.at(decision->name).get()) : nullptr;
    UpstreamReply reply;
    std::optional<UpstreamOutcome> outcome;
    bool relayed = false;
    bool sse = false;

    if (remom && !ctx.model_override) {
      ex.stages.push_back(Stage::kEndpointResolution);
      std::mutex mu;
      std::optional<Usage> total;
      std::string last_model;
      const auto invoke = [&](const RemomCall& call) -> RemomReference {
        std::vector<Message> msgs = ctx.request.messages;
        for (auto it = msgs.rbegin(); it != msgs.rend(); ++it) {
          if (it->role == "user") {
            it->content = call.prompt;
            break;
          }
        }
        OrderedJson doc = OrderedJson::parse(body_for(chat.doc, ref_for(candidates, call.model), msgs, false));
        doc["temperature"] = call.temperature;
        doc["seed"] = call.seed;
        const auto order = resolver_.resolve(snap->config.endpoints, call.model, session);
        if (order.empty()) throw Error("no endpoint serves model '" + call.model + "'");
        auto fr = forward(*snap, order, doc.dump(), headers, chat.view.headers, nullptr, {}, ex.attempts, &mu, calls);
        if (!fr.outcome || fr.outcome->status >= 300) throw Error("remom call to '" + call.model + "' failed");
        const OrderedJson body = OrderedJson::parse(fr.outcome->body, nullptr, false);
        RemomReference ref;
        ref.response = completion_content(fr.outcome->body).value_or("");
        if (!body.is_discarded() && body.contains("choices") && !body["choices"].empty()) {
          ref.reasoning = body["choices"][0]["message"].value("reasoning_content", std::string());
        }
        std::lock_guard lock(mu);
        if (auto u = body.is_discarded() ? std::nullopt : usage_of(body)) {
          if (!total) total = Usage{};
          total->prompt += u->prompt;
          total->completion += u->completion;
        }
        if (call.round > 0) last_model = call.model;
        return ref;
      };
      std::vector<std::string> models;
      for (const auto& c : candidates) models.push_back(c.model);
      RemomResult result;
      try {
        result = run_remom(ctx.request.latest_user_text(), models, remom->params(), invoke);
      } catch (const std::exception& e) {
        ex.upstream_calls = calls.load();
        ex.response = ex.attempts.empty() || std::none_of(ex.attempts.begin(), ex.attempts.end(),
                                                          [](const Attempt& a) { return a.outcome != "ok"; })
                          ? error_response(502, "remom_failed", e.what())
                          : exhausted(ex.attempts);
        count_response(ex);
        return ex;
      }
      ex.upstream_calls = calls.load();
      ex.model = last_model.empty() ? models.front() : last_model;
      ex.annotations.emplace_back("remom.calls", std::to_string(result.calls));
      CompletionMeta meta = svc.meta;
      meta.model = *ex.model;
      OrderedJson c = chat_completion(meta, result.response);
      if (total) {
        c["usage"] = {{"prompt_tokens", total->prompt},
                      {"completion_tokens", total->completion},
                      {"total_tokens", total->prompt + total->completion}};
      }
      reply = {200, c.dump()};
      ex.usage = total;
    } else {
      Selection chosen;
      try {
        chosen = choose_model(*snap, decision, candidates, ctx, match, turn);
      } catch (const std::exception& e) {
        ex.response = error_response(502, "selection_failed", e.what());
        count_response(ex);
        return ex;
      }
      ex.model = chosen.model;
      const std::string body = body_for(chat.doc, ref_for(candidates, chosen.model), ctx.request.messages);

      ex.stages.push_back(Stage::kEndpointResolution);
      const auto order = resolver_.resolve(snap->config.endpoints, chosen.model, session);
      if (order.empty()) {
        ex.response = error_response(502, "no_endpoint", "no endpoint serves model '" + chosen.model + "'");
        set_route_headers(ex.response, ex);
        count_response(ex);
        return ex;
      }
      const StreamRelay* r = chat.view.stream && relay ? relay : nullptr;
      const auto head = [&] {
        HttpResponse h;
        h.status = 200;
        h.content_type = "text/event-stream";
        set_route_headers(h, ex);
        return h;
      };
      auto fr = forward(*snap, order, body, headers, chat.view.headers, r, head, ex.attempts, nullptr, calls);
      ex.upstream_calls = calls.load();
      if (!fr.outcome) {
        ex.response = exhausted(ex.attempts);
        set_route_headers(ex.response, ex);
        count_response(ex);
        return ex;
      }
      ex.endpoint = fr.endpoint;
      outcome = std::move(fr.outcome);
      relayed = fr.relayed;
      reply = {outcome->status, outcome->body};
      ex.ttft_ms = outcome->ttft_ms;
      metrics_.observe("srouter_ttft_ms", outcome->ttft_ms);
      latency_.observe(chosen.model, LatencyMetric::kTtft, outcome->ttft_ms);
      if (!outcome->error.empty()) ex.annotations.emplace_back("upstream.error", outcome->error);

      sse = chat.view.stream && (outcome->content_type.rfind("text/event-stream", 0) == 0 || relayed);
      if (sse) {
        if (outcome->truncated) {
          ex.annotations.emplace_back("response_path", "stream exceeded the buffer cap; halugate and cache write skipped");
          reply.status = 0;  // makes the response chain release the cache entry
        } else {
          const StreamSummary s = summarize_sse(outcome->body);
          ex.usage = s.usage;
          const double tokens = static_cast<double>(s.usage ? s.usage->completion : static_cast<std::int64_t>(s.content_chunks));
          ex.tpot_ms = (outcome->total_ms - outcome->ttft_ms) / std::max(1.0, tokens);
          metrics_.observe("srouter_tpot_ms", *ex.tpot_ms);
          latency_.observe(chosen.model, LatencyMetric::kTpot, *ex.tpot_ms);
          if (outcome->status >= 200 && outcome->status < 300) {
            CompletionMeta meta = svc.meta;
            meta.model = s.model.empty() ? chosen.model : s.model;
            OrderedJson c = chat_completion(meta, s.content);
            if (s.usage) {
              c["usage"] = {{"prompt_tokens", s.usage->prompt},
                            {"completion_tokens", s.usage->completion},
                            {"total_tokens", s.usage->prompt + s.usage->completion}};
            }
            reply.body = c.dump();
          }
        }
      } else {
        const OrderedJson doc = OrderedJson::parse(outcome->body, nullptr, false);
        if (!doc.is_discarded()) ex.usage = usage_of(doc);
      }
      if (decision) {
        const auto* sel = snap->selectors.at(decision->name).get();
        SelectionFeedback fb;
        fb.model = chosen.model;
        fb.success = outcome->status >= 200 && outcome->status < 300;
        const_cast<Selector*>(sel)->feedback(fb);
      }
    }

    if (ex.usage) {
      metrics_.add("srouter_prompt_tokens_total", static_cast<double>(ex.usage->prompt));
      metrics_.add("srouter_completion_tokens_total", static_cast<double>(ex.usage->completion));
    } else {
      ex.annotations.emplace_back("usage", "absent");
    }

    if (sse) {
      // The client gets the upstream event stream as is; the chain only
      // sees the reconstructed completion.
      ex.streamed = relayed;
      ex.response.status = outcome->status;
      ex.response.content_type = "text/event-stream";
      if (!relayed) ex.response.body = outcome->body;
      if (decision && reply.status != 0) {
        PluginContext side = ctx;
        const ResponseResult rr = run_response_chain(side, reply, svc);
        ctx.cache_leader = side.cache_leader;
        if (auto h = side.annotation("halugate")) ex.annotations.emplace_back("halugate", *h + " (stream already sent)");
        (void)rr;
      }
    } else if (decision) {
      const ResponseResult rr = run_response_chain(ctx, reply, svc);
      if (auto h = ctx.annotation("halugate")) ex.annotations.emplace_back("halugate", *h);
      ex.response.status = rr.status;
      ex.response.body = rr.body;
      for (const auto& [k, v] : rr.headers.all()) ex.response.headers.set(k, v);
    } else {
      ex.response.status = reply.status;
      ex.response.body = reply.body;
    }
    if (!sse) {
      ex.response.content_type = outcome && chat.view.stream && !outcome->content_type.empty() ? outcome->content_type
                                                                                               : "application/json";
      if (remom && chat.view.stream) {
        ex.response.content_type = "text/event-stream";
        CompletionMeta meta = svc.meta;
        meta.model = ex.model.value_or("");
        ex.response.body = sse_body(completion_sse_events(meta, completion_content(ex.response.body).value_or("")));
      }
    }
    set_route_headers(ex.response, ex);
    metrics_.observe("srouter_request_ms", std::chrono::duration<double, std::milli>(Clock::now() - started).count());
    count_response(ex);
    return ex;
  }

  std::shared_ptr<UpstreamClient> upstream_;
  GatewayServices services_;
  GatewayOptions options_;
  EndpointResolver resolver_;
  ConversationStore conversations_;
  Metrics metrics_;
  LatencyStore latency_;
  std::unique_ptr<CacheRegistry> caches_;
  mutable std::mutex snapshot_mu_;
  std::shared_ptr<Snapshot> snapshot_;
};

}  // namespace srouter::gateway
