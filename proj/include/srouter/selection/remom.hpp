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
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "srouter/core/error.hpp"
#include "srouter/core/text.hpp"

namespace srouter {

enum class RemomDistribution { kEqual, kWeighted, kFirstOnly };
enum class RemomCompaction { kFull, kLastNTokens };

inline RemomDistribution parse_remom_distribution(std::string_view s) {
  if (s == "equal") return RemomDistribution::kEqual;
  if (s == "weighted") return RemomDistribution::kWeighted;
  if (s == "first_only") return RemomDistribution::kFirstOnly;
  throw SelectionError("unknown remom distribution '" + std::string(s) + "'");
}

/// Appends the final single-call round.
inline std::vector<std::int64_t> remom_schedule(const std::vector<std::int64_t>& breadth) {
  for (auto b : breadth) {
    if (b < 1) throw SelectionError("remom breadth entries must be >= 1");
  }
  std::vector<std::int64_t> out = breadth;
  out.push_back(1);
  return out;
}

/// Calls per candidate for one round. Weighted is currently the same as
/// equal.
inline std::vector<std::int64_t> remom_distribute(std::int64_t calls, std::size_t candidates, RemomDistribution d) {
  if (calls < 1) throw SelectionError("remom round needs at least one call");
  if (candidates == 0) throw SelectionError("remom needs at least one candidate");
  std::vector<std::int64_t> counts(candidates, 0);
  if (d == RemomDistribution::kFirstOnly) {
    counts[0] = calls;
    return counts;
  }
  const auto n = static_cast<std::int64_t>(candidates);
  for (std::size_t i = 0; i < candidates; ++i) counts[i] = calls / n + (static_cast<std::int64_t>(i) < calls % n ? 1 : 0);
  return counts;
}

struct RemomCallPlan {
  std::size_t candidate = 0;
  std::uint64_t seed = 0;
};

/// Call order for a round: candidate blocks in candidate order, each call
/// with seed base + call index.
inline std::vector<RemomCallPlan> remom_plan(std::int64_t calls, std::size_t candidates, RemomDistribution d,
                                             std::uint64_t seed) {
  std::vector<RemomCallPlan> plan;
  const auto counts = remom_distribute(calls, candidates, d);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::int64_t k = 0; k < counts[c]; ++k) plan.push_back({c, seed + plan.size()});
  }
  return plan;
}

/// Keeps the last 4*N code points when compacting.
inline std::string compact_response(std::string_view response, RemomCompaction mode, std::int64_t tokens) {
  if (mode == RemomCompaction::kFull) return std::string(response);
  const auto cps = text::decode(response);
  const auto budget = static_cast<std::size_t>(std::max<std::int64_t>(tokens, 0) * 4);
  if (cps.size() <= budget) return std::string(response);
  return text::encode(std::u32string_view(cps).substr(cps.size() - budget));
}

struct RemomReference {
  std::string response;
  std::string reasoning;
};

inline constexpr std::string_view kDefaultRemomTemplate =
    "Question:\n{{query}}\n\n"
    "Candidate answers from other models:\n"
    "{{#references}}\n[{{index}}]\n"
    "{{#reasoning}}Reasoning:\n{{reasoning}}\n{{/reasoning}}"
    "{{response}}\n{{/references}}\n"
    "Review the numbered answers above, then write a complete, self-contained answer to the question.";

namespace detail {

// Minimal section template: {{query}}, {{#references}}..{{/references}}, and
// inside a reference {{index}}, {{response}}, {{reasoning}} and the
// conditional {{#reasoning}}..{{/reasoning}}.
class RemomTemplate {
 public:
  explicit RemomTemplate(std::string_view src) : src_(src) {}

  std::string render(std::string_view query, const std::vector<RemomReference>& refs) const {
    std::string out;
    std::size_t pos = 0;
    render_block(out, pos, "", query, refs, nullptr, 0);
    return out;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& why) const {
    throw SelectionError("remom template error at offset " + std::to_string(at) + ": " + why);
  }

  // Renders until {{/closing}} (or end when closing is empty); `ref` is the
  // current reference inside a references section.
  void render_block(std::string& out, std::size_t& pos, std::string_view closing, std::string_view query,
                    const std::vector<RemomReference>& refs, const RemomReference* ref, std::size_t index) const {
    while (pos < src_.size()) {
      const std::size_t open = src_.find("{{", pos);
      if (open == std::string_view::npos) {
        out.append(src_.substr(pos));
        pos = src_.size();
        break;
      }
      out.append(src_.substr(pos, open - pos));
      const std::size_t close = src_.find("}}", open + 2);
      if (close == std::string_view::npos) fail(open, "unterminated tag");
      const std::string tag = text::trim(src_.substr(open + 2, close - open - 2));
      pos = close + 2;
      if (tag.empty()) fail(open, "empty tag");
      if (tag[0] == '/') {
        if (tag.substr(1) != closing) fail(open, "unexpected closing tag '" + tag + "'");
        return;
      }
      if (tag[0] == '#') {
        const std::string section = tag.substr(1);
        if (section == "references" && !ref) {
          const std::size_t body = pos;
          if (refs.empty()) {
            std::string sink;
            render_block(sink, pos, section, query, refs, &kEmpty, 0);
          }
          for (std::size_t i = 0; i < refs.size(); ++i) {
            pos = body;
            render_block(out, pos, section, query, refs, &refs[i], i + 1);
          }
        } else if (section == "reasoning" && ref) {
          std::string sink;
          render_block(ref->reasoning.empty() ? sink : out, pos, section, query, refs, ref, index);
        } else {
          fail(open, "unknown section '" + section + "'");
        }
        continue;
      }
      if (tag == "query") {
        out.append(query);
      } else if (tag == "index" && ref) {
        out += std::to_string(index);
      } else if (tag == "response" && ref) {
        out += ref->response;
      } else if (tag == "reasoning" && ref) {
        out += ref->reasoning;
      } else {
        fail(open, "unknown tag '" + tag + "'");
      }
    }
    if (!closing.empty()) fail(src_.size(), "missing {{/" + std::string(closing) + "}}");
  }

  static inline const RemomReference kEmpty{};
  std::string_view src_;
};

}  // namespace detail

/// Synthesis prompt from the previous round's responses.
inline std::string remom_synthesis_prompt(std::string_view query, const std::vector<RemomReference>& refs,
                                          std::string_view tmpl = kDefaultRemomTemplate,
                                          RemomCompaction compaction = RemomCompaction::kFull,
                                          std::int64_t compaction_tokens = 512) {
  if (refs.empty()) throw SelectionError("remom synthesis needs at least one prior response");
  std::vector<RemomReference> compacted;
  for (const auto& r : refs) {
    compacted.push_back({compact_response(r.response, compaction, compaction_tokens),
                         compact_response(r.reasoning, compaction, compaction_tokens)});
  }
  return detail::RemomTemplate(tmpl).render(query, compacted);
}

struct RemomParams {
  std::vector<std::int64_t> breadth;
  RemomDistribution distribution = RemomDistribution::kEqual;
  RemomCompaction compaction = RemomCompaction::kFull;
  std::int64_t compaction_tokens = 512;
  double temperature = 1.0;
  std::int64_t concurrency = 8;
  std::string template_text{kDefaultRemomTemplate};
  std::uint64_t seed = 0;
};

struct RemomCall {
  std::size_t round = 0;
  std::size_t index = 0;
  std::string model;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::string prompt;
};

using RemomInvoker = std::function<RemomReference(const RemomCall&)>;

struct RemomResult {
  std::string response;
  std::vector<std::vector<RemomReference>> rounds;
  std::size_t calls = 0;
};

/// Executes every round; calls within a round run concurrently up to the
/// concurrency limit and are collected in call-index order.
inline RemomResult run_remom(const std::string& query, const std::vector<std::string>& models,
                             const RemomParams& params, const RemomInvoker& invoke) {
  if (models.empty()) throw SelectionError("remom needs at least one candidate");
  const auto schedule = remom_schedule(params.breadth);
  RemomResult result;
  std::uint64_t seed = params.seed;
  for (std::size_t r = 0; r < schedule.size(); ++r) {
    const std::string prompt =
        r == 0 ? query
               : remom_synthesis_prompt(query, result.rounds.back(), params.template_text, params.compaction,
                                        params.compaction_tokens);
    const auto plan = remom_plan(schedule[r], models.size(), params.distribution, seed);
    seed += plan.size();
    std::vector<RemomReference> replies(plan.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    const auto worker = [&] {
      for (std::size_t i = next++; i < plan.size(); i = next++) {
        try {
          replies[i] = invoke({r, i, models[plan[i].candidate], plan[i].seed, params.temperature, prompt});
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    };
    const auto limit = static_cast<std::size_t>(std::max<std::int64_t>(1, params.concurrency));
    const std::size_t threads = std::min(limit, plan.size());
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    result.calls += plan.size();
    result.rounds.push_back(std::move(replies));
  }
  result.response = result.rounds.back().front().response;
  return result;
}

}  // namespace srouter
