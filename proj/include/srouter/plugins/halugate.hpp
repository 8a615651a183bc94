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

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "srouter/config/types.hpp"
#include "srouter/signals/classifier.hpp"

namespace srouter {

/// Byte range of the response flagged by the detector, with the
/// explainer's label.
struct HaluSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string label;
};

/// The three checking stages. Any stage may be left empty to use its default:
/// the phrase-table sentinel, and detector/explainer mocks that find nothing.
struct HaluStages {
  std::function<bool(std::string_view query)> sentinel;
  std::function<std::vector<HaluSpan>(std::string_view query, std::string_view context, std::string_view response)>
      detector;
  std::function<std::string(std::string_view response, const HaluSpan& span)> explainer;
};

struct HaluOutcome {
  int status = 200;
  std::string content;  // response text after the action
  bool blocked = false;
  bool checked = false;  // sentinel let the response through to the detector
  std::vector<HaluSpan> spans;
  std::optional<std::string> header;  // x-sr-halugate value
  std::string annotation;
  std::string error;  // stage failure, treated as no detection
  int detector_calls = 0;
};

inline constexpr std::string_view kHaluWarning =
    "[Warning: parts of this response could not be verified against the provided context.]\n\n";

inline std::string halugate_error_body() {
  return nlohmann::json{{"error",
                         {{"message", "response rejected: unsupported claims detected"},
                          {"type", "hallucination_detected"},
                          {"code", 422}}}}
      .dump();
}

inline std::string halugate_metadata(const std::vector<HaluSpan>& spans) {
  std::string out = "spans=" + std::to_string(spans.size());
  if (!spans.empty()) {
    out += ";labels=";
    for (std::size_t i = 0; i < spans.size(); ++i) out += (i ? "," : "") + spans[i].label;
  }
  return out;
}

inline HaluOutcome halugate_run(std::string_view query, std::string_view context, std::string_view response,
                                const HaluStages& stages, HaluAction action) {
  HaluOutcome out;
  out.content = std::string(response);
  try {
    const bool factual = stages.sentinel ? stages.sentinel(query) : sentinel_needs_fact_check(query);
    if (!factual) {
      out.annotation = "skipped";
      return out;
    }
    out.checked = true;
    ++out.detector_calls;
    out.spans = stages.detector ? stages.detector(query, context, response) : std::vector<HaluSpan>{};
    for (auto& s : out.spans) {
      if (stages.explainer) {
        s.label = stages.explainer(response, s);
      } else if (s.label.empty()) {
        s.label = "unsupported";
      }
    }
  } catch (const std::exception& e) {
    out.spans.clear();
    out.error = e.what();
    out.annotation = "error";
    return out;
  }
  if (out.spans.empty()) {
    out.annotation = "clean";
    return out;
  }
  out.annotation = "detected;" + halugate_metadata(out.spans);
  switch (action) {
    case HaluAction::kBlock:
      out.status = 422;
      out.blocked = true;
      out.content.clear();
      break;
    case HaluAction::kHeader:
      out.header = halugate_metadata(out.spans);
      break;
    case HaluAction::kBody:
      out.content = std::string(kHaluWarning) + out.content;
      break;
    case HaluAction::kNone:
      break;
  }
  return out;
}

/// C_sent + p * (C_det + k * C_nli)
inline double halugate_expected_cost(double c_sent, double p_factual, double c_det, double k_bar, double c_nli) {
  return c_sent + p_factual * (c_det + k_bar * c_nli);
}

}  // namespace srouter
